use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiments::{ExperimentReport, ReplicationRecord, RungSummary};
use crate::error::Result;

fn opt<T: Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const RECORD_HEADER: &str =
    "arm,rung,replication,seed,n_paths,n_steps,grid_len,grid_shift,theta_hat,error,normalized_error,v_n_star,r_nN,regime";

pub const SUMMARY_HEADER: &str = "arm,rung,n_paths,n_steps,grid_len,alpha_bar2,alpha_eff,r_nN,regime,sigma0,sigma0_stderr,\
replications,median_abs_error,q25_abs_error,q75_abs_error,mean_error,mean_normalized,variance_normalized,\
skewness_normalized,stderr_normalized,predicted_variance,variance_ratio,corrected_variance,ks_statistic";

pub fn write_records_csv<W: Write>(records: &[ReplicationRecord], mut out: W) -> Result<()> {
    writeln!(out, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.arm,
            r.rung,
            r.replication,
            r.seed,
            r.n_paths,
            r.n_steps,
            r.grid_len,
            r.grid_shift,
            r.theta_hat,
            r.error,
            r.normalized_error,
            opt(r.v_n_star),
            r.r_nn,
            r.regime
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(rows: &[RungSummary], mut out: W) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.arm,
            s.rung,
            s.n_paths,
            s.n_steps,
            s.grid_len,
            s.alpha_bar2,
            s.alpha_eff,
            s.r_nn,
            s.regime,
            s.sigma0,
            s.sigma0_stderr,
            s.replications,
            s.median_abs_error,
            s.q25_abs_error,
            s.q75_abs_error,
            s.mean_error,
            s.mean_normalized,
            s.variance_normalized,
            s.skewness_normalized,
            s.stderr_normalized,
            opt(s.predicted_variance),
            opt(s.variance_ratio),
            opt(s.corrected_variance),
            opt(s.ks_statistic)
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Write `<name>_replications.csv`, `<name>_summary.csv` and `<name>.json` into `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let name = &report.experiment;
    let records = dir.join(format!("{name}_replications.csv"));
    let summary = dir.join(format!("{name}_summary.csv"));
    let json = dir.join(format!("{name}.json"));
    write_records_csv(&report.records, BufWriter::new(File::create(&records)?))?;
    write_summary_csv(&report.rungs, BufWriter::new(File::create(&summary)?))?;
    write_json(report, &json)?;
    Ok(vec![records, summary, json])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::Regime;

    fn record(v: Option<f64>) -> ReplicationRecord {
        ReplicationRecord {
            arm: "main".into(),
            rung: 0,
            replication: 3,
            seed: 42,
            n_paths: 10,
            n_steps: 20,
            grid_len: 5,
            grid_shift: 0.25,
            theta_hat: 0.5,
            error: 0.0,
            normalized_error: 0.0,
            v_n_star: v,
            r_nn: 1.5,
            regime: Regime::Threshold,
            wall_time: 9.0,
        }
    }

    #[test]
    fn record_rows_match_the_header() {
        let mut buf = Vec::new();
        write_records_csv(&[record(Some(0.1)), record(None)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let cols = RECORD_HEADER.split(',').count();
        assert_eq!(lines.len(), 3);
        for l in &lines {
            assert_eq!(l.split(',').count(), cols);
        }
        assert_eq!(lines[1], "main,0,3,42,10,20,5,0.25,0.5,0,0,0.1,1.5,threshold");
        assert!(lines[2].contains(",,1.5,"));
        assert!(!text.contains('9'));
    }

    #[test]
    fn summary_rows_match_the_header() {
        let mut buf = Vec::new();
        write_summary_csv(&[RungSummary::default()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cols = SUMMARY_HEADER.split(',').count();
        for l in text.lines() {
            assert_eq!(l.split(',').count(), cols);
        }
    }
}
