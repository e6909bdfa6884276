//! Public panel export: little-endian `f64` tensor in `(i, j, ℓ, k)` order with
//! a JSON header, and the per-`(ℓ, k)` aggregate as CSV.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::channel::{NoiseMode, PublicAggregate, PublicPanel};
use super::clip::ClipKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicHeader {
    #[serde(rename = "N")]
    pub n_paths: usize,
    pub n: usize,
    #[serde(rename = "L_n")]
    pub grid_len: usize,
    pub a: usize,
    pub grid_shift: f64,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub tau: f64,
    pub clip_sup: f64,
    pub clip: ClipKind,
    pub noise: NoiseMode,
}

impl PublicHeader {
    pub fn of(panel: &PublicPanel) -> Self {
        let p = &panel.params;
        Self {
            n_paths: panel.n_paths,
            n: panel.n_steps,
            grid_len: p.grid.len(),
            a: p.a,
            grid_shift: p.grid.shift(),
            alphas: p.budget.alphas().to_vec(),
            seed: panel.seed,
            tau: p.clip.tau(),
            clip_sup: p.clip.sup(),
            clip: p.clip.kind(),
            noise: p.noise,
        }
    }
}

pub fn write_public_panel<H: Write, D: Write>(panel: &PublicPanel, header: H, mut data: D) -> Result<()> {
    serde_json::to_writer_pretty(header, &PublicHeader::of(panel))?;
    for v in &panel.z {
        data.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(agg: &PublicAggregate, mut out: W) -> Result<()> {
    writeln!(out, "l,k,sum_z")?;
    let a = agg.params.a;
    for l in 0..agg.params.grid.len() {
        for k in 0..=a {
            writeln!(out, "{},{},{:?}", l, k, agg.get(l, k))?;
        }
    }
    Ok(())
}

/// Reads the `l,k,sum_z` table back as `sums[ℓ (a + 1) + k]`.
pub fn read_aggregate_csv<R: BufRead>(input: R, grid_len: usize, a: usize) -> Result<Vec<f64>> {
    let mut sums = vec![f64::NAN; grid_len * (a + 1)];
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line.trim() != "l,k,sum_z" {
                return Err(Error::Format(format!("unexpected CSV header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::Format(format!("line {}: malformed record", lineno + 1));
        if f.len() != 3 {
            return Err(bad());
        }
        let l: usize = f[0].trim().parse().map_err(|_| bad())?;
        let k: usize = f[1].trim().parse().map_err(|_| bad())?;
        let v: f64 = f[2].trim().parse().map_err(|_| bad())?;
        if l >= grid_len || k > a {
            return Err(bad());
        }
        sums[l * (a + 1) + k] = v;
    }
    if sums.iter().any(|v| v.is_nan()) {
        return Err(Error::Shape("aggregate table is incomplete".into()));
    }
    Ok(sums)
}
