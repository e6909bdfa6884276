use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ldp_drift::diffusion_sim::{
    read_panel_binary, read_panel_csv, simulate_panel, write_panel_binary, write_panel_csv, PathPanel,
    TimeGrid,
};
use ldp_drift::estimator::{estimate, EstimateOptions, Regime, ThetaGrid};
use ldp_drift::harness::{
    ldp_check, oracle_sigma0, run_clt, run_consistency, run_effective_privacy, run_polynomial_drift,
    spline_check, write_json, write_report, ExperimentConfig, Gate,
};
use ldp_drift::privacy::{
    privatize, privatize_aggregate, write_aggregate_csv, write_public_panel, ChannelParams, ClipProfile,
    NoiseMode,
};

#[derive(Parser)]
#[command(name = "ldp-drift", version, about = "Drift estimation for diffusions under componentwise LDP")]
struct Cli {
    /// Experiment configuration, JSON or TOML (by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the configured one, else `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PanelFormat {
    Csv,
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Negligible,
    Significant,
    Threshold,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Negligible => Regime::Negligible,
            RegimeArg::Significant => Regime::Significant,
            RegimeArg::Threshold => Regime::Threshold,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the first ladder rung and write the panel.
    Simulate {
        #[arg(long, value_enum, default_value = "csv")]
        format: PanelFormat,
    },
    /// Privatize a panel (simulated, or read with --panel) and write the public data.
    Privatize {
        #[arg(long)]
        panel: Option<PathBuf>,
    },
    /// Estimate θ from a panel (simulated, or read with --panel).
    Estimate {
        #[arg(long)]
        panel: Option<PathBuf>,
    },
    /// Median error along the ladder.
    Consistency,
    /// Normalized errors against the limit law of a regime.
    Clt {
        #[arg(long, value_enum)]
        regime: RegimeArg,
    },
    /// Constant-L ladder for drifts polynomial in θ.
    Polydrift,
    /// α = α_eff / n ladder.
    Effpriv,
    /// Worst-case log density ratio of the channel.
    VerifyLdp {
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
    },
    /// Hermite spline checks.
    Splinecheck,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().context("--config is required for this subcommand")?;
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn print_gates(title: &str, gates: &[Gate]) {
    for g in gates {
        let status = match (g.hard, g.pass) {
            (true, true) => "PASS",
            (true, false) => "FAIL",
            (false, true) => "info-ok",
            (false, false) => "info-off",
        };
        println!("{status:8} {title}/{} = {} (band {})", g.name, g.observed, g.band());
    }
}

fn load_panel(path: &Path, cfg: &ExperimentConfig) -> Result<PathPanel> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(if is_csv {
        read_panel_csv(BufReader::new(file), cfg.theta_star, cfg.seed)?
    } else {
        read_panel_binary(BufReader::new(file))?
    })
}

fn panel_for(cfg: &ExperimentConfig, path: Option<&Path>) -> Result<PathPanel> {
    if let Some(p) = path {
        return load_panel(p, cfg);
    }
    let rung = cfg.ladder[0];
    let model = cfg.model.build()?;
    Ok(simulate_panel(
        &model,
        cfg.theta_star,
        rung.n_paths,
        TimeGrid::new(cfg.horizon, rung.n_steps)?,
        &cfg.simulation,
        cfg.seed,
    )?)
}

fn channel_for(cfg: &ExperimentConfig, panel: &PathPanel) -> Result<ChannelParams> {
    let n = panel.grid().steps();
    let len = cfg.ladder[0].grid_len;
    let grid = if cfg.random_grid {
        ThetaGrid::random(len, cfg.seed, 0)?
    } else {
        ThetaGrid::deterministic(len)?
    };
    Ok(ChannelParams::new(
        grid,
        cfg.a,
        cfg.alpha.budget(n)?,
        ClipProfile::new(cfg.clip, panel.grid().delta(), n)?,
        cfg.noise,
    )?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Simulate { format } => {
            let cfg = load_config(cli)?;
            let dir = out_dir(cli, Some(&cfg));
            std::fs::create_dir_all(&dir)?;
            let panel = panel_for(&cfg, None)?;
            let path = match format {
                PanelFormat::Csv => {
                    let p = dir.join("panel.csv");
                    let mut w = create(&p)?;
                    write_panel_csv(&panel, &mut w)?;
                    w.flush()?;
                    p
                }
                PanelFormat::Binary => {
                    let p = dir.join("panel.bin");
                    let mut w = create(&p)?;
                    write_panel_binary(&panel, &mut w)?;
                    w.flush()?;
                    p
                }
            };
            println!("wrote {}", path.display());
            Ok(true)
        }
        Command::Privatize { panel } => {
            let cfg = load_config(cli)?;
            let dir = out_dir(cli, Some(&cfg));
            std::fs::create_dir_all(&dir)?;
            let data = panel_for(&cfg, panel.as_deref())?;
            let model = cfg.model.build()?;
            let params = channel_for(&cfg, &data)?;
            let agg = if params.noise == NoiseMode::AggregateInLaw {
                privatize_aggregate(&data, &model, &params, cfg.seed)?
            } else {
                let public = privatize(&data, &model, &params, cfg.seed)?;
                let mut h = create(&dir.join("public_header.json"))?;
                let mut d = create(&dir.join("public_panel.f64"))?;
                write_public_panel(&public, &mut h, &mut d)?;
                writeln!(h)?;
                h.flush()?;
                d.flush()?;
                public.aggregate()
            };
            let mut w = create(&dir.join("aggregate.csv"))?;
            write_aggregate_csv(&agg, &mut w)?;
            w.flush()?;
            println!("wrote public data to {}", dir.display());
            Ok(true)
        }
        Command::Estimate { panel } => {
            let cfg = load_config(cli)?;
            let dir = out_dir(cli, Some(&cfg));
            let data = panel_for(&cfg, panel.as_deref())?;
            let model = cfg.model.build()?;
            let params = channel_for(&cfg, &data)?;
            let sigma0 = oracle_sigma0(&cfg, &model, data.grid().steps())?;
            let options = EstimateOptions {
                cutoffs: cfg.cutoffs,
                maximize: cfg.maximize,
                sigma0: Some(sigma0.value),
                config_digest: cfg.digest(),
            };
            let res = estimate(&data, &model, &params, &options, cfg.seed)?;
            write_json(&res, &dir.join("estimate.json"))?;
            println!(
                "theta_hat = {} (regime {}, r_nN = {})",
                res.theta_hat, res.regime, res.r_nn
            );
            Ok(true)
        }
        Command::Consistency | Command::Clt { .. } | Command::Polydrift | Command::Effpriv => {
            let cfg = load_config(cli)?;
            let dir = out_dir(cli, Some(&cfg));
            let report = match &cli.command {
                Command::Consistency => run_consistency(&cfg)?,
                Command::Clt { regime } => run_clt(&cfg, (*regime).into())?,
                Command::Polydrift => run_polynomial_drift(&cfg)?,
                _ => run_effective_privacy(&cfg)?,
            };
            let wall: f64 = report.records.iter().map(|r| r.wall_time).sum();
            eprintln!(
                "{}: {} replications, {wall:.1} s of replication time",
                report.experiment,
                report.records.len()
            );
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            for path in write_report(&report, &dir)? {
                eprintln!("wrote {}", path.display());
            }
            print_gates(&report.experiment, &report.gates);
            Ok(report.passed())
        }
        Command::VerifyLdp { pairs } => {
            let cfg = load_config(cli)?;
            let dir = out_dir(cli, Some(&cfg));
            let report = ldp_check(&cfg, *pairs)?;
            write_json(&report, &dir.join("verify_ldp.json"))?;
            print_gates(&report.check, &report.gates);
            Ok(report.passed())
        }
        Command::Splinecheck => {
            let seed = match (&cli.config, cli.seed) {
                (_, Some(s)) => s,
                (Some(_), None) => load_config(cli)?.seed,
                (None, None) => 0,
            };
            let dir = out_dir(cli, None);
            let report = spline_check(seed)?;
            write_json(&report, &dir.join("splinecheck.json"))?;
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            print_gates(&report.check, &report.gates);
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.threads {
        Some(0) => Err(anyhow::anyhow!("--threads must be at least 1")),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .context("building the thread pool")
            .and_then(|pool| pool.install(|| run(&cli))),
        None => run(&cli),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

