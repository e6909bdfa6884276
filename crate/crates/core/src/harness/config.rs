use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffusion_sim::SimulationOptions;
use crate::error::{Error, Result};
use crate::estimator::{MaximizeOptions, RegimeCutoffs};
use crate::model::ModelSpec;
use crate::privacy::{ClipKind, NoiseMode, PrivacyBudget};

/// One point `(N, n, L_n)` of an experiment ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub n_paths: usize,
    pub n_steps: usize,
    pub grid_len: usize,
}

/// Privacy levels `α_1..α_n` as a function of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSchedule {
    Constant { value: f64 },
    /// Repeated cyclically up to length `n`.
    PerStep { values: Vec<f64> },
    /// `α_j = α_eff / n`.
    Effective { alpha_eff: f64 },
}

impl AlphaSchedule {
    pub fn budget(&self, n: usize) -> Result<PrivacyBudget> {
        match self {
            AlphaSchedule::Constant { value } => PrivacyBudget::constant(n, *value),
            AlphaSchedule::PerStep { values } => {
                if values.is_empty() {
                    return Err(Error::Config("per-step schedule is empty".into()));
                }
                PrivacyBudget::new((0..n).map(|j| values[j % values.len()]).collect())
            }
            AlphaSchedule::Effective { alpha_eff } => PrivacyBudget::from_effective(n, *alpha_eff),
        }
    }

    /// Same schedule with every level multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            AlphaSchedule::Constant { value } => AlphaSchedule::Constant { value: value * factor },
            AlphaSchedule::PerStep { values } => AlphaSchedule::PerStep {
                values: values.iter().map(|v| v * factor).collect(),
            },
            AlphaSchedule::Effective { alpha_eff } => AlphaSchedule::Effective {
                alpha_eff: alpha_eff * factor,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            AlphaSchedule::Constant { value } => value.is_finite() && *value > 0.0,
            AlphaSchedule::PerStep { values } => {
                !values.is_empty() && values.iter().all(|v| v.is_finite() && *v > 0.0)
            }
            AlphaSchedule::Effective { alpha_eff } => alpha_eff.is_finite() && *alpha_eff > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("privacy levels must be positive and finite: {self:?}")))
        }
    }
}

/// Hard-gate tolerances. Defaults are the desk-scale Monte Carlo bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub allowed_violations: usize,
    pub final_median_max: f64,
    pub control_slope: [f64; 2],
    pub negligible_variance: [f64; 2],
    pub negligible_ks_max: f64,
    pub significant_variance: [f64; 2],
    pub threshold_variance: [f64; 2],
    pub mean_stderrs: f64,
    pub polydrift_variance_ratio: [f64; 2],
    pub spline_error_rel: f64,
    pub effpriv_slope_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            allowed_violations: 1,
            final_median_max: 0.1,
            control_slope: [-0.65, -0.35],
            negligible_variance: [0.75, 1.3],
            negligible_ks_max: 0.08,
            significant_variance: [0.7, 1.4],
            threshold_variance: [0.7, 1.4],
            mean_stderrs: 3.0,
            polydrift_variance_ratio: [0.6, 1.6],
            spline_error_rel: 1e-8,
            effpriv_slope_band: 0.2,
        }
    }
}

/// Optional comparison arms of the consistency experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Arms {
    /// Rerun the ladder without noise and check the `N^{-1/2}` slope.
    pub noise_free_control: bool,
    /// Rerun the final rung at this constant privacy level and require a larger error.
    pub low_alpha: Option<f64>,
    /// Rerun the effective-privacy ladder with `α_eff / 2`.
    pub halved_alpha_eff: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    pub dir: Option<PathBuf>,
}

fn default_theta_star() -> f64 {
    0.5
}
fn default_horizon() -> f64 {
    1.0
}
fn default_a() -> usize {
    2
}
fn default_replications() -> usize {
    500
}
fn default_noise() -> NoiseMode {
    NoiseMode::AggregateInLaw
}
fn default_sigma0_replications() -> usize {
    4000
}
fn default_reference_draws() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default = "default_theta_star")]
    pub theta_star: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub ladder: Vec<Rung>,
    #[serde(default = "default_a")]
    pub a: usize,
    pub alpha: AlphaSchedule,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cutoffs: RegimeCutoffs,
    #[serde(default)]
    pub clip: ClipKind,
    #[serde(default = "default_noise")]
    pub noise: NoiseMode,
    /// Draw a fresh uniform grid shift per replication.
    #[serde(default)]
    pub random_grid: bool,
    #[serde(default)]
    pub simulation: SimulationOptions,
    #[serde(default)]
    pub maximize: MaximizeOptions,
    #[serde(default = "default_sigma0_replications")]
    pub sigma0_replications: usize,
    /// Size of the simulated reference sample for mixed-normal KS tests.
    #[serde(default = "default_reference_draws")]
    pub reference_draws: usize,
    /// Accept `Λ = L − 1 ≥ 1` instead of `Λ ≥ 3`.
    #[serde(default)]
    pub allow_coarse_grid: bool,
    #[serde(default)]
    pub arms: Arms,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    /// Parse JSON or TOML, chosen by extension (`.toml` is TOML, anything else JSON).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let is_toml = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let cfg = if is_toml {
            Self::from_toml(&text)?
        } else {
            Self::from_json(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() {
            return Err(Error::Config("the ladder has no rungs".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("at least one replication is required".into()));
        }
        if !(self.theta_star > 0.0 && self.theta_star < 1.0) {
            return Err(Error::Config(format!("θ* = {} must lie in (0, 1)", self.theta_star)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.a == 0 {
            return Err(Error::Config("smoothness order a must be at least 1".into()));
        }
        self.alpha.validate()?;
        let min_lambda = if self.allow_coarse_grid { 1 } else { 3 };
        for (idx, r) in self.ladder.iter().enumerate() {
            if r.n_paths == 0 || r.n_steps < 2 {
                return Err(Error::Config(format!(
                    "rung {idx}: need N ≥ 1 and n ≥ 2, got N = {}, n = {}",
                    r.n_paths, r.n_steps
                )));
            }
            if r.grid_len < min_lambda + 1 {
                return Err(Error::Config(format!(
                    "rung {idx}: Λ = L − 1 = {} is below the minimum {min_lambda}",
                    r.grid_len.saturating_sub(1)
                )));
            }
        }
        if self.noise != NoiseMode::Disabled && self.clip == ClipKind::Disabled {
            return Err(Error::Config("Laplace noise needs clipping enabled".into()));
        }
        self.model.build()?;
        Ok(())
    }

    /// θ* must be inside `[θ_0, θ_{L−1}]` for every grid the experiment can draw.
    pub fn check_theta_inside_grids(&self) -> Result<()> {
        for r in &self.ladder {
            let l = r.grid_len as f64;
            let (lo, hi) = if self.random_grid {
                (1.0 / l, (l - 1.0) / l)
            } else {
                (0.0, (l - 1.0) / l)
            };
            if !(self.theta_star >= lo && self.theta_star <= hi) {
                return Err(Error::Config(format!(
                    "θ* = {} is not inside [θ_0, θ_(L−1)] ⊇ [{lo:.4}, {hi:.4}] for L = {}",
                    self.theta_star, r.grid_len
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const JSON: &str = r#"{
        "ladder": [{"n_paths": 200, "n_steps": 100, "grid_len": 5}],
        "alpha": {"kind": "constant", "value": 1.0},
        "seed": 3
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(JSON).unwrap();
        c.validate().unwrap();
        assert_eq!(c.model, ModelSpec::Sine);
        assert_eq!(c.theta_star, 0.5);
        assert_eq!(c.replications, 500);
        assert_eq!(c.noise, NoiseMode::AggregateInLaw);
        assert_eq!(c.tolerances.negligible_variance, [0.75, 1.3]);
    }

    #[test]
    fn toml_and_json_agree() {
        let toml_text = r#"
seed = 3
[[ladder]]
n_paths = 200
n_steps = 100
grid_len = 5
[alpha]
kind = "constant"
value = 1.0
"#;
        let a = ExperimentConfig::from_json(JSON).unwrap();
        let b = ExperimentConfig::from_toml(toml_text).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn digest_tracks_content() {
        let a = ExperimentConfig::from_json(JSON).unwrap();
        let mut b = a.clone();
        b.seed = 4;
        assert_eq!(a.digest().len(), 64);
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = ExperimentConfig::from_json(JSON).unwrap();
        let mut c = base.clone();
        c.ladder[0].grid_len = 3;
        assert!(c.validate().is_err());
        c.allow_coarse_grid = true;
        assert!(c.validate().is_ok());
        let mut c = base.clone();
        c.alpha = AlphaSchedule::Constant { value: 0.0 };
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.replications = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.theta_star = 1.0;
        assert!(c.validate().is_err());
        let mut c = base;
        c.clip = ClipKind::Disabled;
        assert!(c.validate().is_err());
    }

    #[test]
    fn theta_must_be_covered_by_every_shifted_grid() {
        let mut c = ExperimentConfig::from_json(JSON).unwrap();
        c.theta_star = 0.1;
        assert!(c.check_theta_inside_grids().is_ok());
        c.random_grid = true;
        assert!(c.check_theta_inside_grids().is_err());
        c.theta_star = 0.9;
        assert!(c.check_theta_inside_grids().is_err());
    }

    #[test]
    fn schedules_build_budgets() {
        let b = AlphaSchedule::PerStep { values: vec![0.5, 1.0] }.budget(5).unwrap();
        assert_eq!(b.alphas(), &[0.5, 1.0, 0.5, 1.0, 0.5]);
        let e = AlphaSchedule::Effective { alpha_eff: 2.0 }.budget(4).unwrap();
        assert!((e.alpha_eff() - 2.0).abs() < 1e-15);
        let s = AlphaSchedule::Constant { value: 2.0 }.scaled(0.25);
        assert_eq!(s, AlphaSchedule::Constant { value: 0.5 });
    }
}
