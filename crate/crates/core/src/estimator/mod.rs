//! Public contrast assembly, its maximization and the regime diagnostics.

mod grid;
mod maximize;

pub use grid::ThetaGrid;
pub use maximize::{maximize_contrast, MaximizeOptions};

use serde::{Deserialize, Serialize};

use crate::diffusion_sim::PathPanel;
use crate::error::{Error, Result};
use crate::model::DiffusionModel;
use crate::privacy::{privatize_aggregate, ChannelParams, PrivacyBudget, PublicAggregate};
use crate::scalar::Scalar;
use crate::spline::{hermite_interpolate, vbar, SplineInterpolant};

/// Hermite interpolant of per-grid-point data `sums[ℓ (a + 1) + k]`.
pub fn interpolate_on_grid<T: Scalar>(grid: &ThetaGrid, a: usize, sums: &[T]) -> Result<SplineInterpolant<T>> {
    let kv = crate::spline::KnotVector::new(
        a,
        grid.len() - 1,
        T::lit(grid.point(0)),
        T::lit(grid.spacing()),
    )?;
    hermite_interpolate(sums, &kv)
}

/// `S_n^{N,pub} = Σ_i Σ_j H_Ξ(Z_j^i)`, built as the interpolant of the
/// aggregate since `H_Ξ` is linear.
pub fn build_public_contrast(public: &PublicAggregate) -> Result<SplineInterpolant<f64>> {
    let p = &public.params;
    if public.sums.len() != p.width() {
        return Err(Error::Shape(format!(
            "aggregate has {} values, the grid needs {}",
            public.sums.len(),
            p.width()
        )));
    }
    interpolate_on_grid(&p.grid, p.a, &public.sums)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Negligible,
    Significant,
    Threshold,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Negligible => "negligible",
            Regime::Significant => "significant",
            Regime::Threshold => "threshold",
        })
    }
}

/// Classification knobs: significant if `r > significant`, negligible if
/// `r √(log L) < negligible`, threshold otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCutoffs {
    pub significant: f64,
    pub negligible: f64,
}

impl Default for RegimeCutoffs {
    fn default() -> Self {
        Self {
            significant: 10.0,
            negligible: 0.1,
        }
    }
}

/// `r_{n,N} = L² log n / √ᾱ₂` and its regime.
pub fn compute_regime(n: usize, grid_len: usize, alpha_bar2: f64, cutoffs: &RegimeCutoffs) -> (f64, Regime) {
    let l = grid_len as f64;
    let r = l * l * (n as f64).ln() / alpha_bar2.sqrt();
    let regime = if r > cutoffs.significant {
        Regime::Significant
    } else if r * l.ln().sqrt() < cutoffs.negligible {
        Regime::Negligible
    } else {
        Regime::Threshold
    };
    (r, regime)
}

/// `v_n(θ*) = v̄(L (θ* − θ_{ℓ*}))` where `θ* ∈ [θ_{ℓ*}, θ_{ℓ*+1})`.
pub fn v_n_at(theta_star: f64, grid: &ThetaGrid, a: usize) -> Result<f64> {
    let l = grid.locate(theta_star)?;
    let s = (grid.len() as f64 * (theta_star - grid.point(l))).clamp(0.0, 1.0);
    Ok(vbar(s, a))
}

/// `√(2 / (N Σ₀))`: the negligible-regime standard deviation as stated by the theory.
pub fn predicted_sd_negligible(n_paths: usize, sigma0: f64) -> f64 {
    (2.0 / (n_paths as f64 * sigma0)).sqrt()
}

/// `4 (a+1) L² log(n) √T √(v_n / Σ₀²) / √(N ᾱ₂)`: the significant-regime scale.
#[allow(clippy::too_many_arguments)]
pub fn predicted_sd_significant(
    a: usize,
    grid_len: usize,
    n: usize,
    horizon: f64,
    v_n: f64,
    sigma0: f64,
    n_paths: usize,
    alpha_bar2: f64,
) -> f64 {
    significant_rate(a, grid_len, n, horizon, n_paths, alpha_bar2) * (v_n / (sigma0 * sigma0)).sqrt()
}

/// `4 (a+1) L² log(n) √T / √(N ᾱ₂)`, the normalization of the significant regime.
pub fn significant_rate(a: usize, grid_len: usize, n: usize, horizon: f64, n_paths: usize, alpha_bar2: f64) -> f64 {
    let l = grid_len as f64;
    4.0 * (a + 1) as f64 * l * l * (n as f64).ln() * horizon.sqrt() / (n_paths as f64 * alpha_bar2).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub theta_hat: f64,
    pub contrast_at_hat: f64,
    pub theta_star: Option<f64>,
    pub grid: ThetaGrid,
    #[serde(rename = "r_nN")]
    pub r_nn: f64,
    pub regime: Regime,
    pub v_n_star: Option<f64>,
    pub predicted_sd_negligible: Option<f64>,
    pub predicted_sd_significant: Option<f64>,
    pub seed: u64,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub cutoffs: RegimeCutoffs,
    pub maximize: MaximizeOptions,
    /// `Σ₀` at the truth, when known; enables the predicted standard deviations.
    pub sigma0: Option<f64>,
    pub config_digest: String,
}

/// Diagnostics shared by every way of reaching `θ̂`.
pub fn diagnose(
    theta_hat: f64,
    contrast_at_hat: f64,
    panel: &PathPanel,
    params: &ChannelParams,
    options: &EstimateOptions,
    seed: u64,
) -> EstimationResult {
    let n = panel.grid().steps();
    let budget: &PrivacyBudget = &params.budget;
    let (r, regime) = compute_regime(n, params.grid.len(), budget.alpha_bar2(), &options.cutoffs);
    let theta_star = panel.theta_star();
    let v_n_star = v_n_at(theta_star, &params.grid, params.a).ok();
    let sd_neg = options.sigma0.map(|s| predicted_sd_negligible(panel.n_paths(), s));
    let sd_sig = match (options.sigma0, v_n_star) {
        (Some(s), Some(v)) => Some(predicted_sd_significant(
            params.a,
            params.grid.len(),
            n,
            panel.grid().horizon(),
            v,
            s,
            panel.n_paths(),
            budget.alpha_bar2(),
        )),
        _ => None,
    };
    EstimationResult {
        theta_hat,
        contrast_at_hat,
        theta_star: Some(theta_star),
        grid: params.grid,
        r_nn: r,
        regime,
        v_n_star,
        predicted_sd_negligible: sd_neg,
        predicted_sd_significant: sd_sig,
        seed,
        config_digest: options.config_digest.clone(),
    }
}

/// Privatize, aggregate, interpolate and maximize.
pub fn estimate<M: DiffusionModel<f64> + ?Sized>(
    panel: &PathPanel,
    model: &M,
    params: &ChannelParams,
    options: &EstimateOptions,
    seed: u64,
) -> Result<EstimationResult> {
    let agg = privatize_aggregate(panel, model, params, seed)?;
    let interp = build_public_contrast(&agg)?;
    let (theta_hat, value) = maximize_contrast(&interp, &options.maximize)?;
    // the last knot is accumulated from the spacing and can overshoot θ_{L−1} by an ulp
    let (lo, hi) = params.grid.domain();
    let theta_hat = theta_hat.clamp(lo, hi);
    Ok(diagnose(theta_hat, value, panel, params, options, seed))
}
