use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate_row, SimulationOptions, TimeGrid};
use crate::error::{Error, Result};
use crate::model::DiffusionModel;

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub stderr: f64,
}

impl MonteCarloEstimate {
    pub(crate) fn from_samples(samples: &[f64]) -> Self {
        let m = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / m;
        let var = if samples.len() > 1 {
            samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        Self {
            value: mean,
            stderr: (var / m).sqrt(),
        }
    }
}

/// Per-path Riemann sums `Δ Σ_j g(X_{t_{j-1}})` of `replications` paths simulated under `theta_sim`.
fn path_functionals<M, G>(
    model: &M,
    theta_sim: f64,
    grid: TimeGrid,
    replications: usize,
    options: &SimulationOptions,
    seed: u64,
    g: G,
) -> Result<Vec<f64>>
where
    M: DiffusionModel<f64> + ?Sized,
    G: Fn(f64) -> f64 + Sync,
{
    if replications < 100 {
        return Err(Error::Config(format!(
            "at least 100 replications are required, got {replications}"
        )));
    }
    let delta = grid.delta();
    (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; grid.steps() + 1];
            simulate_row(model, theta_sim, grid, options, seed, i, &mut row)?;
            Ok(delta * row[..grid.steps()].iter().map(|&x| g(x)).sum::<f64>())
        })
        .collect()
}

/// `Σ₀(θ) = ∫_0^T E[(∂_θ b(θ, X_s) / σ(X_s))²] ds` with `X` simulated under `θ`.
pub fn estimate_sigma0<M: DiffusionModel<f64> + ?Sized>(
    model: &M,
    theta: f64,
    grid: TimeGrid,
    replications: usize,
    options: &SimulationOptions,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    model.check_orders(1)?;
    let samples = path_functionals(model, theta, grid, replications, options, seed, |x| {
        let d = model.drift_dtheta(1, theta, x).unwrap_or(0.0) / model.diffusion(x);
        d * d
    })?;
    Ok(MonteCarloEstimate::from_samples(&samples))
}

/// Limit contrast gap `C_∞(θ) = -∫_0^T E[(b(θ, X_s) - b(θ*, X_s))² / σ²(X_s)] ds`
/// with `X` simulated under `θ*`. Non-positive by construction.
pub fn estimate_c_infinity<M: DiffusionModel<f64> + ?Sized>(
    model: &M,
    theta: f64,
    theta_star: f64,
    grid: TimeGrid,
    replications: usize,
    options: &SimulationOptions,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    let samples = path_functionals(model, theta_star, grid, replications, options, seed, |x| {
        let gap = (model.drift(theta, x) - model.drift(theta_star, x)) / model.diffusion(x);
        -gap * gap
    })?;
    Ok(MonteCarloEstimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SeparableModel;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 100).unwrap()
    }

    #[test]
    fn linear_model_at_zero_matches_brownian_second_moment() {
        // θ* = 0: X is Brownian, Σ₀ = ∫_0^1 E[W_s²] ds = 1/2 in continuous time.
        // The left Riemann sum on n = 100 steps gives Σ_j t_{j-1} Δ = 0.495.
        let est = estimate_sigma0(
            &SeparableModel::linear(),
            0.0,
            grid(),
            20_000,
            &SimulationOptions::default(),
            3,
        )
        .unwrap();
        assert!((est.value - 0.495).abs() < 4.0 * est.stderr, "{est:?}");
        assert!((est.value - 0.5).abs() < 0.02);
    }

    #[test]
    fn theta_free_drift_has_zero_information() {
        let est = estimate_sigma0(
            &SeparableModel::theta_free_sine(),
            0.5,
            grid(),
            200,
            &SimulationOptions::default(),
            1,
        )
        .unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn sine_sigma0_agrees_with_a_larger_independent_run() {
        let m = SeparableModel::sine();
        let small =
            estimate_sigma0(&m, 0.5, grid(), 2_000, &SimulationOptions::default(), 10).unwrap();
        let large =
            estimate_sigma0(&m, 0.5, grid(), 20_000, &SimulationOptions::default(), 11).unwrap();
        assert!(small.value > 0.0 && small.stderr > 0.0);
        let tol = 4.0 * (small.stderr.powi(2) + large.stderr.powi(2)).sqrt();
        assert!((small.value - large.value).abs() < tol, "{small:?} vs {large:?}");
    }

    #[test]
    fn contrast_gap_vanishes_at_truth_and_is_negative_elsewhere() {
        let m = SeparableModel::sine();
        let opts = SimulationOptions::default();
        let at = estimate_c_infinity(&m, 0.5, 0.5, grid(), 200, &opts, 4).unwrap();
        assert_eq!(at.value, 0.0);
        let away = estimate_c_infinity(&m, 0.8, 0.5, grid(), 2_000, &opts, 4).unwrap();
        assert!(away.value < 0.0);
        // Linear in θ: C_∞(θ) = -(θ - θ*)² Σ₀ on the same simulated paths.
        let s0 = estimate_sigma0(&m, 0.5, grid(), 2_000, &opts, 4).unwrap();
        assert!((away.value + 0.09 * s0.value).abs() < 1e-12);
    }

    #[test]
    fn too_few_replications_rejected() {
        let r = estimate_sigma0(
            &SeparableModel::sine(),
            0.5,
            grid(),
            10,
            &SimulationOptions::default(),
            0,
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
