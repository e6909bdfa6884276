use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiments::Gate;
use crate::error::{Error, Result};
use crate::estimator::ThetaGrid;
use crate::privacy::{extremal_views, verify_ldp, verify_ldp_views, ChannelParams, ClipProfile, NoiseMode, Transition};
use crate::rng::{substream, Domain};
use crate::spline::{gsum_closed_form, hermite_interpolate, reference_basis, KnotVector};
use crate::stats::ols_slope;

/// Outcome of an analytic (non-Monte Carlo) check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub seed: u64,
    pub gates: Vec<Gate>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.gates.iter().filter(|g| g.hard).all(|g| g.pass)
    }

    pub fn gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Adversarial transition pairs: moderate states, large jumps and extreme states.
pub fn adversarial_pairs(count: usize, seed: u64) -> Vec<(Transition, Transition)> {
    let mut rng = substream(seed, Domain::Test, 0x1D9);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Transition {
        match rng.random_range(0..3) {
            0 => (uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0)),
            1 => {
                let x0 = uniform(rng, -3.0, 3.0);
                (x0 + uniform(rng, -50.0, 50.0), x0)
            }
            _ => (uniform(rng, -1e3, 1e3), uniform(rng, -1e3, 1e3)),
        }
    };
    (0..count).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
}

/// Worst log density ratio of the channel of the first rung, per time index,
/// against `α_j`, plus equality on the extremal pair.
pub fn ldp_check(cfg: &ExperimentConfig, pairs: usize) -> Result<CheckReport> {
    cfg.validate()?;
    let rung = cfg.ladder[0];
    let model = cfg.model.build()?;
    let delta = cfg.horizon / rung.n_steps as f64;
    let noise = match cfg.noise {
        NoiseMode::Disabled => {
            return Err(Error::Config("LDP verification needs noise enabled".into()));
        }
        n => n,
    };
    let params = ChannelParams::new(
        ThetaGrid::deterministic(rung.grid_len)?,
        cfg.a,
        cfg.alpha.budget(rung.n_steps)?,
        ClipProfile::new(cfg.clip, delta, rung.n_steps)?,
        noise,
    )?;
    let alphas = params.budget.alphas().to_vec();
    let worst = verify_ldp(&model, &params, delta, &adversarial_pairs(pairs, cfg.seed))?;
    let excess = worst
        .iter()
        .zip(&alphas)
        .map(|(w, a)| w - a)
        .fold(f64::NEG_INFINITY, f64::max);
    let extremal = verify_ldp_views(&params, &[extremal_views(&params)])?;
    let gap = extremal
        .iter()
        .zip(&alphas)
        .map(|(w, a)| (w - a).abs())
        .fold(0.0, f64::max);
    Ok(CheckReport {
        check: "verify_ldp".into(),
        seed: cfg.seed,
        gates: vec![
            Gate::within("max_log_ratio_minus_alpha", excess, None, Some(1e-12)),
            Gate::within("extremal_pair_equality_gap", gap, None, Some(1e-9)),
        ],
        notes: vec![format!(
            "{pairs} adversarial pairs over {} time indices; clip sup B = {}",
            alphas.len(),
            params.clip.sup()
        )],
    })
}

/// Sup error of Hermite interpolation of `∂^k sin(2πx)` on `[0, 1]`.
fn sine_interpolation_error(a: usize, lambda: usize, k: usize) -> Result<f64> {
    let tau = std::f64::consts::TAU;
    let deriv = |x: f64, m: usize| tau.powi(m as i32) * (tau * x + m as f64 * std::f64::consts::FRAC_PI_2).sin();
    let kv = KnotVector::<f64>::unit(a, lambda)?;
    let data: Vec<f64> = kv
        .points()
        .iter()
        .flat_map(|&x| (0..=a).map(move |m| deriv(x, m)))
        .collect();
    let interp = hermite_interpolate(&data, &kv)?;
    let samples = 64 * lambda;
    Ok((0..=samples)
        .map(|t| {
            let x = t as f64 / samples as f64;
            (interp.derivative(x, k) - deriv(x, k)).abs()
        })
        .fold(0.0, f64::max))
}

/// Hermite spline checks: polynomial reproduction, convergence order on
/// `sin(2πx)`, the closed-form `Σ_k B̄_k'` and partition of unity.
pub fn spline_check(seed: u64) -> Result<CheckReport> {
    let mut rng = substream(seed, Domain::Test, 0x5B1);
    let mut gates = Vec::new();
    let mut notes = Vec::new();

    let mut poly_err = 0.0f64;
    for a in 1..=5 {
        for &lambda in &[1usize, 3, 8] {
            for _ in 0..5 {
                let deg = rng.random_range(0..=a);
                let c: Vec<f64> = (0..=deg).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
                let p = |x: f64, m: usize| -> f64 {
                    (m..=deg)
                        .map(|d| c[d] * crate::scalar::falling::<f64>(d, m) * x.powi((d - m) as i32))
                        .sum()
                };
                let kv = KnotVector::<f64>::unit(a, lambda)?;
                let data: Vec<f64> = kv
                    .points()
                    .iter()
                    .flat_map(|&x| (0..=a).map(move |m| p(x, m)))
                    .collect();
                let interp = hermite_interpolate(&data, &kv)?;
                for t in 0..=200 {
                    let x = t as f64 / 200.0;
                    poly_err = poly_err.max((interp.eval(x) - p(x, 0)).abs());
                }
            }
        }
    }
    gates.push(Gate::within("polynomial_reproduction_sup_error", poly_err, None, Some(1e-10)));

    let a = 4;
    let lambdas = [8usize, 16, 32];
    let logs: Vec<f64> = lambdas.iter().map(|&l| (l as f64).ln()).collect();
    for k in 0..=2 {
        let errs = lambdas
            .iter()
            .map(|&l| sine_interpolation_error(a, l, k))
            .collect::<Result<Vec<_>>>()?;
        let order = -ols_slope(&logs, &errs.iter().map(|e| e.ln()).collect::<Vec<_>>());
        let target = (a + 1 - k) as f64;
        gates.push(Gate::within(
            format!("convergence_order_k{k}"),
            order,
            Some(target - 0.3),
            Some(target + 0.3),
        ));
        notes.push(format!(
            "k = {k}: sup errors {errs:?} at Λ = {lambdas:?}; fitted order {order:.3}, stated order {target}, \
             Hermite order 2a+2-k = {}",
            2 * a + 2 - k
        ));
    }

    let mut gsum_err = 0.0f64;
    for a in 1..=4 {
        for t in 0..1000 {
            let x = 2.0 * t as f64 / 999.0;
            let sum = (0..=a)
                .map(|k| reference_basis([a + 1 - k, a + 1, k + 1], x, 1))
                .sum::<Result<f64>>()?;
            gsum_err = gsum_err.max((sum - gsum_closed_form(x, a)).abs());
        }
    }
    gates.push(Gate::within("gsum_closed_form_max_error", gsum_err, None, Some(1e-9)));

    let mut pou = 0.0f64;
    for a in 1..=5 {
        for &lambda in &[1usize, 4, 9] {
            let kv = KnotVector::<f64>::new(a, lambda, -0.4, 0.3)?;
            let (lo, hi) = kv.domain();
            for t in 0..=500 {
                let x = lo + (hi - lo) * t as f64 / 500.0;
                let s = (0..kv.n_basis()).map(|h| kv.basis(h, x, 0)).sum::<Result<f64>>()?;
                pou = pou.max((s - 1.0).abs());
            }
        }
    }
    gates.push(Gate::within("partition_of_unity_max_error", pou, None, Some(1e-12)));

    Ok(CheckReport {
        check: "splinecheck".into(),
        seed,
        gates,
        notes,
    })
}
