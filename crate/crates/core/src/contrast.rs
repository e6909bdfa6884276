//! Euler pseudo-likelihood contrast
//! `f(θ; x, y) = [2 b(θ, x)(y − x) − Δ b²(θ, x)] / σ²(x)` and its θ-derivatives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion_sim::PathPanel;
use crate::error::{Error, Result};
use crate::model::DiffusionModel;
use crate::scalar::{binomial, Scalar};

/// `value_by_order[k] = ∂_θ^k f(θ; x_prev, x_next)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastTerm<T> {
    pub value_by_order: Vec<T>,
}

impl<T: Scalar> ContrastTerm<T> {
    pub fn value(&self) -> T {
        self.value_by_order[0]
    }

    pub fn max_order(&self) -> usize {
        self.value_by_order.len() - 1
    }
}

/// Contrast derivatives from drift derivatives `db[k] = ∂_θ^k b(θ, x)`.
///
/// `∂^k f = [2 ∂^k b · dx − Δ Σ_r C(k, r) ∂^r b ∂^{k−r} b] / σ²`.
#[inline]
pub(crate) fn contrast_from_drift<T: Scalar>(
    db: &[T],
    dx: T,
    delta: T,
    inv_sigma2: T,
    out: &mut [T],
) {
    let two = T::lit(2.0);
    for (k, slot) in out.iter_mut().enumerate() {
        let mut sq = T::zero();
        for r in 0..=k / 2 {
            let term = db[r] * db[k - r];
            // Pair (r, k-r) and (k-r, r) once; the middle term is unpaired.
            sq = sq + if 2 * r == k {
                binomial::<T>(k, r) * term
            } else {
                two * binomial::<T>(k, r) * term
            };
        }
        *slot = (two * db[k] * dx - delta * sq) * inv_sigma2;
    }
}

fn inverse_variance<T: Scalar, M: DiffusionModel<T> + ?Sized>(model: &M, x: T) -> Result<T> {
    let sigma = model.diffusion(x);
    if !(sigma > T::zero()) {
        return Err(Error::Config(format!(
            "non-positive diffusion coefficient {sigma} at x = {x}"
        )));
    }
    Ok(T::one() / (sigma * sigma))
}

/// All θ-derivatives of the contrast up to `max_order`.
pub fn contrast_derivatives<T: Scalar, M: DiffusionModel<T> + ?Sized>(
    model: &M,
    theta: T,
    x_prev: T,
    x_next: T,
    delta: T,
    max_order: usize,
) -> Result<ContrastTerm<T>> {
    model.check_orders(max_order)?;
    let inv_s2 = inverse_variance(model, x_prev)?;
    let mut db = vec![T::zero(); max_order + 1];
    model.drift_derivatives(theta, x_prev, &mut db)?;
    let mut out = vec![T::zero(); max_order + 1];
    contrast_from_drift(&db, x_next - x_prev, delta, inv_s2, &mut out);
    Ok(ContrastTerm {
        value_by_order: out,
    })
}

/// Derivatives `∂_θ^k S_n^{N,0}(θ)` for `k ≤ max_order`, summed in path order.
pub fn nonprivate_contrast_derivatives<M: DiffusionModel<f64> + ?Sized>(
    panel: &PathPanel,
    model: &M,
    theta: f64,
    max_order: usize,
) -> Result<Vec<f64>> {
    model.check_orders(max_order)?;
    let delta = panel.grid().delta();
    let per_path: Vec<Vec<f64>> = (0..panel.n_paths())
        .into_par_iter()
        .map(|i| {
            let row = panel.path(i);
            let mut db = vec![0.0; max_order + 1];
            let mut cell = vec![0.0; max_order + 1];
            let mut acc = vec![0.0; max_order + 1];
            for w in row.windows(2) {
                let inv_s2 = inverse_variance(model, w[0])?;
                model.drift_derivatives(theta, w[0], &mut db)?;
                contrast_from_drift(&db, w[1] - w[0], delta, inv_s2, &mut cell);
                for (a, c) in acc.iter_mut().zip(&cell) {
                    *a += c;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0.0; max_order + 1];
    for acc in per_path {
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
    }
    Ok(total)
}

/// Privacy-free aggregate contrast `S_n^{N,0}(θ) = Σ_i Σ_j f(θ; X^i_{t_{j−1}}, X^i_{t_j})`.
pub fn nonprivate_contrast<M: DiffusionModel<f64> + ?Sized>(
    panel: &PathPanel,
    model: &M,
    theta: f64,
) -> Result<f64> {
    Ok(nonprivate_contrast_derivatives(panel, model, theta, 0)?[0])
}

/// Closed-form maximizer of `S_n^{N,0}` for `b(θ, x) = θ b₂(x)`:
/// `Σ (y − x) b₂(x)/σ²(x) / (Δ Σ b₂(x)²/σ²(x))`.
pub fn linear_drift_maximizer<M: DiffusionModel<f64> + ?Sized>(
    panel: &PathPanel,
    model: &M,
) -> Result<f64> {
    if model.polynomial_degree_in_theta() != Some(1) || model.drift(0.0, 0.3) != 0.0 {
        return Err(Error::Config(
            "closed-form maximizer needs a drift of the form θ·b₂(x)".into(),
        ));
    }
    let delta = panel.grid().delta();
    let (mut num, mut den) = (0.0, 0.0);
    for row in panel.paths() {
        for w in row.windows(2) {
            let b2 = model.drift(1.0, w[0]);
            let inv_s2 = inverse_variance(model, w[0])?;
            num += (w[1] - w[0]) * b2 * inv_s2;
            den += delta * b2 * b2 * inv_s2;
        }
    }
    if den <= 0.0 {
        return Err(Error::Numerical("degenerate quadratic contrast".into()));
    }
    Ok(num / den)
}
