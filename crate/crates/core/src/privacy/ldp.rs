//! Analytic privacy accounting for the product-Laplace channel.
//!
//! For one cell the view is `c + E` with `c` the clipped contrast vector and
//! `E` independent `Laplace(s_j)` coordinates. The log density ratio between
//! two inputs at a view `z` is `Σ (|z − c'| − |z − c|) / s_j`, whose sup over
//! `z` is `‖c − c'‖₁ / s_j`.

use super::channel::{CellEvaluator, ChannelParams};
use crate::error::{Error, Result};
use crate::model::DiffusionModel;

/// Log of `q(z | c) / q(z | c')` for product-Laplace densities of scale `scale`.
pub fn log_density_ratio(z: &[f64], c: &[f64], c_alt: &[f64], scale: f64) -> f64 {
    z.iter()
        .zip(c.iter().zip(c_alt))
        .map(|(zv, (a, b))| (zv - b).abs() - (zv - a).abs())
        .sum::<f64>()
        / scale
}

/// Sup over views of the log ratio between two raw contrast vectors.
pub fn worst_log_ratio(params: &ChannelParams, raw: &[f64], raw_alt: &[f64], scale: f64) -> f64 {
    raw.iter()
        .zip(raw_alt)
        .map(|(a, b)| (params.clip.apply(*a) - params.clip.apply(*b)).abs())
        .sum::<f64>()
        / scale
}

/// Per-`j` maximum of the sup log ratio over pairs of raw contrast vectors,
/// each of length `L (a + 1)`.
pub fn verify_ldp_views(params: &ChannelParams, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Err(Error::Config("at least one pair is required".into()));
    }
    let w = params.width();
    if pairs.iter().any(|(a, b)| a.len() != w || b.len() != w) {
        return Err(Error::Shape(format!("raw views must have length {w}")));
    }
    // The clipped distance does not depend on j; only the scale does.
    let worst_l1 = pairs
        .iter()
        .map(|(a, b)| worst_log_ratio(params, a, b, 1.0))
        .fold(0.0, f64::max);
    Ok(params.scales().iter().map(|s| worst_l1 / s).collect())
}

/// Observation pair `(x_j, x_{j−1})` entering one channel.
pub type Transition = (f64, f64);

/// Per-`j` maximum log ratio over pairs of private inputs, evaluated through
/// `model` on the channel's θ-grid.
pub fn verify_ldp<M: DiffusionModel<f64> + ?Sized>(
    model: &M,
    params: &ChannelParams,
    delta: f64,
    pairs: &[(Transition, Transition)],
) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Err(Error::Config("at least one pair is required".into()));
    }
    let w = params.width();
    let mut eval = CellEvaluator::new(model, &params.grid, params.a, delta)?;
    let mut views = Vec::with_capacity(pairs.len());
    for &((x1, x0), (y1, y0)) in pairs {
        let (mut c, mut c_alt) = (vec![0.0; w], vec![0.0; w]);
        eval.raw(x0, x1, &mut c)?;
        eval.raw(y0, y1, &mut c_alt)?;
        views.push((c, c_alt));
    }
    verify_ldp_views(params, &views)
}

/// The pair of raw views that saturates the bound: every coordinate at `±x*`
/// where the clipped map reaches `±B`.
pub fn extremal_views(params: &ChannelParams) -> (Vec<f64>, Vec<f64>) {
    let x = params.clip.argmax();
    let w = params.width();
    (vec![x; w], vec![-x; w])
}
