use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

/// Centered Laplace draw with scale `b` (density `e^{−|x|/b} / 2b`) by inversion.
#[inline]
pub fn laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    // u uniform on (−1/2, 1/2); 1 − 2|u| is then in (0, 1].
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Exact draw from the law of a sum of `count` i.i.d. `Laplace(scale)` variables,
/// `scale · (G₁ − G₂)` with `G₁, G₂ ~ Gamma(count, 1)` independent.
pub fn laplace_sum<R: Rng + ?Sized>(rng: &mut R, scale: f64, count: u64) -> Result<f64> {
    if count == 0 {
        return Ok(0.0);
    }
    let g = Gamma::new(count as f64, 1.0).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(scale * (g.sample(rng) - g.sample(rng)))
}

/// Tail bound for `S_U = Σ_h U_h`, `U_h ~ Laplace(1/γ_h)`:
/// `P(|S_U|/√U ≥ λ) ≤ 2 exp(−λ² γ̄²/8)` for `λ ≤ 2 γ_max √U / γ̄²`,
/// and `2 exp(−γ_max λ √U / 4)` beyond.
pub fn laplace_sum_tail_bound(lambda: f64, gamma_bar2: f64, gamma_max: f64, u: usize) -> f64 {
    let root_u = (u as f64).sqrt();
    if lambda <= 2.0 * gamma_max * root_u / gamma_bar2 {
        2.0 * (-lambda * lambda * gamma_bar2 / 8.0).exp()
    } else {
        2.0 * (-gamma_max * lambda * root_u / 4.0).exp()
    }
}
