//! Hermite interpolation with repeated-knot B-splines of degree `2a + 1`.
//!
//! Points `ξ_0 < … < ξ_Λ` are uniform. Each interior point carries `a + 1`
//! knots and each endpoint `2(a + 1)`, so the basis functions `B_i^k`,
//! `i = −1..Λ−1`, `k = 0..a`, are supported on `[ξ_i, ξ_{i+2}]` and the
//! interpolant is `C^a`.

mod basis;
mod hermite;
mod knots;

pub use basis::bspline_eval;
pub use hermite::{hermite_interpolate, interpolant_derivative_sup, InterpolantDump, SplineInterpolant};
pub use knots::KnotVector;

use crate::error::Result;
use crate::scalar::{binomial, Scalar};

/// B-spline on the knots `0` (β₁ times), `1` (β₂ times), `2` (β₃ times); its
/// degree is `β₁ + β₂ + β₃ − 2`.
pub fn reference_basis<T: Scalar>(multiplicities: [usize; 3], x: T, m: usize) -> Result<T> {
    let mut w = Vec::with_capacity(multiplicities.iter().sum());
    for (v, &reps) in multiplicities.iter().enumerate() {
        w.extend(std::iter::repeat_n(T::from_usize_(v), reps));
    }
    bspline_eval(&w, x, m)
}

/// `Σ_k B̄_k'(x)` in closed form, where `B̄_k` is the unit-spacing basis with
/// multiplicities `(a + 1 − k, a + 1, k + 1)`:
/// `(2a+1) C(2a, a) [x^a (1−x)^a 1_{[0,1]} − (x−1)^a (2−x)^a 1_{[1,2]}]`.
pub fn gsum_closed_form<T: Scalar>(x: T, a: usize) -> T {
    let c = T::from_usize_(2 * a + 1) * binomial::<T>(2 * a, a);
    let (one, two) = (T::one(), T::lit(2.0));
    let ai = a as i32;
    let mut v = T::zero();
    if x >= T::zero() && x <= one {
        v = v + (x * (one - x)).powi(ai);
    }
    if x >= one && x <= two {
        v = v - ((x - one) * (two - x)).powi(ai);
    }
    c * v
}

/// `v̄(s) = (2a+1)² C(2a, a)² s^{2a} (1−s)^{2a}`.
pub fn vbar<T: Scalar>(s: T, a: usize) -> T {
    let c = T::from_usize_(2 * a + 1) * binomial::<T>(2 * a, a);
    c * c * (s * (T::one() - s)).powi(2 * a as i32)
}

/// `E[v̄(U)]` for `U` uniform on `[0, 1]`:
/// `(2a+1)² C(2a, a)² B(2a+1, 2a+1) = (2a+1)² C(2a,a)² / ((4a+1) C(4a, 2a))`.
pub fn vbar_mean(a: usize) -> f64 {
    let c = (2 * a + 1) as f64 * binomial::<f64>(2 * a, a);
    c * c / ((4 * a + 1) as f64 * binomial::<f64>(4 * a, 2 * a))
}
