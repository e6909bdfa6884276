use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spline::SplineInterpolant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximizeOptions {
    /// Dense sample points per knot interval.
    pub samples_per_interval: usize,
    /// Relative tolerance on the stationarity residual `|S'|`.
    pub tolerance: f64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self {
            samples_per_interval: 64,
            tolerance: 1e-10,
        }
    }
}

/// Root of `S'` inside a bracket where `S'` changes sign from `+` to `−`:
/// Newton steps on `S'`, falling back to bisection when a step leaves the bracket.
fn refine<T: Scalar>(s: &SplineInterpolant<T>, mut lo: T, mut hi: T, tol: T) -> T {
    let half = T::lit(0.5);
    let mut x = half * (lo + hi);
    for _ in 0..200 {
        let d = s.derivatives(x, 2);
        if d[1].abs() <= tol {
            break;
        }
        if d[1] > T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - d[1] / d[2];
        x = if d[2] < T::zero() && newton > lo && newton < hi {
            newton
        } else {
            half * (lo + hi)
        };
        if hi - lo <= T::epsilon() * (T::one() + x.abs()) * T::lit(4.0) {
            break;
        }
    }
    x
}

/// Global maximum of `interp` over its domain: a dense scan of every knot
/// interval, then safeguarded Newton refinement of each bracketed stationary
/// point. Ties go to the smaller abscissa.
pub fn maximize_contrast<T: Scalar>(interp: &SplineInterpolant<T>, options: &MaximizeOptions) -> Result<(T, T)> {
    let per = options.samples_per_interval.max(2);
    let kv = interp.knots();
    let h = kv.spacing();
    let mut xs = Vec::with_capacity(kv.lambda() * per + 1);
    for iota in 0..kv.lambda() {
        for s in 0..per {
            xs.push(kv.xi(iota) + h * T::from_usize_(s) / T::from_usize_(per));
        }
    }
    xs.push(kv.xi(kv.lambda()));
    let ders: Vec<[T; 2]> = xs
        .iter()
        .map(|&x| {
            let d = interp.derivatives(x, 1);
            [d[0], d[1]]
        })
        .collect();
    let scale = ders
        .iter()
        .filter(|d| d[1].is_finite())
        .fold(T::zero(), |m, d| m.max(d[1].abs()));
    let tol = T::lit(options.tolerance) * (T::one() + scale);
    let mut candidates: Vec<T> = xs.clone();
    for w in 0..xs.len() - 1 {
        if ders[w][1] > T::zero() && ders[w + 1][1] < T::zero() {
            candidates.push(refine(interp, xs[w], xs[w + 1], tol));
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut best: Option<(T, T)> = None;
    for x in candidates {
        let v = interp.eval(x);
        if v.is_nan() {
            continue;
        }
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((x, v)),
        }
    }
    best.ok_or_else(|| Error::Numerical("the contrast is NaN everywhere on the grid".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{interpolate_on_grid, ThetaGrid};
    use crate::rng::{substream, Domain};
    use crate::spline::KnotVector;
    use rand::Rng;

    fn sample(grid: &ThetaGrid, a: usize, f: impl Fn(f64, usize) -> f64) -> Vec<f64> {
        let mut d = Vec::new();
        for th in grid.points() {
            for k in 0..=a {
                d.push(f(th, k));
            }
        }
        d
    }

    #[test]
    fn concave_quadratic_has_its_vertex_found() {
        let g = ThetaGrid::deterministic(7).unwrap();
        for a in 2..=4 {
            let d = sample(&g, a, |t, k| match k {
                0 => -(t - 0.5).powi(2),
                1 => -2.0 * (t - 0.5),
                2 => -2.0,
                _ => 0.0,
            });
            let s = interpolate_on_grid(&g, a, &d).unwrap();
            let (x, v) = maximize_contrast(&s, &MaximizeOptions::default()).unwrap();
            assert!((x - 0.5).abs() < 1e-8, "a={a}: {x}");
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_data_peaks_at_the_right_end() {
        let g = ThetaGrid::new(5, 0.3).unwrap();
        let d = sample(&g, 2, |t, k| [t, 1.0, 0.0][k]);
        let s = interpolate_on_grid(&g, 2, &d).unwrap();
        let (x, _) = maximize_contrast(&s, &MaximizeOptions::default()).unwrap();
        assert!((x - g.domain().1).abs() < 1e-12);
    }

    #[test]
    fn constant_data_breaks_ties_to_the_left() {
        let g = ThetaGrid::deterministic(4).unwrap();
        let s = interpolate_on_grid(&g, 1, &[2.0, 0.0, 2.0, 0.0, 2.0, 0.0, 2.0, 0.0]).unwrap();
        let (x, v) = maximize_contrast(&s, &MaximizeOptions::default()).unwrap();
        assert_eq!((x, v), (0.0, 2.0));
    }

    #[test]
    fn random_splines_match_a_dense_oracle() {
        let mut rng = substream(4, Domain::Test, 11);
        for case in 0..40 {
            let a = 1 + case % 3;
            let lambda = 3 + case % 5;
            let kv = KnotVector::<f64>::unit(a, lambda).unwrap();
            let data: Vec<f64> = (0..kv.n_basis()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = crate::spline::hermite_interpolate(&data, &kv).unwrap();
            let (x, v) = maximize_contrast(&s, &MaximizeOptions::default()).unwrap();
            let m = 100_000;
            let (bx, bv) = (0..=m)
                .map(|t| t as f64 / m as f64)
                .map(|t| (t, s.eval(t)))
                .fold((0.0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
            assert!(v >= bv - 1e-12, "case {case}: {v} < {bv}");
            assert!((x - bx).abs() <= 1.0 / lambda as f64, "case {case}: {x} vs {bx}");
        }
    }

    #[test]
    fn nan_everywhere_is_an_error() {
        let kv = KnotVector::<f64>::unit(1, 3).unwrap();
        let s = crate::spline::hermite_interpolate(&[f64::NAN; 8], &kv).unwrap();
        assert!(matches!(maximize_contrast(&s, &MaximizeOptions::default()), Err(Error::Numerical(_))));
    }

    #[test]
    fn works_in_single_precision() {
        let g = ThetaGrid::deterministic(6).unwrap();
        let d: Vec<f32> = sample(&g, 2, |t, k| [-(t - 0.4).powi(2), -2.0 * (t - 0.4), -2.0][k])
            .into_iter()
            .map(|v| v as f32)
            .collect();
        let s = interpolate_on_grid(&g, 2, &d).unwrap();
        let (x, _) = maximize_contrast(&s, &MaximizeOptions::default()).unwrap();
        assert!((x - 0.4).abs() < 1e-3);
    }
}
