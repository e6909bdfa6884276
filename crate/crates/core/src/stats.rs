//! Small statistics toolkit for the Monte Carlo checks.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub skewness: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        Self {
            count: xs.len(),
            mean,
            variance: if xs.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 },
            skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
        }
    }

    pub fn stderr_of_mean(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolation quantile (type 7) of an unsorted sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let v = sorted(xs);
    quantile_sorted(&v, q)
}

pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// `sup_x |F_n(x) − F(x)|`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let v = sorted(xs);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// `sup_x |F_a(x) − F_b(x)|` between two empirical distributions.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Domain};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn normal_cdf_values() {
        assert_relative_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(normal_cdf(1.959963984540054), 0.975, epsilon = 1e-11);
        assert_relative_eq!(normal_cdf(-1.0), 0.15865525393145707, epsilon = 1e-10);
    }

    #[test]
    fn moments_and_quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0, 10.0];
        let m = Moments::of(&xs);
        assert_eq!(m.mean, 4.0);
        assert_relative_eq!(m.variance, 12.5, epsilon = 1e-12);
        assert!(m.skewness > 0.0);
        assert_eq!(median(&xs), 3.0);
        assert_eq!(quantile(&xs, 0.25), 2.0);
        assert_relative_eq!(quantile(&xs, 0.9), 7.6, epsilon = 1e-12);
    }

    #[test]
    fn ks_detects_fit_and_misfit() {
        let mut rng = substream(1, Domain::Test, 3);
        let xs: Vec<f64> = (0..5000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(ks_one_sample(&xs, normal_cdf) < 0.025);
        assert!(ks_one_sample(&xs, |x| normal_cdf(x - 0.3)) > 0.08);
        let ys: Vec<f64> = (0..5000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(ks_two_sample(&xs, &ys) < 0.04);
        let shifted: Vec<f64> = ys.iter().map(|y| y + 0.5).collect();
        assert!(ks_two_sample(&xs, &shifted) > 0.15);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[0.0], &[1.0]), 1.0);
    }

    #[test]
    fn slope_of_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        assert_relative_eq!(ols_slope(&x, &y), -0.5, epsilon = 1e-14);
    }
}
