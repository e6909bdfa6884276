use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform interpolation points `ξ_ℓ = ξ₀ + ℓ h`, `ℓ = 0..=Λ`, expanded into
/// the Hermite knot sequence: interior points repeated `a + 1` times and both
/// endpoints `2(a + 1)` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector<T> {
    a: usize,
    lambda: usize,
    origin: T,
    spacing: T,
    knots: Vec<T>,
}

impl<T: Scalar> KnotVector<T> {
    /// `ξ_ℓ = ℓ / Λ` on `[0, 1]`.
    pub fn unit(a: usize, lambda: usize) -> Result<Self> {
        let h = T::one() / T::from_usize_(lambda.max(1));
        Self::new(a, lambda, T::zero(), h)
    }

    pub fn new(a: usize, lambda: usize, origin: T, spacing: T) -> Result<Self> {
        if a == 0 {
            return Err(Error::Config("smoothness order a must be at least 1".into()));
        }
        if lambda == 0 {
            return Err(Error::Config("at least one knot interval is required".into()));
        }
        if !(spacing > T::zero()) || !origin.is_finite() || !spacing.is_finite() {
            return Err(Error::Config(format!(
                "invalid knot layout: origin {origin}, spacing {spacing}"
            )));
        }
        let m = a + 1;
        let mut knots = Vec::with_capacity(m * (lambda + 3));
        for l in 0..=lambda {
            let reps = if l == 0 || l == lambda { 2 * m } else { m };
            let xi = origin + T::from_usize_(l) * spacing;
            knots.extend(std::iter::repeat_n(xi, reps));
        }
        Ok(Self {
            a,
            lambda,
            origin,
            spacing,
            knots,
        })
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn degree(&self) -> usize {
        2 * self.a + 1
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn xi(&self, l: usize) -> T {
        self.origin + T::from_usize_(l) * self.spacing
    }

    pub fn points(&self) -> Vec<T> {
        (0..=self.lambda).map(|l| self.xi(l)).collect()
    }

    pub fn domain(&self) -> (T, T) {
        (self.origin, self.xi(self.lambda))
    }

    /// Expanded knot sequence of length `(a + 1)(Λ + 3)`.
    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    /// Number of basis functions, `(a + 1)(Λ + 1)`.
    pub fn n_basis(&self) -> usize {
        (self.a + 1) * (self.lambda + 1)
    }

    /// Flat index of `B_i^k`, `i = −1..Λ−1`.
    pub fn basis_index(i: isize, k: usize, a: usize) -> usize {
        ((i + 1) as usize) * (a + 1) + k
    }

    /// Knot interval `ι` with `x ∈ [ξ_ι, ξ_{ι+1})`, clamped to the domain so that
    /// `ξ_Λ` belongs to the last interval.
    pub fn interval(&self, x: T) -> usize {
        let u = ((x - self.origin) / self.spacing).floor();
        if !(u > T::zero()) {
            return 0;
        }
        u.to_usize().unwrap_or(usize::MAX).min(self.lambda - 1)
    }

    /// Knot span index of interval `ι`: the last copy of `ξ_ι`.
    pub fn span(&self, interval: usize) -> usize {
        (interval + 2) * (self.a + 1) - 1
    }

    /// `m`-th derivative of basis function `h` at `x`.
    pub fn basis(&self, h: usize, x: T, m: usize) -> Result<T> {
        if m > self.a {
            return Err(Error::UnsupportedOrder {
                order: m,
                max: self.a,
            });
        }
        if h >= self.n_basis() {
            return Err(Error::Shape(format!("basis index {h} out of range")));
        }
        super::bspline_eval(&self.knots[h..h + self.degree() + 2], x, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_has_the_expected_multiplicities() {
        let kv = KnotVector::<f64>::unit(2, 4).unwrap();
        assert_eq!(kv.knots().len(), 3 * 7);
        assert_eq!(kv.n_basis(), 15);
        assert!(kv.knots().windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(kv.knots().iter().filter(|&&t| t == 0.0).count(), 6);
        assert_eq!(kv.knots().iter().filter(|&&t| t == 0.5).count(), 3);
        assert_eq!(kv.knots().iter().filter(|&&t| t == 1.0).count(), 6);
        assert_eq!(kv.knots().len() - kv.degree() - 1, kv.n_basis());
    }

    #[test]
    fn spans_bracket_their_interval() {
        let kv = KnotVector::<f64>::new(3, 5, 0.1, 0.2).unwrap();
        for iota in 0..5 {
            let s = kv.span(iota);
            assert_eq!(kv.knots()[s], kv.xi(iota));
            assert_eq!(kv.knots()[s + 1], kv.xi(iota + 1));
        }
        assert_eq!(kv.interval(0.1), 0);
        assert_eq!(kv.interval(1.1), 4);
        assert_eq!(kv.interval(0.75), 3);
    }

    #[test]
    fn bad_layouts_are_rejected() {
        assert!(KnotVector::<f64>::unit(0, 4).is_err());
        assert!(KnotVector::<f64>::unit(2, 0).is_err());
        assert!(KnotVector::<f64>::new(2, 3, 0.0, -1.0).is_err());
        let kv = KnotVector::<f64>::unit(1, 3).unwrap();
        assert!(matches!(kv.basis(0, 0.5, 2), Err(Error::UnsupportedOrder { .. })));
    }
}
