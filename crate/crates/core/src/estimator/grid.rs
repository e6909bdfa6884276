use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Domain};
use crate::spline::KnotVector;

/// Parameter grid `θ_ℓ = (ℓ + S) / L`, `ℓ = 0..L−1`, with shift `S ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    len: usize,
    shift: f64,
}

impl ThetaGrid {
    pub fn new(len: usize, shift: f64) -> Result<Self> {
        if len < 2 {
            return Err(Error::Config(format!(
                "the θ-grid needs at least two points, got L = {len}"
            )));
        }
        if !(0.0..1.0).contains(&shift) {
            return Err(Error::Config(format!("grid shift must lie in [0, 1), got {shift}")));
        }
        Ok(Self { len, shift })
    }

    /// Deterministic grid `θ_ℓ = ℓ / L`.
    pub fn deterministic(len: usize) -> Result<Self> {
        Self::new(len, 0.0)
    }

    /// Grid with a uniform shift drawn from the `(seed, stream)` substream.
    pub fn random(len: usize, seed: u64, stream: u64) -> Result<Self> {
        let s: f64 = substream(seed, Domain::GridShift, stream).random();
        Self::new(len, s)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.len as f64
    }

    pub fn point(&self, l: usize) -> f64 {
        (l as f64 + self.shift) / self.len as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|l| self.point(l)).collect()
    }

    /// Estimation domain `[θ_0, θ_{L−1}]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.point(0), self.point(self.len - 1))
    }

    pub fn contains(&self, theta: f64) -> bool {
        let (lo, hi) = self.domain();
        (lo..=hi).contains(&theta)
    }

    /// Hermite knots on the grid points, `Λ = L − 1`.
    pub fn knots(&self, a: usize) -> Result<KnotVector<f64>> {
        KnotVector::new(a, self.len - 1, self.point(0), self.spacing())
    }

    /// `ℓ*` with `θ ∈ [θ_{ℓ*}, θ_{ℓ*+1})`, for `θ ∈ [θ_0, θ_{L−1} + 1/L)`.
    pub fn locate(&self, theta: f64) -> Result<usize> {
        let (lo, end) = (self.point(0), self.point(self.len - 1) + self.spacing());
        if !(theta >= lo && theta < end) {
            return Err(Error::Config(format!(
                "θ = {theta} is outside the grid coverage [{lo}, {end})"
            )));
        }
        let u = theta * self.len as f64 - self.shift;
        let mut l = (u.max(0.0).floor() as usize).min(self.len - 1);
        // settle rounding in u against the stored points
        if theta < self.point(l) {
            l -= 1;
        } else if l + 1 < self.len && theta >= self.point(l + 1) {
            l += 1;
        }
        Ok(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_uniform_and_inside_the_unit_interval() {
        let g = ThetaGrid::new(7, 0.4).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 7);
        assert!(p.windows(2).all(|w| (w[1] - w[0] - 1.0 / 7.0).abs() < 1e-15));
        assert!(p.iter().all(|&t| (0.0..1.0).contains(&t)));
        let kv = g.knots(2).unwrap();
        assert_eq!(kv.lambda(), 6);
        assert!((kv.xi(6) - p[6]).abs() < 1e-15);
    }

    #[test]
    fn random_shift_is_reproducible() {
        let a = ThetaGrid::random(5, 9, 3).unwrap();
        assert_eq!(a, ThetaGrid::random(5, 9, 3).unwrap());
        assert_ne!(a, ThetaGrid::random(5, 9, 4).unwrap());
    }

    #[test]
    fn locate_finds_the_left_point() {
        let g = ThetaGrid::new(4, 0.5).unwrap();
        assert_eq!(g.locate(0.125).unwrap(), 0);
        assert_eq!(g.locate(0.5).unwrap(), 1);
        assert_eq!(g.locate(0.99).unwrap(), 3);
        assert!(g.locate(0.1).is_err());
        assert!(ThetaGrid::new(1, 0.0).is_err());
        assert!(ThetaGrid::new(3, 1.0).is_err());
    }
}
