use serde::{Deserialize, Serialize};

use super::basis::ders_basis_funs;
use super::knots::KnotVector;
use crate::error::{Error, Result};
use crate::scalar::{binomial, falling, Scalar};

/// Hermite B-spline interpolant `Σ_{i=−1}^{Λ−1} Σ_{k=0}^{a} c_i^k B_i^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineInterpolant<T> {
    knots: KnotVector<T>,
    /// `coeffs[(i + 1)(a + 1) + k] = c_i^k`.
    coeffs: Vec<T>,
}

/// Maps the Hermite data `𝔞_ℓ^{(0..=a)}` at one point to the coefficients
/// `c_{ℓ−1}^{0..=a}`.
///
/// `c_i^k = Σ_v (−1)^v (g_i^k)^{(p−v)}(ξ_{i+1}) 𝔞_{i+1}^{(v)}` with
/// `g_i^k = (x − ξ_i)^{a−k}(x − ξ_{i+1})^{a+1}(x − ξ_{i+2})^k / p!`. Writing
/// `u = x − ξ_{i+1}`, the needed derivative is `(p−v)!/p!` times the `u^{a−v}`
/// coefficient of `(u + h_l)^{a−k}(u − h_r)^k`, where `h_l`, `h_r` are the gaps
/// to the neighbouring points (zero at the boundary, where the points coincide).
fn local_map<T: Scalar>(a: usize, hl: T, hr: T) -> Vec<T> {
    let p = 2 * a + 1;
    let mut map = vec![T::zero(); (a + 1) * (a + 1)];
    for k in 0..=a {
        // Coefficients of (u + hl)^{a−k} (u − hr)^k in ascending powers of u.
        let mut prod = vec![T::zero(); a + 1];
        for r in 0..=a - k {
            let left = binomial::<T>(a - k, r) * hl.powi((a - k - r) as i32);
            for s in 0..=k {
                let right = binomial::<T>(k, s) * (-hr).powi((k - s) as i32);
                prod[r + s] = prod[r + s] + left * right;
            }
        }
        for v in 0..=a {
            let sign = if v % 2 == 0 { T::one() } else { -T::one() };
            map[k * (a + 1) + v] = sign * prod[a - v] / falling::<T>(p, v);
        }
    }
    map
}

/// Hermite interpolation of `data[ℓ (a + 1) + k] = 𝔞_ℓ^{(k)}` on the points of `knots`.
pub fn hermite_interpolate<T: Scalar>(data: &[T], knots: &KnotVector<T>) -> Result<SplineInterpolant<T>> {
    let (a, lambda) = (knots.a(), knots.lambda());
    let w = a + 1;
    if data.len() != (lambda + 1) * w {
        return Err(Error::Shape(format!(
            "Hermite data needs {}x{} values, got {}",
            lambda + 1,
            w,
            data.len()
        )));
    }
    let h = knots.spacing();
    let zero = T::zero();
    let left_end = local_map(a, zero, if lambda == 0 { zero } else { h });
    let interior = local_map(a, h, h);
    let right_end = local_map(a, h, zero);
    let mut coeffs = vec![T::zero(); (lambda + 1) * w];
    for l in 0..=lambda {
        let map = if l == 0 {
            &left_end
        } else if l == lambda {
            &right_end
        } else {
            &interior
        };
        let d = &data[l * w..(l + 1) * w];
        for k in 0..w {
            coeffs[l * w + k] = (0..w).fold(T::zero(), |acc, v| acc + map[k * w + v] * d[v]);
        }
    }
    Ok(SplineInterpolant {
        knots: knots.clone(),
        coeffs,
    })
}

impl<T: Scalar> SplineInterpolant<T> {
    pub fn from_coefficients(knots: KnotVector<T>, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != knots.n_basis() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                knots.n_basis(),
                coeffs.len()
            )));
        }
        Ok(Self { knots, coeffs })
    }

    pub fn knots(&self) -> &KnotVector<T> {
        &self.knots
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn a(&self) -> usize {
        self.knots.a()
    }

    pub fn lambda(&self) -> usize {
        self.knots.lambda()
    }

    pub fn degree(&self) -> usize {
        self.knots.degree()
    }

    pub fn domain(&self) -> (T, T) {
        self.knots.domain()
    }

    /// Values of the derivatives `0..=nd` at `x` (orders above the degree are zero).
    /// Points outside the domain are evaluated on the nearest boundary piece.
    pub fn derivatives(&self, x: T, nd: usize) -> Vec<T> {
        let p = self.degree();
        let iota = self.knots.interval(x);
        let span = self.knots.span(iota);
        let ders = ders_basis_funs(self.knots.knots(), span, p, x, nd);
        let first = span - p;
        let mut out = vec![T::zero(); nd + 1];
        for (m, slot) in out.iter_mut().enumerate().take(nd.min(p) + 1) {
            *slot = (0..=p).fold(T::zero(), |acc, r| {
                acc + ders[m * (p + 1) + r] * self.coeffs[first + r]
            });
        }
        out
    }

    pub fn derivative(&self, x: T, m: usize) -> T {
        self.derivatives(x, m)[m]
    }

    pub fn eval(&self, x: T) -> T {
        self.derivative(x, 0)
    }

    /// Pointwise `self + other` on identical knots.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.knots != other.knots {
            return Err(Error::Shape("interpolants live on different knots".into()));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&x, &y)| x + y).collect();
        Ok(Self {
            knots: self.knots.clone(),
            coeffs,
        })
    }

    pub fn dump(&self) -> InterpolantDump {
        let w = self.a() + 1;
        InterpolantDump {
            a: self.a(),
            lambda: self.lambda(),
            xi: self.knots.points().iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
            coeffs: self
                .coeffs
                .chunks(w)
                .map(|c| c.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
                .collect(),
        }
    }
}

/// JSON form of an interpolant; `coeffs[i + 1][k] = c_i^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolantDump {
    pub a: usize,
    #[serde(rename = "Lambda")]
    pub lambda: usize,
    pub xi: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
}

impl InterpolantDump {
    pub fn to_interpolant(&self) -> Result<SplineInterpolant<f64>> {
        if self.xi.len() != self.lambda + 1 || self.xi.len() < 2 {
            return Err(Error::Shape("xi does not match Lambda".into()));
        }
        let h = (self.xi[self.lambda] - self.xi[0]) / self.lambda as f64;
        let knots = KnotVector::new(self.a, self.lambda, self.xi[0], h)?;
        if self.coeffs.iter().any(|c| c.len() != self.a + 1) {
            return Err(Error::Shape("coefficient rows must have a + 1 entries".into()));
        }
        SplineInterpolant::from_coefficients(knots, self.coeffs.concat())
    }
}

/// Sup of `|∂^u H|` over a dense sample (256 points per interval plus all knots).
pub fn interpolant_derivative_sup<T: Scalar>(interp: &SplineInterpolant<T>, u: usize) -> T {
    let per = 256;
    let kv = interp.knots();
    let mut best = T::zero();
    for iota in 0..kv.lambda() {
        let (lo, h) = (kv.xi(iota), kv.spacing());
        for s in 0..=per {
            let x = lo + h * T::from_usize_(s) / T::from_usize_(per);
            best = best.max(interp.derivative(x, u).abs());
        }
    }
    best
}
