//! Parametric diffusion models `dX = b(θ, X) dt + σ(X) dW`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{falling, Scalar};

/// A drift family indexed by `θ ∈ [0, 1]` with known diffusion coefficient.
///
/// Implementations supply analytic θ-derivatives of the drift; the contrast and
/// the privacy channel never differentiate numerically.
pub trait DiffusionModel<T: Scalar>: Send + Sync {
    fn name(&self) -> &str;

    /// `∂_θ^order b(θ, x)`, or `None` when the order is not provided.
    fn drift_dtheta(&self, order: usize, theta: T, x: T) -> Option<T>;

    fn diffusion(&self, x: T) -> T;

    fn drift(&self, theta: T, x: T) -> T {
        self.drift_dtheta(0, theta, x)
            .expect("order-0 drift is always available")
    }

    /// Highest available θ-derivative order; `None` means unlimited.
    fn max_derivative_order(&self) -> Option<usize> {
        None
    }

    /// Degree of `b₁` when `b(θ, x) = b₁(θ) b₂(x)` with `b₁` polynomial.
    fn polynomial_degree_in_theta(&self) -> Option<usize> {
        None
    }

    /// Whether the drift is bounded in `x` (the "linear" model is not).
    fn bounded_drift(&self) -> bool {
        true
    }

    /// Fill `out[k] = ∂_θ^k b(θ, x)` for `k < out.len()`.
    fn drift_derivatives(&self, theta: T, x: T, out: &mut [T]) -> Result<()> {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self
                .drift_dtheta(k, theta, x)
                .ok_or(Error::MissingDerivative(k))?;
        }
        Ok(())
    }

    /// Fill `out[l * orders + k] = ∂_θ^k b(thetas[l], x)`.
    fn drift_derivatives_on_grid(
        &self,
        thetas: &[T],
        x: T,
        orders: usize,
        out: &mut [T],
    ) -> Result<()> {
        for (l, &theta) in thetas.iter().enumerate() {
            self.drift_derivatives(theta, x, &mut out[l * orders..(l + 1) * orders])?;
        }
        Ok(())
    }

    fn check_orders(&self, max_order: usize) -> Result<()> {
        match self.max_derivative_order() {
            Some(m) if m < max_order => Err(Error::MissingDerivative(m + 1)),
            _ => Ok(()),
        }
    }
}

/// State part `b₂(x)` of a separable drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFactor {
    Sin,
    Tanh,
    /// `b₂(x) = x`; unbounded, only "effectively bounded" on short horizons.
    Identity,
    One,
}

impl StateFactor {
    pub fn eval<T: Scalar>(self, x: T) -> T {
        match self {
            StateFactor::Sin => x.sin(),
            StateFactor::Tanh => x.tanh(),
            StateFactor::Identity => x,
            StateFactor::One => T::one(),
        }
    }

    pub fn bounded(self) -> bool {
        !matches!(self, StateFactor::Identity)
    }
}

/// Known diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Volatility {
    Constant { value: f64 },
    /// `σ(x) = base + amp / (1 + x²)`, bounded below by `base`.
    Bump { base: f64, amp: f64 },
}

impl Default for Volatility {
    fn default() -> Self {
        Volatility::Constant { value: 1.0 }
    }
}

impl Volatility {
    pub fn eval<T: Scalar>(self, x: T) -> T {
        match self {
            Volatility::Constant { value } => T::lit(value),
            Volatility::Bump { base, amp } => T::lit(base) + T::lit(amp) / (T::one() + x * x),
        }
    }

    pub fn lower_bound(self) -> f64 {
        match self {
            Volatility::Constant { value } => value,
            Volatility::Bump { base, amp } => base + amp.min(0.0),
        }
    }
}

/// `b(θ, x) = b₁(θ) b₂(x)` with `b₁` a polynomial (coefficients in ascending order).
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableModel {
    name: String,
    theta_poly: Vec<f64>,
    state: StateFactor,
    volatility: Volatility,
}

impl SeparableModel {
    pub fn new(
        name: impl Into<String>,
        theta_poly: Vec<f64>,
        state: StateFactor,
        volatility: Volatility,
    ) -> Result<Self> {
        if volatility.lower_bound() <= 0.0 {
            return Err(Error::Config(format!(
                "diffusion coefficient must be bounded away from zero, got lower bound {}",
                volatility.lower_bound()
            )));
        }
        let mut theta_poly = theta_poly;
        while theta_poly.last() == Some(&0.0) {
            theta_poly.pop();
        }
        Ok(Self {
            name: name.into(),
            theta_poly,
            state,
            volatility,
        })
    }

    /// `b(θ, x) = θ sin x`, `σ ≡ 1`.
    pub fn sine() -> Self {
        Self::new("sine", vec![0.0, 1.0], StateFactor::Sin, Volatility::default()).unwrap()
    }

    /// `b(θ, x) = θ tanh x`, `σ ≡ 1`.
    pub fn tanh() -> Self {
        Self::new("tanh", vec![0.0, 1.0], StateFactor::Tanh, Volatility::default()).unwrap()
    }

    /// `b(θ, x) = θ x`, `σ ≡ 1`. Unbounded drift.
    pub fn linear() -> Self {
        Self::new(
            "linear",
            vec![0.0, 1.0],
            StateFactor::Identity,
            Volatility::default(),
        )
        .unwrap()
    }

    /// `b ≡ 0`, `σ ≡ 1`: Brownian motion.
    pub fn zero_drift() -> Self {
        Self::new("zero", vec![], StateFactor::One, Volatility::default()).unwrap()
    }

    /// `b(θ, x) = sin x`: the drift does not depend on θ.
    pub fn theta_free_sine() -> Self {
        Self::new("theta_free_sine", vec![1.0], StateFactor::Sin, Volatility::default()).unwrap()
    }

    pub fn theta_poly(&self) -> &[f64] {
        &self.theta_poly
    }

    pub fn state(&self) -> StateFactor {
        self.state
    }

    pub fn volatility(&self) -> Volatility {
        self.volatility
    }

    fn poly_derivative<T: Scalar>(&self, order: usize, theta: T) -> T {
        // Horner on the order-th derivative.
        let coeffs = &self.theta_poly;
        if order >= coeffs.len() {
            return T::zero();
        }
        let mut acc = T::zero();
        for m in (order..coeffs.len()).rev() {
            acc = acc * theta + T::lit(coeffs[m]) * falling::<T>(m, order);
        }
        acc
    }
}

impl<T: Scalar> DiffusionModel<T> for SeparableModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn drift_dtheta(&self, order: usize, theta: T, x: T) -> Option<T> {
        Some(self.poly_derivative(order, theta) * self.state.eval(x))
    }

    fn diffusion(&self, x: T) -> T {
        self.volatility.eval(x)
    }

    fn polynomial_degree_in_theta(&self) -> Option<usize> {
        Some(self.theta_poly.len().saturating_sub(1))
    }

    fn bounded_drift(&self) -> bool {
        self.state.bounded()
    }

    fn drift_derivatives(&self, theta: T, x: T, out: &mut [T]) -> Result<()> {
        let s = self.state.eval(x);
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.poly_derivative(k, theta) * s;
        }
        Ok(())
    }

    fn drift_derivatives_on_grid(
        &self,
        thetas: &[T],
        x: T,
        orders: usize,
        out: &mut [T],
    ) -> Result<()> {
        let s = self.state.eval(x);
        for (l, &theta) in thetas.iter().enumerate() {
            for k in 0..orders {
                out[l * orders + k] = self.poly_derivative(k, theta) * s;
            }
        }
        Ok(())
    }
}

type DriftFn<T> = Box<dyn Fn(T, T) -> T + Send + Sync>;

/// Model assembled from closures: `derivatives[k]` is `∂_θ^k b`.
pub struct FnModel<T: Scalar> {
    name: String,
    derivatives: Vec<DriftFn<T>>,
    diffusion: Box<dyn Fn(T) -> T + Send + Sync>,
}

impl<T: Scalar> FnModel<T> {
    pub fn new(
        name: impl Into<String>,
        derivatives: Vec<DriftFn<T>>,
        diffusion: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Result<Self> {
        if derivatives.is_empty() {
            return Err(Error::Config("at least the drift itself is required".into()));
        }
        Ok(Self {
            name: name.into(),
            derivatives,
            diffusion: Box::new(diffusion),
        })
    }
}

impl<T: Scalar> DiffusionModel<T> for FnModel<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn drift_dtheta(&self, order: usize, theta: T, x: T) -> Option<T> {
        self.derivatives.get(order).map(|f| f(theta, x))
    }

    fn diffusion(&self, x: T) -> T {
        (self.diffusion)(x)
    }

    fn max_derivative_order(&self) -> Option<usize> {
        Some(self.derivatives.len() - 1)
    }
}

/// Serializable model description used by configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Sine,
    Tanh,
    Linear,
    Zero,
    ThetaFreeSine,
    /// `b(θ, x) = (Σ c_m θ^m) · b₂(x)`.
    Separable {
        theta_poly: Vec<f64>,
        state: StateFactor,
        #[serde(default)]
        volatility: Volatility,
    },
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Sine
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<SeparableModel> {
        Ok(match self {
            ModelSpec::Sine => SeparableModel::sine(),
            ModelSpec::Tanh => SeparableModel::tanh(),
            ModelSpec::Linear => SeparableModel::linear(),
            ModelSpec::Zero => SeparableModel::zero_drift(),
            ModelSpec::ThetaFreeSine => SeparableModel::theta_free_sine(),
            ModelSpec::Separable {
                theta_poly,
                state,
                volatility,
            } => SeparableModel::new("separable", theta_poly.clone(), *state, *volatility)?,
        })
    }
}
