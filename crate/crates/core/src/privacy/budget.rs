use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-observation privacy levels `α_1..α_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    alphas: Vec<f64>,
    alpha_bar2: f64,
    alpha_eff: f64,
    alpha_min: f64,
    alpha_max: f64,
}

impl PrivacyBudget {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::Config("privacy budget needs at least one level".into()));
        }
        if let Some((j, a)) = alphas.iter().enumerate().find(|(_, a)| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::Config(format!(
                "privacy level α_{} must be positive and finite, got {a}",
                j + 1
            )));
        }
        let n = alphas.len() as f64;
        let inv_sq = alphas.iter().map(|a| 1.0 / (a * a)).sum::<f64>() / n;
        Ok(Self {
            alpha_bar2: 1.0 / inv_sq,
            alpha_eff: alphas.iter().sum(),
            alpha_min: alphas.iter().copied().fold(f64::INFINITY, f64::min),
            alpha_max: alphas.iter().copied().fold(0.0, f64::max),
            alphas,
        })
    }

    pub fn constant(n: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![alpha; n])
    }

    /// `α_j = α_eff / n`, so that the total leakage is `α_eff`.
    pub fn from_effective(n: usize, alpha_eff: f64) -> Result<Self> {
        Self::constant(n, alpha_eff / n as f64)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// `ᾱ₂` with `1/ᾱ₂ = n⁻¹ Σ_j 1/α_j²`.
    pub fn alpha_bar2(&self) -> f64 {
        self.alpha_bar2
    }

    /// `α_eff = Σ_j α_j`.
    pub fn alpha_eff(&self) -> f64 {
        self.alpha_eff
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha_min
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    pub fn ratio(&self) -> f64 {
        self.alpha_max / self.alpha_min
    }
}

/// Total leakage about one time point through a dependent trajectory: `Σ_j α_j`.
pub fn effective_privacy(budget: &PrivacyBudget) -> f64 {
    budget.alpha_eff()
}
