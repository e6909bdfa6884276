use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the clipping map `x ↦ x φ(x / τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipKind {
    /// `C^∞` cutoff: `φ = 1` on `|ξ| ≤ 1`, `φ = 0` on `|ξ| ≥ 2`.
    #[default]
    Smooth,
    /// `x ↦ sign(x) min(|x|, τ)`, whose sup is exactly `τ`.
    Hard,
    /// Identity. Only meaningful without noise: the sup is infinite.
    Disabled,
}

fn psi(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth cutoff `φ(ξ) = ψ(2 − |ξ|) / (ψ(2 − |ξ|) + ψ(|ξ| − 1))`, `ψ(t) = e^{−1/t} 1_{t>0}`.
pub fn smooth_cutoff(xi: f64) -> f64 {
    let r = xi.abs();
    if r <= 1.0 {
        return 1.0;
    }
    if r >= 2.0 {
        return 0.0;
    }
    let (u, v) = (psi(2.0 - r), psi(r - 1.0));
    u / (u + v)
}

/// `(argmax, max)` of `ξ φ(ξ)` over `[1, 2]`, located by a dense scan and
/// golden-section refinement.
pub fn smooth_cutoff_peak() -> (f64, f64) {
    static PEAK: OnceLock<(f64, f64)> = OnceLock::new();
    *PEAK.get_or_init(|| {
        let g = |x: f64| x * smooth_cutoff(x);
        let n = 20_000;
        let best = (0..=n)
            .map(|s| 1.0 + s as f64 / n as f64)
            .fold(1.0, |b, x| if g(x) > g(b) { x } else { b });
        let (mut lo, mut hi) = ((best - 1.0 / n as f64).max(1.0), (best + 1.0 / n as f64).min(2.0));
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let (c, d) = (hi - r * (hi - lo), lo + r * (hi - lo));
            if g(c) >= g(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) >= g(best) {
            (mid, g(mid))
        } else {
            (best, g(best))
        }
    })
}

/// Clipping at `τ_n = √Δ_n log n` together with the sup `B` of the clipped map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipProfile {
    kind: ClipKind,
    tau: f64,
    sup: f64,
}

impl ClipProfile {
    pub fn new(kind: ClipKind, delta: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config("clipping needs n ≥ 2 so that log n > 0".into()));
        }
        Self::with_tau(kind, delta.sqrt() * (n as f64).ln())
    }

    pub fn with_tau(kind: ClipKind, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("clipping threshold must be positive, got {tau}")));
        }
        let sup = match kind {
            ClipKind::Smooth => tau * smooth_cutoff_peak().1,
            ClipKind::Hard => tau,
            ClipKind::Disabled => f64::INFINITY,
        };
        Ok(Self { kind, tau, sup })
    }

    pub fn kind(&self) -> ClipKind {
        self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `B = sup_x |x φ(x/τ)|`.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// A point where `|x φ(x/τ)|` attains `B`.
    pub fn argmax(&self) -> f64 {
        match self.kind {
            ClipKind::Smooth => self.tau * smooth_cutoff_peak().0,
            _ => self.tau,
        }
    }

    pub fn phi(&self, xi: f64) -> f64 {
        match self.kind {
            ClipKind::Smooth => smooth_cutoff(xi),
            ClipKind::Hard => 1.0f64.min(1.0 / xi.abs()),
            ClipKind::Disabled => 1.0,
        }
    }

    /// `x φ(x / τ)`, never exceeding `B` in absolute value.
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self.kind {
            ClipKind::Smooth => {
                let r = x.abs();
                if r <= self.tau {
                    x
                } else if r >= 2.0 * self.tau {
                    0.0
                } else {
                    (x * smooth_cutoff(x / self.tau)).clamp(-self.sup, self.sup)
                }
            }
            ClipKind::Hard => x.clamp(-self.tau, self.tau),
            ClipKind::Disabled => x,
        }
    }
}
