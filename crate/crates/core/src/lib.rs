//! Drift estimation for i.i.d. discretely observed diffusions under
//! componentwise local differential privacy.

pub mod contrast;
pub mod diffusion_sim;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod model;
pub mod privacy;
pub mod rng;
pub mod scalar;
pub mod spline;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SplineInterpolant64 = spline::SplineInterpolant<f64>;
pub type SplineInterpolant32 = spline::SplineInterpolant<f32>;
pub type KnotVector64 = spline::KnotVector<f64>;
pub type KnotVector32 = spline::KnotVector<f32>;
pub type ContrastTerm64 = contrast::ContrastTerm<f64>;
pub type ContrastTerm32 = contrast::ContrastTerm<f32>;
