//! Scalar abstraction shared by the deterministic numerics.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn from_usize_(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Binomial coefficient as a float. Exact for the small arguments used here.
pub fn binomial<T: Scalar>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    T::from_u128(acc).expect("binomial representable")
}

/// `n!` as a float.
pub fn factorial<T: Scalar>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, i| acc * T::from_usize_(i))
}

/// Falling factorial `n (n-1) ... (n-k+1)`.
pub fn falling<T: Scalar>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    ((n - k + 1)..=n).fold(T::one(), |acc, i| acc * T::from_usize_(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_combinatorics() {
        assert_eq!(binomial::<f64>(4, 2), 6.0);
        assert_eq!(binomial::<f64>(8, 4), 70.0);
        assert_eq!(binomial::<f64>(3, 5), 0.0);
        assert_eq!(factorial::<f64>(5), 120.0);
        assert_eq!(falling::<f64>(9, 3), 504.0);
        assert_eq!(falling::<f32>(4, 0), 1.0);
    }
}
