//! B-spline basis functions by the Cox–de Boor recursion.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `q (left / dl − right / dr)` with the `0/0 = 0` convention of the recursion.
#[inline]
fn ratio<T: Scalar>(num: T, den: T) -> T {
    if den == T::zero() {
        T::zero()
    } else {
        num / den
    }
}

/// `m`-th derivative of the B-spline of degree `p = window.len() − 2` whose
/// support is `[window[0], window[p+1]]`.
///
/// Degree-0 pieces are indicators of `[t_j, t_{j+1})`; at the right end of the
/// support the value is the limit from the left.
pub fn bspline_eval<T: Scalar>(window: &[T], x: T, m: usize) -> Result<T> {
    if window.len() < 2 {
        return Err(Error::Shape("a knot window needs at least two knots".into()));
    }
    let p = window.len() - 2;
    if m > p {
        return Err(Error::UnsupportedOrder { order: m, max: p });
    }
    if window.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("knots must be non-decreasing".into()));
    }
    let (lo, hi) = (window[0], window[p + 1]);
    if x < lo || x > hi || lo == hi {
        return Ok(T::zero());
    }
    let from_left = x == hi;
    // Degree-0 indicators for every interval of the window.
    let mut vals: Vec<T> = (0..=p)
        .map(|j| {
            let (a, b) = (window[j], window[j + 1]);
            let inside = if from_left { a < x && x <= b } else { a <= x && x < b };
            if inside {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    // Raise the degree to p − m with the value recursion.
    for q in 1..=p - m {
        for j in 0..=p - q {
            let left = ratio((x - window[j]) * vals[j], window[j + q] - window[j]);
            let right = ratio(
                (window[j + q + 1] - x) * vals[j + 1],
                window[j + q + 1] - window[j + 1],
            );
            vals[j] = left + right;
        }
    }
    // Then apply the derivative recursion m times.
    for q in p - m + 1..=p {
        let qf = T::from_usize_(q);
        for j in 0..=p - q {
            let left = ratio(vals[j], window[j + q] - window[j]);
            let right = ratio(vals[j + 1], window[j + q + 1] - window[j + 1]);
            vals[j] = qf * (left - right);
        }
    }
    Ok(vals[0])
}

/// Values and derivatives up to `nd` of the `p + 1` basis functions that are
/// nonzero on the knot span `[knots[span], knots[span+1])`.
///
/// Returns `ders[k * (p + 1) + r] = B^{(k)}_{span − p + r}(x)`.
pub(crate) fn ders_basis_funs<T: Scalar>(
    knots: &[T],
    span: usize,
    p: usize,
    x: T,
    nd: usize,
) -> Vec<T> {
    let nd = nd.min(p);
    let w = p + 1;
    let mut ndu = vec![T::zero(); w * w];
    let mut left = vec![T::zero(); w];
    let mut right = vec![T::zero(); w];
    ndu[0] = T::one();
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = T::zero();
        for r in 0..j {
            // Lower triangle holds knot differences, upper triangle basis values.
            ndu[j * w + r] = right[r + 1] + left[j - r];
            let temp = ndu[r * w + j - 1] / ndu[j * w + r];
            ndu[r * w + j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j * w + j] = saved;
    }
    let mut ders = vec![T::zero(); (nd + 1) * w];
    for j in 0..=p {
        ders[j] = ndu[j * w + p];
    }
    let mut a = vec![T::zero(); 2 * w];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0] = T::one();
        for k in 1..=nd {
            let mut d = T::zero();
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                let rk = rk as usize;
                a[s2 * w] = a[s1 * w] / ndu[(pk + 1) * w + rk];
                d = a[s2 * w] * ndu[rk * w + pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2 * w + j] = (a[s1 * w + j] - a[s1 * w + j - 1]) / ndu[(pk + 1) * w + idx];
                d = d + a[s2 * w + j] * ndu[idx * w + pk];
            }
            if r <= pk {
                a[s2 * w + k] = -a[s1 * w + k - 1] / ndu[(pk + 1) * w + r];
                d = d + a[s2 * w + k] * ndu[r * w + pk];
            }
            ders[k * w + r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = T::from_usize_(p);
    for k in 1..=nd {
        for j in 0..=p {
            ders[k * w + j] = ders[k * w + j] * factor;
        }
        factor = factor * T::from_usize_(p - k);
    }
    ders
}
