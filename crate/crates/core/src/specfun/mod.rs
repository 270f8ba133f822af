//! Scalar special functions used by the channel and detector models.

mod cubic;
mod erfcx;
mod faddeeva;
mod poisson;

use num_complex::Complex;

pub use cubic::{roots_from_symmetric, CubicRoots};
pub use erfcx::erfcx;
pub use faddeeva::erfcx_complex;
pub use poisson::{poisson_cdf_below, poisson_cdf_ladder};

#[cfg(test)]
pub(crate) use erfcx::erfc_unchecked;
pub(crate) use erfcx::erfcx_unchecked;
pub(crate) use faddeeva::erfcx_complex_unchecked;

use crate::num::Real;
use crate::{Error, Result};

/// `W(n, m) = exp(2nm + m²)·erfc(n + m)`, evaluated as `exp(-n²)·erfcx(n + m)`.
///
/// The literal form overflows as soon as `2nm + m²` exceeds ~709 even though
/// the product is tiny; the rewritten form never does for `Re(n + m) ≥ 0`.
pub fn w_kernel<T: Real>(n: T, m: Complex<T>) -> Result<Complex<T>> {
    if !(n.is_finite() && m.re.is_finite() && m.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("w_kernel arguments must be finite, got ({n}, {m})")));
    }
    let v = w_kernel_scaled(n, m, T::zero());
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Numerical(format!("w_kernel({n}, {m}) overflows")));
    }
    Ok(v)
}

/// `exp(log_scale)·W(n, m)`. The scale is folded into the exponent so that a
/// decaying prefactor can cancel growth of `W` when `Re(n + m) < 0`.
#[inline]
pub(crate) fn w_kernel_scaled<T: Real>(n: T, m: Complex<T>, log_scale: T) -> Complex<T> {
    let z = m + n;
    if z.re >= T::zero() {
        erfcx_complex_unchecked(z) * (log_scale - n * n).exp()
    } else {
        // erfcx(z) = 2 exp(z²) - erfcx(-z), and z² - n² = 2nm + m².
        let grow = (m * n * T::two() + m * m + log_scale).exp() * T::two();
        grow - erfcx_complex_unchecked(-z) * (log_scale - n * n).exp()
    }
}

/// Real-argument `W(n, m)` for callers that never leave the real line.
#[inline]
pub(crate) fn w_kernel_real<T: Real>(n: T, m: T) -> T {
    let z = n + m;
    if z >= T::zero() {
        (-n * n).exp() * erfcx_unchecked(z)
    } else {
        T::two() * (T::two() * n * m + m * m).exp() - (-n * n).exp() * erfcx_unchecked(-z)
    }
}
