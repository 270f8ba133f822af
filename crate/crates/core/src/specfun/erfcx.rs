//! Real scaled complementary error function, `erfcx(x) = exp(x²)·erfc(x)`.
//!
//! Rational Chebyshev approximations of W. J. Cody on the three classical
//! intervals `[0, 0.46875]`, `(0.46875, 4]` and `(4, ∞)`. Negative arguments go
//! through the reflection `erfcx(-x) = 2·exp(x²) - erfcx(x)`.

#![allow(clippy::excessive_precision)] // published coefficients, kept verbatim

use crate::num::Real;
use crate::{Error, Result};

const A: [f64; 5] = [
    3.161_123_743_870_565_6,
    113.864_154_151_050_156,
    377.485_237_685_302_021,
    3_209.377_589_138_469_47,
    0.185_777_706_184_603_153,
];
const B: [f64; 4] = [
    23.601_290_952_344_120_9,
    244.024_637_934_444_173,
    1_282.616_526_077_372_28,
    2_844.236_833_439_170_62,
];
const C: [f64; 9] = [
    0.564_188_496_988_670_089,
    8.883_149_794_388_375_94,
    66.119_190_637_141_629_5,
    298.635_138_197_400_131,
    881.952_221_241_769_09,
    1_712.047_612_634_070_58,
    2_051.078_377_826_071_47,
    1_230.339_354_797_997_25,
    2.153_115_354_744_038_46e-8,
];
const D: [f64; 8] = [
    15.744_926_110_709_834_7,
    117.693_950_891_312_499,
    537.181_101_862_009_858,
    1_621.389_574_566_690_19,
    3_290.799_235_733_459_63,
    4_362.619_090_143_247_16,
    3_439.367_674_143_721_64,
    1_230.339_354_803_749_42,
];
const P: [f64; 6] = [
    0.305_326_634_961_232_344,
    0.360_344_899_949_804_439,
    0.125_781_726_111_229_246,
    0.016_083_785_148_742_276_6,
    6.587_491_615_298_378_03e-4,
    0.016_315_387_137_302_097_8,
];
const Q: [f64; 5] = [
    2.568_520_192_289_822_42,
    1.872_952_849_923_460_47,
    0.527_905_102_951_428_412,
    0.060_518_341_312_441_319_1,
    0.002_335_204_976_268_691_85,
];

const THRESHOLD: f64 = 0.46875;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_95;
/// Below this argument `erfcx` exceeds `f64::MAX`.
pub(crate) const OVERFLOW_BELOW: f64 = -26.628_735_713_751_4;

#[inline]
fn small_interval<T: Real>(z: T) -> T {
    let a = |i: usize| T::lit(A[i]);
    let b = |i: usize| T::lit(B[i]);
    ((((a(4) * z + a(0)) * z + a(1)) * z + a(2)) * z + a(3))
        / ((((z + b(0)) * z + b(1)) * z + b(2)) * z + b(3))
}

#[inline]
fn middle_interval<T: Real>(y: T) -> T {
    let mut num = T::lit(C[8]) * y;
    for &c in &C[..7] {
        num = (num + T::lit(c)) * y;
    }
    num = num + T::lit(C[7]);
    let mut den = y;
    for &d in &D[..7] {
        den = (den + T::lit(d)) * y;
    }
    den = den + T::lit(D[7]);
    num / den
}

#[inline]
fn tail_interval<T: Real>(y: T) -> T {
    let z = (y * y).recip();
    let mut num = T::lit(P[5]) * z;
    for &p in &P[..4] {
        num = (num + T::lit(p)) * z;
    }
    num = num + T::lit(P[4]);
    let mut den = z;
    for &q in &Q[..4] {
        den = (den + T::lit(q)) * z;
    }
    den = den + T::lit(Q[4]);
    (T::lit(FRAC_1_SQRT_PI) - z * num / den) / y
}

/// `exp(x²)` split as `exp(x̃²)·exp((x - x̃)(x + x̃))` with `x̃` rounded to
/// sixteenths, which keeps the rounding error of `x²` out of the exponent.
#[inline]
fn exp_square<T: Real>(x: T) -> T {
    let sixteen = T::lit(16.0);
    let xt = (x * sixteen).trunc() / sixteen;
    (xt * xt).exp() * ((x - xt) * (x + xt)).exp()
}

/// `erfcx` without argument validation. Returns `+∞` below the overflow
/// point and NaN for NaN.
#[inline]
pub(crate) fn erfcx_unchecked<T: Real>(x: T) -> T {
    let y = x.abs();
    if y <= T::lit(THRESHOLD) {
        let z = y * y;
        return z.exp() * (T::one() - x * small_interval(z));
    }
    if x < T::lit(OVERFLOW_BELOW) {
        return T::infinity();
    }
    let r = if y <= T::lit(4.0) {
        middle_interval(y)
    } else {
        tail_interval(y)
    };
    if x < T::zero() {
        T::two() * exp_square(x) - r
    } else {
        r
    }
}

/// Scaled complementary error function `exp(x²)·erfc(x)` for real `x`.
///
/// Relative accuracy is close to machine precision for every finite `x`
/// above the overflow point near `-26.63`; below it the result is not
/// representable and an error is returned.
pub fn erfcx<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("erfcx argument must be finite, got {x}")));
    }
    let v = erfcx_unchecked(x);
    if !v.is_finite() {
        return Err(Error::Numerical(format!("erfcx({x}) overflows")));
    }
    Ok(v)
}

/// `erfc(x)` computed through `erfcx`, for use where the unscaled value is
/// wanted.
#[cfg(test)]
pub(crate) fn erfc_unchecked<T: Real>(x: T) -> T {
    if x > T::lit(27.3) {
        return T::zero();
    }
    if x >= T::zero() {
        let y = x.abs();
        if y <= T::lit(THRESHOLD) {
            return T::one() - x * small_interval(y * y);
        }
        erfcx_unchecked(x) / exp_square(x)
    } else {
        T::two() - erfc_unchecked(-x)
    }
}
