//! Complex `erfcx` through the Faddeeva function `w(z) = exp(-z²)·erfc(-iz)`.
//!
//! In the upper half-plane `w` is evaluated with Weideman's rational
//! expansion (N = 40) near the origin and with the Laplace continued fraction
//! far from it; the region split follows the one used by the Faddeeva
//! package. The lower half-plane uses `w(z) = 2·exp(-z²) - w(-z)`, and
//! `erfcx(z) = w(iz)`.

use std::sync::OnceLock;

use num_complex::Complex;

use super::erfcx::erfcx_unchecked;
use crate::num::Real;
use crate::{Error, Result};

const WEIDEMAN_N: usize = 40;

fn weideman_coefficients() -> &'static [f64; WEIDEMAN_N] {
    static COEFFS: OnceLock<[f64; WEIDEMAN_N]> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let n = WEIDEMAN_N as f64;
        let m = 2 * WEIDEMAN_N;
        let l = (n / std::f64::consts::SQRT_2).sqrt();
        // Samples of exp(-t²)(L² + t²) at t = L·tan(θ/2), θ = kπ/M.
        let samples: Vec<(f64, f64)> = (-(m as i64) + 1..m as i64)
            .map(|k| {
                let theta = k as f64 * std::f64::consts::PI / m as f64;
                let t = l * (theta / 2.0).tan();
                (theta, (-t * t).exp() * (l * l + t * t))
            })
            .collect();
        let mut a = [0.0; WEIDEMAN_N];
        for (j, coeff) in a.iter_mut().enumerate() {
            let order = (j + 1) as f64;
            let s: f64 = samples.iter().map(|&(theta, f)| f * (order * theta).cos()).sum();
            *coeff = s / (2 * m) as f64;
        }
        a
    })
}

fn weideman<T: Real>(z: Complex<T>) -> Complex<T> {
    let a = weideman_coefficients();
    let l = T::lit((WEIDEMAN_N as f64 / std::f64::consts::SQRT_2).sqrt());
    let iz = Complex::new(-z.im, z.re);
    let denom = Complex::new(l, T::zero()) - iz;
    let zz = (Complex::new(l, T::zero()) + iz) / denom;
    let mut p = Complex::new(T::lit(a[WEIDEMAN_N - 1]), T::zero());
    for &c in a[..WEIDEMAN_N - 1].iter().rev() {
        p = p * zz + T::lit(c);
    }
    let frac_1_sqrt_pi = T::FRAC_2_SQRT_PI() * T::half();
    p * T::two() / (denom * denom) + denom.inv() * frac_1_sqrt_pi
}

fn continued_fraction<T: Real>(z: Complex<T>) -> Complex<T> {
    let rho = ((z.re / T::lit(6.3)).powi(2) + (z.im / T::lit(4.4)).powi(2)).sqrt();
    let terms = (T::lit(3.0) + T::lit(1442.0) / (T::lit(26.0) * rho + T::lit(77.0)))
        .ceil()
        .to_usize()
        .unwrap_or(20)
        .max(4);
    let mut r = Complex::new(T::zero(), T::zero());
    for k in (1..=terms).rev() {
        r = (z - r).inv() * (T::lit(k as f64) * T::half());
    }
    let frac_1_sqrt_pi = T::FRAC_2_SQRT_PI() * T::half();
    Complex::new(T::zero(), frac_1_sqrt_pi) / (z - r)
}

/// Faddeeva function for `Im z ≥ 0`.
fn w_upper<T: Real>(z: Complex<T>) -> Complex<T> {
    let x = z.re.abs();
    let y = z.im;
    let far = y > T::lit(7.0)
        || (x > T::lit(6.0)
            && (y > T::lit(0.1) || (x > T::lit(8.0) && y > T::lit(1e-10)) || x > T::lit(28.0)));
    if far {
        continued_fraction(z)
    } else {
        weideman(z)
    }
}

/// `erfcx(z)` for complex `z` without validation. May overflow to a
/// non-finite value deep in the left half-plane.
pub(crate) fn erfcx_complex_unchecked<T: Real>(z: Complex<T>) -> Complex<T> {
    if z.im == T::zero() {
        return Complex::new(erfcx_unchecked(z.re), T::zero());
    }
    if z.re >= T::zero() {
        w_upper(Complex::new(-z.im, z.re))
    } else {
        let e = (z * z).exp();
        e * T::two() - w_upper(Complex::new(z.im, -z.re))
    }
}

/// Analytic continuation of `erfcx` to complex arguments.
///
/// Agrees with [`erfcx`](super::erfcx) on the real axis and satisfies
/// `erfcx(conj z) = conj(erfcx z)`.
pub fn erfcx_complex<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("erfcx_complex argument must be finite, got {z}")));
    }
    let v = erfcx_complex_unchecked(z);
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Numerical(format!("erfcx_complex({z}) overflows")));
    }
    Ok(v)
}
