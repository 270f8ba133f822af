//! Roots of a real cubic given its elementary symmetric functions.

use num_complex::Complex;

use crate::num::Real;
use crate::{Error, Result};

/// The three roots `α, β, γ` of `x³ - e1·x² + e2·x - e3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicRoots<T> {
    pub roots: [Complex<T>; 3],
    /// Largest backward error of the three symmetric-function equations,
    /// each scaled by the sum of absolute values of its monomials.
    pub residual: T,
    /// Set when two roots coincide to within `1e-9` of the largest root
    /// magnitude.
    pub degenerate: bool,
}

impl<T: Real> CubicRoots<T> {
    /// Elementary symmetric functions of the stored roots.
    pub fn symmetric(&self) -> (Complex<T>, Complex<T>, Complex<T>) {
        let [a, b, c] = self.roots;
        (a + b + c, a * b + b * c + a * c, a * b * c)
    }

    /// Whether all three roots are real.
    pub fn all_real(&self) -> bool {
        self.roots.iter().all(|r| r.im == T::zero())
    }
}

fn tolerance<T: Real>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(64.0))
}

fn backward_error<T: Real>(roots: &[Complex<T>; 3], e: [T; 3]) -> T {
    let [a, b, c] = *roots;
    let got = [a + b + c, a * b + b * c + a * c, a * b * c];
    let scale = [
        a.norm() + b.norm() + c.norm(),
        a.norm() * b.norm() + b.norm() * c.norm() + a.norm() * c.norm(),
        a.norm() * b.norm() * c.norm(),
    ];
    let mut worst = T::zero();
    for i in 0..3 {
        let s = scale[i].max(e[i].abs());
        if s > T::zero() {
            worst = worst.max((got[i] - e[i]).norm() / s);
        }
    }
    worst
}

fn eval<T: Real>(x: Complex<T>, e: [T; 3]) -> (Complex<T>, Complex<T>) {
    let f = ((x - e[0]) * x + e[1]) * x - e[2];
    let df = (x * T::lit(3.0) - e[0] * T::two()) * x + e[1];
    (f, df)
}

fn polish<T: Real>(mut x: Complex<T>, e: [T; 3]) -> Complex<T> {
    for _ in 0..4 {
        let (f, df) = eval(x, e);
        if df.norm() == T::zero() {
            break;
        }
        let next = x - f / df;
        if eval(next, e).0.norm() < f.norm() {
            x = next;
        } else {
            break;
        }
    }
    x
}

fn polish_real<T: Real>(x: T, e: [T; 3]) -> T {
    polish(Complex::new(x, T::zero()), e).re
}

/// Closed form on the depressed cubic. Returns the roots with conjugate
/// structure imposed exactly.
fn closed_form<T: Real>(e: [T; 3]) -> [Complex<T>; 3] {
    let three = T::lit(3.0);
    let shift = e[0] / three;
    // x = y + shift turns x³ - e1 x² + e2 x - e3 into y³ + p y + q.
    let p = e[1] - e[0] * e[0] / three;
    let q = -T::two() * e[0].powi(3) / T::lit(27.0) + e[0] * e[1] / three - e[2];
    let disc = q * q / T::lit(4.0) + p.powi(3) / T::lit(27.0);
    let re = |v: T| Complex::new(v, T::zero());

    if disc < T::zero() {
        // Three distinct real roots (p < 0 here).
        let m = T::two() * (-p / three).sqrt();
        let arg = (three * q / (p * m)).max(-T::one()).min(T::one());
        let phi = arg.acos() / three;
        let step = T::two() * T::PI() / three;
        let mut r = [
            polish_real(m * phi.cos() + shift, e),
            polish_real(m * (phi - step).cos() + shift, e),
            polish_real(m * (phi - step - step).cos() + shift, e),
        ];
        r.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        return [re(r[0]), re(r[1]), re(r[2])];
    }

    let s = disc.sqrt();
    let big = -q.signum() * (q.abs() / T::two() + s).cbrt();
    let small = if big == T::zero() { T::zero() } else { -p / (three * big) };
    let x1 = polish_real(big + small + shift, e);
    // Remaining quadratic x² - sum·x + prod from the first two symmetric
    // functions, which avoids dividing by a small x1.
    let sum = e[0] - x1;
    let prod = e[1] - x1 * sum;
    let half = sum / T::two();
    let d = prod - half * half;
    if d > T::zero() {
        let w = polish(Complex::new(half, d.sqrt()), e);
        [re(x1), w, w.conj()]
    } else {
        let t = (-d).sqrt();
        let (u, v) = if half >= T::zero() { (half + t, half - t) } else { (half - t, half + t) };
        // Use the product for the smaller-magnitude root when possible.
        let v = if u != T::zero() { prod / u } else { v };
        [re(x1), re(polish_real(u, e)), re(polish_real(v, e))]
    }
}

/// Durand–Kerner iteration on the monic cubic, used when the closed form
/// loses too much accuracy.
fn simultaneous_iteration<T: Real>(e: [T; 3]) -> [Complex<T>; 3] {
    let radius = T::one() + e[0].abs().max(e[1].abs().sqrt()).max(e[2].abs().cbrt());
    let seed = Complex::new(T::lit(0.4), T::lit(0.9));
    let mut z = [
        Complex::new(radius, T::zero()) * seed,
        Complex::new(radius, T::zero()) * seed * seed,
        Complex::new(radius, T::zero()) * seed * seed * seed,
    ];
    for _ in 0..500 {
        let mut moved = T::zero();
        for i in 0..3 {
            let mut den = Complex::new(T::one(), T::zero());
            for j in 0..3 {
                if i != j {
                    den = den * (z[i] - z[j]);
                }
            }
            if den.norm() == T::zero() {
                continue;
            }
            let delta = eval(z[i], e).0 / den;
            z[i] = z[i] - delta;
            moved = moved.max(delta.norm() / (T::one() + z[i].norm()));
        }
        if moved < T::epsilon() {
            break;
        }
    }
    let mut out = z.map(|x| polish(x, e));
    // Snap nearly real roots and enforce the conjugate pair.
    let tiny = T::lit(1e3) * T::epsilon();
    out.sort_by(|a, b| a.im.abs().partial_cmp(&b.im.abs()).unwrap_or(std::cmp::Ordering::Equal));
    if out[1].im.abs() <= tiny * out[1].norm() {
        for r in &mut out {
            r.im = T::zero();
        }
    } else {
        out[0].im = T::zero();
        let pair = Complex::new((out[1].re + out[2].re) / T::two(), out[1].im.abs().max(out[2].im.abs()));
        out[1] = pair;
        out[2] = pair.conj();
    }
    out
}

fn is_degenerate<T: Real>(roots: &[Complex<T>; 3]) -> bool {
    let scale = roots.iter().map(|r| r.norm()).fold(T::zero(), T::max);
    if scale == T::zero() {
        return true;
    }
    let gap = (roots[0] - roots[1])
        .norm()
        .min((roots[1] - roots[2]).norm())
        .min((roots[0] - roots[2]).norm());
    gap < T::lit(1e-9) * scale
}

/// Solves for `α, β, γ` given `α+β+γ = e1`, `αβ+βγ+αγ = e2`, `αβγ = e3`.
pub fn roots_from_symmetric<T: Real>(e1: T, e2: T, e3: T) -> Result<CubicRoots<T>> {
    if !(e1.is_finite() && e2.is_finite() && e3.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "symmetric functions must be finite, got ({e1}, {e2}, {e3})"
        )));
    }
    let e = [e1, e2, e3];
    let tol = tolerance::<T>();
    let mut roots = closed_form(e);
    let mut residual = backward_error(&roots, e);
    if !(residual <= tol) {
        let alt = simultaneous_iteration(e);
        let alt_residual = backward_error(&alt, e);
        if alt_residual < residual || residual.is_nan() {
            roots = alt;
            residual = alt_residual;
        }
    }
    if !(residual <= tol) {
        return Err(Error::Numerical(format!(
            "cubic roots for ({e1}, {e2}, {e3}) have residual {residual}"
        )));
    }
    Ok(CubicRoots { roots, residual, degenerate: is_degenerate(&roots) })
}
