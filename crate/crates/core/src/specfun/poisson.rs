//! Lower tail of the Poisson distribution, `Pr(N < ξ)` for `N ~ Poisson(mean)`.
//!
//! Individual probability masses use the saddle-point form
//! `ln p(k) = -stirlerr(k) - bd0(k, mean) - ½ln(2πk)`, which stays accurate
//! when `k` and `mean` are both large.

use crate::num::Real;
use crate::{Error, Result};

/// `ln k! - (k ln k - k + ½ ln 2πk)`.
fn stirlerr<T: Real>(k: u64) -> T {
    if k <= 15 {
        let mut lf = T::zero();
        for i in 2..=k {
            lf = lf + T::lit(i as f64).ln();
        }
        let kf = T::lit(k as f64);
        return lf - (kf * kf.ln() - kf + T::half() * (T::two() * T::PI() * kf).ln());
    }
    let n = T::lit(k as f64);
    let n2 = n * n;
    let s0 = T::lit(1.0 / 12.0);
    let s1 = T::lit(1.0 / 360.0);
    let s2 = T::lit(1.0 / 1260.0);
    let s3 = T::lit(1.0 / 1680.0);
    (s0 - (s1 - (s2 - s3 / n2) / n2) / n2) / n
}

/// `k·ln(k/mean) + mean - k`, without cancellation for `k ≈ mean`.
fn bd0<T: Real>(k: T, mean: T) -> T {
    if (k - mean).abs() < T::lit(0.1) * (k + mean) {
        let v = (k - mean) / (k + mean);
        let mut s = (k - mean) * v;
        let mut ej = T::two() * k * v;
        let v2 = v * v;
        let mut j = 1.0;
        loop {
            ej = ej * v2;
            let next = s + ej / T::lit(2.0 * j + 1.0);
            if next == s {
                return s;
            }
            s = next;
            j += 1.0;
        }
    }
    k * (k / mean).ln() + mean - k
}

/// Natural log of the Poisson mass at `k`; `mean > 0`.
fn ln_pmf<T: Real>(k: u64, mean: T) -> T {
    if k == 0 {
        return -mean;
    }
    let kf = T::lit(k as f64);
    -stirlerr::<T>(k) - bd0(kf, mean) - T::half() * (T::two() * T::PI() * kf).ln()
}

fn check_mean<T: Real>(mean: T) -> Result<()> {
    if !(mean >= T::zero()) || !mean.is_finite() {
        return Err(Error::InvalidArgument(format!("Poisson mean must be finite and non-negative, got {mean}")));
    }
    Ok(())
}

/// `Pr(N < xi) = exp(-mean)·Σ_{ω<xi} mean^ω/ω!`.
pub fn poisson_cdf_below<T: Real>(mean: T, xi: u64) -> Result<T> {
    check_mean(mean)?;
    if xi == 0 {
        return Ok(T::zero());
    }
    if mean == T::zero() {
        return Ok(T::one());
    }
    let top = xi - 1;
    let eps = T::epsilon() * T::lit(0.25);
    let mode = mean.floor().to_u64().unwrap_or(u64::MAX).min(top);
    let peak = ln_pmf(mode, mean).exp();
    if peak == T::zero() {
        // Every retained term underflows: the whole sum sits far in a tail.
        return Ok(if T::lit(top as f64) < mean { T::zero() } else { T::one() });
    }
    let mut sum = peak;
    // Downward from the mode: p(ω-1) = p(ω)·ω/mean.
    let mut term = peak;
    let mut w = mode;
    while w > 0 {
        term = term * T::lit(w as f64) / mean;
        w -= 1;
        sum = sum + term;
        if term < eps * sum {
            break;
        }
    }
    // Upward to the cutoff: p(ω+1) = p(ω)·mean/(ω+1).
    let mut term = peak;
    let mut w = mode;
    while w < top {
        w += 1;
        term = term * mean / T::lit(w as f64);
        sum = sum + term;
        if term < eps * sum {
            break;
        }
    }
    Ok(sum.min(T::one()))
}

/// `Pr(N < ξ)` for every `ξ` in `0..=xi_max`, sharing one pass over the
/// probability masses.
pub fn poisson_cdf_ladder<T: Real>(mean: T, xi_max: u64) -> Result<Vec<T>> {
    check_mean(mean)?;
    let mut out = Vec::with_capacity(xi_max as usize + 1);
    out.push(T::zero());
    if xi_max == 0 {
        return Ok(out);
    }
    if mean == T::zero() {
        out.resize(xi_max as usize + 1, T::one());
        return Ok(out);
    }
    let mut acc = T::zero();
    if mean < T::lit(500.0) {
        let mut term = (-mean).exp();
        for w in 0..xi_max {
            acc = acc + term;
            out.push(acc.min(T::one()));
            term = term * mean / T::lit((w + 1) as f64);
        }
    } else {
        for w in 0..xi_max {
            acc = acc + ln_pmf(w, mean).exp();
            out.push(acc.min(T::one()));
        }
    }
    Ok(out)
}
