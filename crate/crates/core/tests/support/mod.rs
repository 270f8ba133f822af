//! Independent numerical oracles shared by the integration and acceptance
//! tests. Nothing here calls into the crate's special functions.
#![allow(dead_code)]

use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

thread_local! {
    static GL: Vec<(f64, f64)> = gauss_legendre(24);
}

fn panel<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Complex64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    GL.with(|gl| gl.iter().map(|&(x, w)| f(c + h * x) * w).sum::<Complex64>() * h)
}

fn adapt<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    whole: Complex64,
    tol: f64,
    floor: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let left = panel(f, a, m);
    let right = panel(f, m, b);
    let both = left + right;
    if depth == 0 || (both - whole).norm() <= tol.max(floor) {
        return both;
    }
    adapt(f, a, m, left, 0.5 * tol, floor, depth - 1) + adapt(f, m, b, right, 0.5 * tol, floor, depth - 1)
}

/// Adaptive 24-point Gauss–Legendre on `[a, b]` with absolute tolerance.
/// Panels stop refining once the change is at the rounding level of `∫|f|`.
pub fn integrate_complex<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    // Start from a handful of panels so narrow features are not skipped.
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    let bounds = |i: usize| (a + i as f64 * h, a + (i + 1) as f64 * h);
    let magnitude: f64 = (0..pieces)
        .map(|i| {
            let (lo, hi) = bounds(i);
            panel(&|x| Complex64::new(f(x).norm(), 0.0), lo, hi).re
        })
        .sum();
    let floor = 64.0 * f64::EPSILON * magnitude;
    (0..pieces)
        .map(|i| {
            let (lo, hi) = bounds(i);
            adapt(&f, lo, hi, panel(&f, lo, hi), tol / pieces as f64, floor, 30)
        })
        .sum()
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, tol).re
}

/// `erfcx(z) = (2/√π)∫₀^∞ exp(-t² - 2zt) dt`, valid for every complex `z`.
pub fn erfcx_quadrature(z: Complex64) -> Complex64 {
    let x = z.re;
    let upper = (-x).max(0.0) + (x.max(0.0).powi(2) + 80.0).sqrt() - x.max(0.0) + 1e-3;
    let peak = if x < 0.0 { (x * x).exp() } else { 1.0 };
    let scale = 2.0 / std::f64::consts::PI.sqrt();
    integrate_complex(|t| (Complex64::new(-t * t, 0.0) - z * (2.0 * t)).exp(), 0.0, upper, 1e-17 * peak)
        * scale
}

/// `erfc(x)` by quadrature of the Gaussian tail, reflected for `x < 0`.
pub fn erfc_quadrature(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc_quadrature(-x);
    }
    // erfc(x) = (2/√π) e^{-x²} ∫₀^∞ e^{-s² - 2xs} ds
    (-x * x).exp() * erfcx_quadrature(Complex64::new(x, 0.0)).re
}

/// Roots of `x³ - e1 x² + e2 x - e3` as eigenvalues of the companion matrix.
pub fn companion_roots(e1: f64, e2: f64, e3: f64) -> Vec<Complex64> {
    let m = nalgebra::Matrix3::new(e1, -e2, e3, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    m.complex_eigenvalues().iter().map(|z| Complex64::new(z.re, z.im)).collect()
}

/// Direct finite sum `e^{-μ} Σ_{ω<ξ} μ^ω/ω!` for moderate arguments.
pub fn poisson_direct(mean: f64, xi: u64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for w in 0..xi {
        sum += term;
        term *= mean / (w + 1) as f64;
    }
    (-mean).exp() * sum
}

/// Matches each root in `a` to the nearest unused root in `b` and returns the
/// largest distance relative to `scale`.
pub fn max_root_mismatch(a: &[Complex64], b: &[Complex64], scale: f64) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
            .unwrap();
        used[j] = true;
        worst = worst.max(d / scale);
    }
    worst
}

/// Two-sided Kolmogorov–Smirnov statistic of a sample against a CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Critical KS distance at significance 0.01 (asymptotic).
pub fn ks_critical_001(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

pub fn ks_critical_001_two(n: usize, m: usize) -> f64 {
    1.627_6 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Final center distances of `n` three-dimensional Gaussian walks of the
/// relative coordinate, started at distance `r0`, folded back radially
/// whenever they end a step inside the sphere of radius `sigma`.
pub fn reflected_walk(r0: f64, diffusion: f64, sigma: f64, t: f64, steps: usize, n: usize, seed: u64) -> Vec<f64> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    use rayon::prelude::*;
    let sd = (2.0 * diffusion * t / steps as f64).sqrt();
    let chunk = 4096;
    (0..n.div_ceil(chunk))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = chunk.min(n - c * chunk);
            (0..count)
                .map(|_| {
                    let mut p = [r0, 0.0, 0.0];
                    for _ in 0..steps {
                        for x in &mut p {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            *x += sd * z;
                        }
                        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                        if r < sigma {
                            let f = (2.0 * sigma - r) / r;
                            for x in &mut p {
                                *x *= f;
                            }
                        }
                    }
                    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

pub fn mean_and_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
