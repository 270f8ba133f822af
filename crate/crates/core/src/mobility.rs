//! Distance between a diffusing transmitter and receiver: the radial law of
//! two hard spheres in relative diffusion, tabulated samplers for it, and
//! Markov trajectories sampled at bit boundaries.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::RngCore;

use crate::channel::{DerivedParams, PhysicalParams};
use crate::num::Real;
use crate::rng::uniform;
use crate::specfun::w_kernel_real;
use crate::{ensure, Error, Result};

/// Default number of tabulation points of a [`DistanceLaw`].
pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Density of the center-to-center distance `r` at time `t`, given `r0` at
/// time zero, relative diffusion coefficient `d_eff2` and a reflecting
/// contact sphere of radius `sigma`.
///
/// Returns [`Error::DegenerateLaw`] for `d_eff2 = 0`, where the law is a point
/// mass at `r0`.
pub fn distance_pdf<T: Real>(r: T, t: T, r0: T, d_eff2: T, sigma: T) -> Result<T> {
    ensure!(t.is_finite() && t > T::zero(), InvalidArgument, "elapsed time must be > 0, got {t}");
    ensure!(sigma.is_finite() && sigma > T::zero(), InvalidArgument, "contact radius must be > 0, got {sigma}");
    ensure!(r0.is_finite() && r0 >= sigma, InvalidArgument, "start distance {r0} is below contact radius {sigma}");
    ensure!(d_eff2.is_finite() && d_eff2 >= T::zero(), InvalidArgument, "d_eff2 must be >= 0, got {d_eff2}");
    ensure!(!r.is_nan(), InvalidArgument, "distance is NaN");
    if d_eff2 == T::zero() {
        return Err(Error::DegenerateLaw);
    }
    if r < sigma || r.is_infinite() {
        return Ok(T::zero());
    }
    let four_dt = T::lit(4.0) * d_eff2 * t;
    let direct = (r - r0) * (r - r0) / four_dt;
    let image_arg = r + r0 - T::two() * sigma;
    let image = image_arg * image_arg / four_dt;
    let gauss = (r / r0) / (T::PI() * four_dt).sqrt() * ((-direct).exp() + (-image).exp());
    let n = image_arg / four_dt.sqrt();
    let m = (d_eff2 * t).sqrt() / sigma;
    let value = gauss - r / (r0 * sigma) * w_kernel_real(n, m);
    if value >= T::zero() {
        Ok(value)
    } else if value >= -T::lit(1e-12) * gauss.max(T::lit(1e-300)) {
        Ok(T::zero())
    } else {
        Err(Error::Numerical(format!("distance density {value} at r = {r} is negative")))
    }
}

/// Tabulated distance law for one start distance and elapsed time.
#[derive(Debug, Clone)]
pub struct DistanceLaw {
    pub r0: f64,
    pub t: f64,
    pub d_eff2: f64,
    pub sigma: f64,
    pub truncation_radius: f64,
    r: Vec<f64>,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
}

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

impl DistanceLaw {
    pub fn new(r0: f64, t: f64, d_eff2: f64, sigma: f64) -> Result<Self> {
        Self::with_grid(r0, t, d_eff2, sigma, DEFAULT_GRID_POINTS)
    }

    pub fn with_grid(r0: f64, t: f64, d_eff2: f64, sigma: f64, points: usize) -> Result<Self> {
        ensure!(points >= 16, InvalidArgument, "distance grid needs at least 16 points, got {points}");
        // Validates the arguments and rejects the degenerate case.
        distance_pdf(r0, t, r0, d_eff2, sigma)?;
        let spread = (2.0 * d_eff2 * t).sqrt();
        let truncation_radius = r0 + 12.0 * spread + sigma;
        let lo = sigma.max(r0 - 12.0 * spread);
        let hi = r0 + 12.0 * spread;

        // Geometric spacing when the reflecting wall is inside the support.
        let beta: f64 = if lo == sigma { 3.0 } else { 0.0 };
        let mut r = Vec::with_capacity(points + 1);
        for i in 0..points {
            let u = i as f64 / (points - 1) as f64;
            let frac = if beta == 0.0 { u } else { (beta * u).exp_m1() / beta.exp_m1() };
            r.push(lo + (hi - lo) * frac);
        }
        if truncation_radius > hi {
            r.push(truncation_radius);
        }

        let pdf = r
            .iter()
            .map(|&x| distance_pdf(x, t, r0, d_eff2, sigma))
            .collect::<Result<Vec<_>>>()?;
        let mut cdf = Vec::with_capacity(r.len());
        cdf.push(0.0);
        for w in r.windows(2) {
            let cell = gauss4(|x| distance_pdf(x, t, r0, d_eff2, sigma), w[0], w[1])?;
            cdf.push(cdf.last().unwrap() + cell);
        }
        let law = Self { r0, t, d_eff2, sigma, truncation_radius, r, pdf, cdf };
        let mass = law.total_mass();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::Numerical(format!(
                "tabulated distance law has mass {mass} (r0 = {r0}, t = {t}, d_eff2 = {d_eff2})"
            )));
        }
        Ok(law)
    }

    /// Integral of the density over the tabulated range.
    pub fn total_mass(&self) -> f64 {
        *self.cdf.last().unwrap()
    }

    pub fn pdf(&self, r: f64) -> f64 {
        distance_pdf(r, self.t, self.r0, self.d_eff2, self.sigma).unwrap_or(0.0)
    }

    /// Tabulation nodes and the density there.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.r.iter().copied().zip(self.pdf.iter().copied())
    }

    /// Distribution function, integrated exactly within the enclosing cell
    /// and normalized by [`Self::total_mass`].
    pub fn cdf(&self, r: f64) -> f64 {
        if r <= self.r[0] {
            return 0.0;
        }
        if r >= *self.r.last().unwrap() {
            return 1.0;
        }
        let i = self.r.partition_point(|&x| x <= r) - 1;
        let part = gauss4(|x| Ok(self.pdf(x)), self.r[i], r).unwrap_or(0.0);
        ((self.cdf[i] + part) / self.total_mass()).min(1.0)
    }

    /// Inverse of the tabulated distribution function, linear within cells.
    pub fn quantile(&self, u: f64) -> f64 {
        let target = u.clamp(0.0, 1.0) * self.total_mass();
        let j = self.cdf.partition_point(|&c| c <= target);
        if j == 0 {
            return self.r[0];
        }
        if j >= self.cdf.len() {
            return *self.r.last().unwrap();
        }
        let i = j - 1;
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        self.r[i] + (target - c0) / (c1 - c0) * (self.r[i + 1] - self.r[i])
    }

    pub fn sample(&self, rng: &mut impl RngCore) -> f64 {
        self.quantile(uniform(rng))
    }
}

fn gauss4<F: Fn(f64) -> Result<f64>>(f: F, a: f64, b: f64) -> Result<f64> {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for (x, w) in GL4 {
        s += w * f(c + h * x)?;
    }
    Ok(s * h)
}

/// Draws one distance from a tabulated law.
pub fn sample_distance(law: &DistanceLaw, rng: &mut impl RngCore) -> Result<f64> {
    if law.d_eff2 == 0.0 {
        return Err(Error::DegenerateLaw);
    }
    Ok(law.sample(rng))
}

/// One-interval transition of the distance process for arbitrary start
/// distances.
///
/// Laws are tabulated at start distances `sigma + k·spacing` and built on
/// first use. A transition from an intermediate distance mixes the quantile
/// functions of the two neighboring laws with the same uniform.
#[derive(Debug)]
pub struct TransitionKernel {
    t: f64,
    d_eff2: f64,
    sigma: f64,
    spacing: f64,
    grid_points: usize,
    laws: RwLock<HashMap<u64, Arc<DistanceLaw>>>,
}

impl TransitionKernel {
    pub fn new(t: f64, d_eff2: f64, sigma: f64) -> Result<Self> {
        ensure!(d_eff2 > 0.0 && d_eff2.is_finite(), InvalidArgument, "transition kernel needs d_eff2 > 0");
        ensure!(t > 0.0 && t.is_finite(), InvalidArgument, "transition time must be > 0");
        ensure!(sigma > 0.0 && sigma.is_finite(), InvalidArgument, "contact radius must be > 0");
        let spacing = (2.0 * d_eff2 * t).sqrt() / 20.0;
        Ok(Self { t, d_eff2, sigma, spacing, grid_points: DEFAULT_GRID_POINTS, laws: RwLock::new(HashMap::new()) })
    }

    /// Spacing of the tabulated start distances.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    fn law(&self, k: u64) -> Result<Arc<DistanceLaw>> {
        if let Some(law) = self.laws.read().unwrap().get(&k) {
            return Ok(law.clone());
        }
        let start = self.sigma + k as f64 * self.spacing;
        let law = Arc::new(DistanceLaw::with_grid(start, self.t, self.d_eff2, self.sigma, self.grid_points)?);
        Ok(self.laws.write().unwrap().entry(k).or_insert(law).clone())
    }

    /// Distance after one interval, from uniform `u`.
    pub fn quantile(&self, from: f64, u: f64) -> Result<f64> {
        ensure!(from >= self.sigma && from.is_finite(), InvalidArgument, "start distance {from} below contact");
        let x = (from - self.sigma) / self.spacing;
        let k = x.floor();
        let w = x - k;
        let k = k as u64;
        let a = self.law(k)?.quantile(u);
        if w == 0.0 {
            return Ok(a);
        }
        let b = self.law(k + 1)?.quantile(u);
        Ok(((1.0 - w) * a + w * b).max(self.sigma))
    }

    pub fn sample(&self, from: f64, rng: &mut impl RngCore) -> Result<f64> {
        self.quantile(from, uniform(rng))
    }
}

/// Distances at the start of each bit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub distances: Vec<f64>,
}

impl Trajectory {
    pub fn constant(r0: f64, len: usize) -> Self {
        Self { distances: vec![r0; len] }
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }
}

/// Samples trajectories for one parameter set; shares tabulated laws
/// between calls.
#[derive(Debug)]
pub struct TrajectorySampler {
    r0: f64,
    len: usize,
    kernel: Option<TransitionKernel>,
}

impl TrajectorySampler {
    pub fn new(params: &PhysicalParams<f64>, derived: &DerivedParams<f64>) -> Result<Self> {
        ensure!(params.seq_length >= 1, InvalidArgument, "sequence length must be >= 1");
        let kernel = if derived.nodes_static() {
            None
        } else {
            Some(TransitionKernel::new(params.bit_interval, derived.d_eff2, params.contact_radius())?)
        };
        Ok(Self { r0: params.r0, len: params.seq_length, kernel })
    }

    pub fn is_constant(&self) -> bool {
        self.kernel.is_none()
    }

    pub fn sample(&self, rng: &mut impl RngCore) -> Result<Trajectory> {
        let Some(kernel) = &self.kernel else {
            return Ok(Trajectory::constant(self.r0, self.len));
        };
        let mut distances = Vec::with_capacity(self.len);
        distances.push(self.r0);
        for _ in 1..self.len {
            let prev = *distances.last().unwrap();
            distances.push(kernel.sample(prev, rng)?);
        }
        Ok(Trajectory { distances })
    }
}

/// Samples one trajectory starting at `r0`. Builds its own law tables; use
/// [`TrajectorySampler`] when drawing many.
pub fn sample_trajectory(
    r0: f64,
    params: &PhysicalParams<f64>,
    derived: &DerivedParams<f64>,
    rng: &mut impl RngCore,
) -> Result<Trajectory> {
    let mut p = *params;
    p.r0 = r0;
    TrajectorySampler::new(&p, derived)?.sample(rng)
}
