//! Physical parameter model and the analytical channel impulse response of a
//! reactive receiver with reversible binding, molecule degradation and a
//! finite receptor coverage, for fixed or diffusing transceivers.

use num_complex::Complex;

use crate::num::Real;
use crate::specfun::{roots_from_symmetric, w_kernel_scaled, CubicRoots};
use crate::{ensure, Error, Result};

/// All physical constants of the link. SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams<T> {
    /// Molecules released per bit "1" (`N_A`).
    pub num_molecules: u64,
    /// Signaling molecule diffusion coefficient (`D_A`), m²/s.
    pub diff_a: T,
    pub diff_tx: T,
    pub diff_rx: T,
    /// Initial center-to-center distance, m.
    pub r0: T,
    pub radius_rx: T,
    pub radius_tx: T,
    /// Microscopic forward binding rate, molecule⁻¹·m³·s⁻¹.
    pub k_f: T,
    /// Unbinding rate, s⁻¹.
    pub k_b: T,
    /// Degradation rate of free molecules, s⁻¹.
    pub k_d: T,
    pub num_receptors: u64,
    pub receptor_radius: T,
    /// Bit interval `T`, s.
    pub bit_interval: T,
    /// Sampling offset `t_s` within a bit interval, s.
    pub sample_offset: T,
    pub seq_length: usize,
    /// Probability of a "1".
    pub p1: T,
    /// Replaces the homogenized forward rate computed from the receptor
    /// geometry.
    pub k_f_mod_override: Option<T>,
}

impl PhysicalParams<f64> {
    /// Reference parameter set (fixed nodes; `diff_tx = 0`).
    pub fn reference() -> Self {
        Self {
            num_molecules: 5000,
            diff_a: 0.5e-9,
            diff_tx: 0.0,
            diff_rx: 0.5e-12,
            r0: 1e-6,
            radius_rx: 0.5e-6,
            radius_tx: 0.0,
            k_f: 12.5e-15,
            k_b: 2e5,
            k_d: 0.2e5,
            num_receptors: 1000,
            receptor_radius: 13.95e-9,
            bit_interval: 0.3e-3,
            sample_offset: 0.06e-3,
            seq_length: 10,
            p1: 0.5,
            k_f_mod_override: None,
        }
    }
}

/// Hydrodynamic radius implied by a diffusion coefficient in water at 25 °C
/// (Stokes–Einstein, `D·a = k_B·T / 6πη`).
pub fn stokes_einstein_radius(diffusion: f64) -> f64 {
    const D_TIMES_RADIUS: f64 = 2.4357e-19;
    D_TIMES_RADIUS / diffusion
}

impl<T: Real> PhysicalParams<T> {
    /// Fraction of the receiver surface covered by receptors, `λ`.
    pub fn coverage(&self) -> T {
        let m = T::lit(self.num_receptors as f64);
        m * self.receptor_radius * self.receptor_radius / (T::lit(4.0) * self.radius_rx * self.radius_rx)
    }

    /// Closest possible center-to-center distance of the two nodes.
    pub fn contact_radius(&self) -> T {
        self.radius_rx + self.radius_tx
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("diff_a", self.diff_a),
            ("diff_tx", self.diff_tx),
            ("diff_rx", self.diff_rx),
            ("radius_tx", self.radius_tx),
            ("k_f", self.k_f),
            ("k_b", self.k_b),
            ("k_d", self.k_d),
            ("receptor_radius", self.receptor_radius),
        ];
        for (name, v) in nonneg {
            ensure!(v.is_finite() && v >= T::zero(), InvalidConfig, "{name} must be finite and >= 0, got {v}");
        }
        ensure!(self.diff_a > T::zero(), InvalidConfig, "diff_a must be > 0");
        ensure!(
            self.radius_rx.is_finite() && self.radius_rx > T::zero(),
            InvalidConfig,
            "radius_rx must be > 0, got {}",
            self.radius_rx
        );
        ensure!(
            self.r0.is_finite() && self.r0 >= self.contact_radius(),
            InvalidConfig,
            "r0 = {} must be at least radius_rx + radius_tx = {}",
            self.r0,
            self.contact_radius()
        );
        ensure!(
            self.sample_offset > T::zero() && self.sample_offset <= self.bit_interval && self.bit_interval.is_finite(),
            InvalidConfig,
            "need 0 < sample_offset <= bit_interval, got {} and {}",
            self.sample_offset,
            self.bit_interval
        );
        ensure!(self.p1 >= T::zero() && self.p1 <= T::one(), InvalidConfig, "p1 must lie in [0, 1], got {}", self.p1);
        ensure!(self.seq_length >= 1, InvalidConfig, "seq_length must be >= 1");
        if let Some(k) = self.k_f_mod_override {
            ensure!(k.is_finite() && k >= T::zero(), InvalidConfig, "k_f_mod override must be >= 0, got {k}");
        }
        let lambda = self.coverage();
        ensure!(lambda <= T::one(), InvalidConfig, "receptor coverage {lambda} exceeds 1");
        Ok(())
    }
}

/// Whether the transceivers diffuse. In fixed mode both nodes are pinned and
/// the molecule diffusion coefficient enters the impulse response unchanged;
/// in mobile mode it is replaced by `D_A + D_RX` everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MobilityMode {
    Fixed,
    Mobile,
}

/// Constants derived from [`PhysicalParams`] for one mobility mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams<T> {
    pub lambda: T,
    pub phi: T,
    /// Homogenized forward rate of the reactive surface.
    pub k_f_mod: T,
    pub d_eff1: T,
    pub d_eff2: T,
    /// Molecule diffusion coefficient used in the impulse response.
    pub diffusion: T,
    /// Degradation rate the roots were solved for; differs from the
    /// configured one only when the roots had to be separated.
    pub k_d_used: T,
    pub symmetric: [T; 3],
    pub roots: CubicRoots<T>,
    pub mode: MobilityMode,
}

impl<T: Real> DerivedParams<T> {
    /// True when the distance between the nodes never changes.
    pub fn nodes_static(&self) -> bool {
        self.mode == MobilityMode::Fixed || self.d_eff2 == T::zero()
    }
}

fn coverage_correction<T: Real>(p: &PhysicalParams<T>, diffusion: T, lambda: T) -> T {
    let pi = T::PI();
    let m = T::lit(p.num_receptors as f64);
    let rs2 = p.receptor_radius * p.receptor_radius;
    let a = p.radius_rx;
    let num = m * rs2 * (p.k_f * a + T::lit(4.0) * pi * diffusion);
    if num == T::zero() {
        return T::zero();
    }
    let den = a * a * (T::one() - lambda) * (pi * p.receptor_radius * p.k_f + T::lit(16.0) * pi * diffusion) + num;
    num / den
}

fn modified_forward_rate<T: Real>(p: &PhysicalParams<T>, diffusion: T, phi: T) -> T {
    let four_pi_d = T::lit(4.0) * T::PI() * diffusion;
    four_pi_d * p.k_f * phi / (p.k_f * p.radius_rx * (T::one() - phi) + four_pi_d)
}

fn symmetric_functions<T: Real>(p: &PhysicalParams<T>, diffusion: T, k_f_mod: T, k_d: T) -> [T; 3] {
    let s = diffusion.sqrt() / p.radius_rx;
    let reactivity = T::one() + k_f_mod / (T::lit(4.0) * T::PI() * p.radius_rx * diffusion);
    [reactivity * s, p.k_b - k_d, p.k_b * s - k_d * reactivity * s]
}

/// Computes coverage, correction factor, homogenized rate, effective
/// diffusion coefficients and the cubic roots for the given mode.
pub fn derive<T: Real>(params: &PhysicalParams<T>, mode: MobilityMode) -> Result<DerivedParams<T>> {
    params.validate()?;
    let d_eff1 = params.diff_a + params.diff_rx;
    let d_eff2 = params.diff_tx + params.diff_rx;
    let diffusion = match mode {
        MobilityMode::Fixed => params.diff_a,
        MobilityMode::Mobile => d_eff1,
    };
    let lambda = params.coverage();
    let phi = coverage_correction(params, diffusion, lambda);
    let k_f_mod = params
        .k_f_mod_override
        .unwrap_or_else(|| modified_forward_rate(params, diffusion, phi));

    let mut k_d = params.k_d;
    let mut symmetric = symmetric_functions(params, diffusion, k_f_mod, k_d);
    let mut roots = roots_from_symmetric(symmetric[0], symmetric[1], symmetric[2])?;
    if roots.degenerate {
        // The impulse response has a removable singularity at coinciding
        // roots; move off it by a relative 1e-9 change of k_d.
        let bump = if k_d > T::zero() {
            k_d * T::lit(1e-9)
        } else {
            T::lit(1e-9) * params.k_b.max(symmetric[0] * symmetric[0]).max(T::one())
        };
        k_d = k_d + bump;
        log::warn!("coinciding cubic roots; evaluating with k_d perturbed to {k_d}");
        symmetric = symmetric_functions(params, diffusion, k_f_mod, k_d);
        roots = roots_from_symmetric(symmetric[0], symmetric[1], symmetric[2])?;
    }
    Ok(DerivedParams { lambda, phi, k_f_mod, d_eff1, d_eff2, diffusion, k_d_used: k_d, symmetric, roots, mode })
}

/// Probability that a molecule released at distance `r0` at time zero
/// occupies a receptor at time `t`.
pub fn cir<T: Real>(t: T, r0: T, derived: &DerivedParams<T>, params: &PhysicalParams<T>) -> Result<T> {
    ensure!(t.is_finite() && t > T::zero(), InvalidArgument, "cir time must be > 0, got {t}");
    ensure!(
        r0.is_finite() && r0 >= params.radius_rx,
        InvalidArgument,
        "release distance {r0} lies inside the receiver (radius {})",
        params.radius_rx
    );
    if derived.k_f_mod == T::zero() {
        return Ok(T::zero());
    }
    let a = params.radius_rx;
    let d = derived.diffusion;
    let sqrt_t = t.sqrt();
    let n = (r0 - a) / (T::lit(4.0) * d * t).sqrt();
    let log_decay = -derived.k_d_used * t;
    let roots = derived.roots.roots;

    let mut total = Complex::new(T::zero(), T::zero());
    let mut magnitude = T::zero();
    for i in 0..3 {
        let alpha = roots[i];
        let mut den = Complex::new(T::one(), T::zero());
        for (j, other) in roots.iter().enumerate() {
            if j != i {
                den = den * (*other - alpha);
            }
        }
        let term = -alpha / den * w_kernel_scaled(n, alpha * sqrt_t, log_decay);
        magnitude = magnitude + term.norm();
        total = total + term;
    }
    if !(total.re.is_finite() && total.im.is_finite()) {
        return Err(Error::Numerical(format!("impulse response at t = {t} is not finite")));
    }
    // Partial sums cancel strongly at early times, so the admissible
    // imaginary residue is judged against the size of the terms.
    if total.im.abs() > T::lit(1e-9) * magnitude.max(total.re.abs()) {
        return Err(Error::Numerical(format!(
            "impulse response at t = {t} has imaginary part {} against real part {}",
            total.im, total.re
        )));
    }
    let prefactor = derived.k_f_mod / (T::lit(4.0) * T::PI() * r0 * a * d.sqrt());
    let value = prefactor * total.re;
    let slack = T::lit(1e-9) * prefactor * magnitude;
    if value < -slack || value > T::one() + slack {
        return Err(Error::Numerical(format!("impulse response {value} at t = {t} is not a probability")));
    }
    Ok(value.max(T::zero()).min(T::one()))
}

/// Expected number of occupied receptors after one release, `N_A·cir(t)`.
pub fn expected_received_signal<T: Real>(t: T, derived: &DerivedParams<T>, params: &PhysicalParams<T>) -> Result<T> {
    if params.num_molecules == 0 {
        ensure!(t.is_finite() && t > T::zero(), InvalidArgument, "time must be > 0, got {t}");
        return Ok(T::zero());
    }
    Ok(T::lit(params.num_molecules as f64) * cir(t, params.r0, derived, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> PhysicalParams<f64> {
        PhysicalParams::reference()
    }

    #[test]
    fn coverage_of_reference_receiver() {
        // 1000·(13.95e-9)² / (4·(0.5e-6)²)
        let lambda = reference().coverage();
        assert!((lambda - 0.194_602_5).abs() < 1e-12);
    }

    #[test]
    fn mobile_substitution_uses_effective_diffusion() {
        let d = derive(&reference(), MobilityMode::Mobile).unwrap();
        assert_eq!(d.d_eff1, 0.5e-9 + 0.5e-12);
        assert!((d.d_eff1 - 5.005e-10).abs() < 1e-24);
        assert_eq!(d.diffusion, d.d_eff1);
        let f = derive(&reference(), MobilityMode::Fixed).unwrap();
        assert_eq!(f.diffusion, 0.5e-9);
    }

    #[test]
    fn no_receptors_means_no_binding() {
        let mut p = reference();
        p.num_receptors = 0;
        let d = derive(&p, MobilityMode::Fixed).unwrap();
        assert_eq!(d.phi, 0.0);
        assert_eq!(d.k_f_mod, 0.0);
        assert_eq!(cir(1e-4, p.r0, &d, &p).unwrap(), 0.0);
    }

    #[test]
    fn zero_forward_rate_gives_zero_response() {
        let mut p = reference();
        p.k_f = 0.0;
        let d = derive(&p, MobilityMode::Fixed).unwrap();
        for &t in &[1e-6, 6e-5, 3e-4, 1e-2] {
            assert_eq!(cir(t, p.r0, &d, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn nothing_arrives_instantly() {
        let p = reference();
        let d = derive(&p, MobilityMode::Fixed).unwrap();
        assert!(cir(1e-12, p.r0, &d, &p).unwrap() < 1e-12);
    }

    #[test]
    fn override_replaces_homogenized_rate() {
        let mut p = reference();
        p.k_f_mod_override = Some(1e-15);
        let d = derive(&p, MobilityMode::Fixed).unwrap();
        assert_eq!(d.k_f_mod, 1e-15);
    }

    #[test]
    fn over_full_coverage_is_rejected() {
        let mut p = reference();
        p.num_receptors = 10_000;
        assert!(matches!(derive(&p, MobilityMode::Fixed), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let p = reference();
        let d = derive(&p, MobilityMode::Fixed).unwrap();
        assert!(cir(0.0, p.r0, &d, &p).is_err());
        assert!(cir(1e-4, 0.4e-6, &d, &p).is_err());
        let mut bad = p;
        bad.r0 = 0.3e-6;
        assert!(derive(&bad, MobilityMode::Fixed).is_err());
    }

    #[test]
    fn received_signal_scales_with_release_size() {
        let mut p = reference();
        let d = derive(&p, MobilityMode::Fixed).unwrap();
        let t = 6e-5;
        let pac = cir(t, p.r0, &d, &p).unwrap();
        assert_eq!(expected_received_signal(t, &d, &p).unwrap(), 5000.0 * pac);
        p.num_molecules = 0;
        assert_eq!(expected_received_signal(t, &d, &p).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_roots_are_separated() {
        // k_f_mod = 0 and k_b = k_d leave a double root at zero.
        let mut p = reference();
        p.num_receptors = 0;
        p.k_b = p.k_d;
        let d = derive(&p, MobilityMode::Fixed).unwrap();
        assert!(d.k_d_used > p.k_d);
        assert!(((d.k_d_used - p.k_d) / p.k_d - 1e-9).abs() < 1e-12);
    }

    #[test]
    fn single_precision_follows_double() {
        let p = reference();
        let d = derive(&p, MobilityMode::Fixed).unwrap();
        let want = cir(6e-5, p.r0, &d, &p).unwrap();
        let p32 = PhysicalParams::<f32> {
            num_molecules: p.num_molecules,
            diff_a: p.diff_a as f32,
            diff_tx: 0.0,
            diff_rx: p.diff_rx as f32,
            r0: p.r0 as f32,
            radius_rx: p.radius_rx as f32,
            radius_tx: 0.0,
            k_f: p.k_f as f32,
            k_b: p.k_b as f32,
            k_d: p.k_d as f32,
            num_receptors: p.num_receptors,
            receptor_radius: p.receptor_radius as f32,
            bit_interval: p.bit_interval as f32,
            sample_offset: p.sample_offset as f32,
            seq_length: p.seq_length,
            p1: 0.5,
            k_f_mod_override: None,
        };
        let d32 = derive(&p32, MobilityMode::Fixed).unwrap();
        let got = cir(6e-5_f32, p32.r0, &d32, &p32).unwrap() as f64;
        assert!(((got - want) / want).abs() < 1e-3, "{got} vs {want}");
    }
}
