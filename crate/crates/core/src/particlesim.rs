//! Brownian-dynamics simulator of the link: diffusing transmitter and
//! receiver spheres, diffusing signaling molecules with first-order
//! degradation, and reversible binding to a homogenized reactive receiver
//! surface with at most `M` occupied receptors.
//!
//! Positions are kept relative to the receiver center. Random numbers come
//! from counter-based streams keyed by realization, molecule and time step
//! (see [`crate::rng`]), so a run with `substeps = 2` at step `dt` follows
//! the same Brownian paths as a run at `dt / 2`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::{DerivedParams, PhysicalParams};
use crate::detection::BitSequence;
use crate::rng::{uniform, CounterRng, StreamKey};
use crate::{ensure, Error, Result};

const TAG_INIT: u64 = 1;
const TAG_NODES: u64 = 2;
const TAG_MOLECULES: u64 = 3;
const TAG_BITS: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub num_realizations: usize,
    pub seed: u64,
    /// Times at which the bound count is recorded, s.
    pub record_grid: Vec<f64>,
    /// Distance above the receiver surface at which unbound molecules are
    /// placed, m.
    pub unbind_offset: f64,
    /// Verify geometry and molecule bookkeeping after every step.
    pub debug_checks: bool,
    /// Each step's Brownian increments are sums of this many sub-increments
    /// drawn on the grid of `dt / substeps`.
    pub substeps: u32,
    /// Optional reflecting outer sphere around the receiver, m.
    pub confinement_radius: Option<f64>,
}

impl SimConfig {
    pub fn new(dt: f64, num_realizations: usize, seed: u64, radius_rx: f64) -> Self {
        Self {
            dt,
            num_realizations,
            seed,
            record_grid: Vec::new(),
            unbind_offset: radius_rx / 100.0,
            debug_checks: false,
            substeps: 1,
            confinement_radius: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Molecule {
    pos: [f64; 3],
    key: StreamKey,
    /// Unbinding events so far.
    epoch: u64,
    /// Binding hazard accumulated over surface crossings, and the Exp(1)
    /// level at which the molecule binds. Equivalent to an independent
    /// trial with probability `p_bind` per crossing.
    hazard: f64,
    threshold: f64,
}

impl Molecule {
    fn new(pos: [f64; 3], key: StreamKey, epoch: u64) -> Self {
        let mut rng = key.child(u64::MAX - epoch).rng();
        let threshold = -(-uniform(&mut rng)).ln_1p();
        Self { pos, key, epoch, hazard: 0.0, threshold }
    }
}

/// Counters of molecule events since the start of a realization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub injected: u64,
    pub degraded: u64,
    pub bindings: u64,
    pub unbindings: u64,
}

#[derive(Debug, Clone)]
pub struct SimState {
    key: StreamKey,
    /// Receiver center in the lab frame.
    pub rx_pos: [f64; 3],
    /// Transmitter center relative to the receiver center.
    pub tx_rel: [f64; 3],
    free: Vec<Molecule>,
    bound: Vec<(StreamKey, u64)>,
    pub steps: u64,
    pub time: f64,
    pub tally: Tally,
    next_id: u64,
}

impl SimState {
    pub fn tx_pos(&self) -> [f64; 3] {
        add(self.rx_pos, self.tx_rel)
    }

    pub fn bound_count(&self) -> usize {
        self.bound.len()
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    /// Free molecule positions relative to the receiver center.
    pub fn free_positions(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.free.iter().map(|m| m.pos)
    }
}

#[inline]
fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn normal3(rng: &mut CounterRng, sd: f64) -> [f64; 3] {
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    let z: f64 = StandardNormal.sample(rng);
    [x * sd, y * sd, z * sd]
}

fn direction(rng: &mut CounterRng) -> [f64; 3] {
    let z = 2.0 * uniform(rng) - 1.0;
    let phi = 2.0 * std::f64::consts::PI * uniform(rng);
    let rho = (1.0 - z * z).max(0.0).sqrt();
    [rho * phi.cos(), rho * phi.sin(), z]
}

/// Moves `p` radially so that it lies at least `sigma` from the origin.
#[inline]
fn reflect_inside_out(p: [f64; 3], sigma: f64) -> [f64; 3] {
    let r = dot(p, p).sqrt();
    if r >= sigma {
        p
    } else if r == 0.0 {
        [sigma, 0.0, 0.0]
    } else {
        scale(p, (2.0 * sigma - r) / r)
    }
}

/// Fraction along `from → to` where the segment enters the sphere of radius
/// `a`; `from` is outside and `to` inside.
#[inline]
fn entry_fraction(from: [f64; 3], to: [f64; 3], a: f64) -> f64 {
    let d = sub(to, from);
    let dd = dot(d, d);
    let b = dot(from, d);
    let c = (dot(from, from) - a * a).max(0.0);
    let disc = (b * b - dd * c).max(0.0);
    // Smaller root of dd·τ² + 2bτ + c, written to avoid cancellation.
    let tau = if b < 0.0 { c / (-b + disc.sqrt()) } else { (-b - disc.sqrt()) / dd };
    tau.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
struct Kinetics {
    sd_molecule: f64,
    sd_tx: f64,
    sd_rx: f64,
    p_degrade: f64,
    p_unbind: f64,
    p_bind: f64,
    bind_hazard: f64,
    radius: f64,
    contact: f64,
    place_radius: f64,
    capacity: usize,
    mobile: bool,
    substeps: u64,
    outer: Option<f64>,
}

/// A validated simulation setup.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    params: &'a PhysicalParams<f64>,
    config: &'a SimConfig,
    kin: Kinetics,
}

impl<'a> Simulator<'a> {
    pub fn new(params: &'a PhysicalParams<f64>, derived: &'a DerivedParams<f64>, config: &'a SimConfig) -> Result<Self> {
        params.validate()?;
        let a = params.radius_rx;
        let dt = config.dt;
        ensure!(dt.is_finite() && dt > 0.0, InvalidConfig, "dt must be > 0, got {dt}");
        ensure!(config.substeps >= 1, InvalidConfig, "substeps must be >= 1");
        let mobile = !derived.nodes_static();
        let d_max = if mobile { params.diff_a.max(params.diff_tx).max(params.diff_rx) } else { params.diff_a };
        let jump = (2.0 * d_max * dt).sqrt();
        ensure!(
            jump <= a / 10.0,
            InvalidConfig,
            "step length {jump:e} m exceeds a tenth of the receiver radius; reduce dt"
        );
        ensure!(
            config.unbind_offset > 0.0 && config.unbind_offset <= a / 100.0,
            InvalidConfig,
            "unbind_offset must lie in (0, radius_rx/100], got {}",
            config.unbind_offset
        );
        for &t in &config.record_grid {
            ensure!(t.is_finite() && t >= 0.0, InvalidConfig, "record times must be >= 0, got {t}");
        }
        if let Some(outer) = config.confinement_radius {
            ensure!(
                outer > a + config.unbind_offset && outer > params.r0,
                InvalidConfig,
                "confinement radius {outer} must enclose the receiver and the transmitter"
            );
        }
        let kappa = derived.k_f_mod / (4.0 * std::f64::consts::PI * a * a);
        let p_bind = kappa * (std::f64::consts::PI * dt / derived.diffusion).sqrt();
        ensure!(
            p_bind <= 1.0,
            InvalidConfig,
            "binding probability {p_bind} exceeds 1 at dt = {dt:e}; reduce dt"
        );
        let s = config.substeps as f64;
        let sub_dt = dt / s;
        let kin = Kinetics {
            sd_molecule: (2.0 * params.diff_a * sub_dt).sqrt(),
            sd_tx: (2.0 * params.diff_tx * sub_dt).sqrt(),
            sd_rx: (2.0 * params.diff_rx * sub_dt).sqrt(),
            p_degrade: -(-params.k_d * sub_dt).exp_m1(),
            p_unbind: -(-params.k_b * sub_dt).exp_m1(),
            p_bind,
            bind_hazard: -(-p_bind).ln_1p(),
            radius: a,
            contact: params.contact_radius(),
            place_radius: a + config.unbind_offset,
            capacity: params.num_receptors.min(usize::MAX as u64) as usize,
            mobile,
            substeps: config.substeps as u64,
            outer: config.confinement_radius,
        };
        Ok(Self { params, config, kin })
    }

    pub fn binding_probability(&self) -> f64 {
        self.kin.p_bind
    }

    /// Transmitter at distance `r0` from the receiver in a random direction.
    pub fn initial_state(&self, realization: u64) -> SimState {
        let key = StreamKey::new(self.config.seed).child(realization);
        let dir = direction(&mut key.child(TAG_INIT).rng());
        SimState {
            key,
            rx_pos: [0.0; 3],
            tx_rel: scale(dir, self.params.r0),
            free: Vec::new(),
            bound: Vec::new(),
            steps: 0,
            time: 0.0,
            tally: Tally::default(),
            next_id: 0,
        }
    }

    /// Releases `count` molecules at the transmitter center.
    pub fn inject(&self, state: &mut SimState, count: u64) {
        let molecules = state.key.child(TAG_MOLECULES);
        state.free.reserve(count as usize);
        for _ in 0..count {
            state.free.push(Molecule::new(state.tx_rel, molecules.child(state.next_id), 0));
            state.next_id += 1;
        }
        state.tally.injected += count;
    }

    /// Advances the state by one `dt`.
    pub fn step(&self, state: &mut SimState) -> Result<()> {
        let k = &self.kin;
        let first = state.steps * k.substeps;

        let mut d_rx = [0.0; 3];
        if k.mobile {
            let nodes = state.key.child(TAG_NODES);
            let mut d_tx = [0.0; 3];
            for s in 0..k.substeps {
                let mut rng = nodes.child(first + s).rng();
                d_rx = add(d_rx, normal3(&mut rng, k.sd_rx));
                d_tx = add(d_tx, normal3(&mut rng, k.sd_tx));
            }
            state.rx_pos = add(state.rx_pos, d_rx);
            state.tx_rel = reflect_inside_out(add(state.tx_rel, sub(d_tx, d_rx)), k.contact);
            if let Some(outer) = k.outer {
                state.tx_rel = reflect_outside_in(state.tx_rel, outer);
            }
        }

        // Receptors occupied at the start of the step may release.
        let mut released = Vec::new();
        let mut i = 0;
        while i < state.bound.len() {
            let (key, epoch) = state.bound[i];
            let mut fire = false;
            let mut last = None;
            for s in 0..k.substeps {
                let mut rng = key.child(first + s).rng();
                fire |= uniform(&mut rng) < k.p_unbind;
                last = Some(rng);
            }
            if fire {
                let dir = direction(last.as_mut().unwrap());
                released.push(Molecule::new(scale(dir, k.place_radius), key, epoch + 1));
                state.bound.swap_remove(i);
                state.tally.unbindings += 1;
            } else {
                i += 1;
            }
        }

        let r2 = k.radius * k.radius;
        let mut i = 0;
        while i < state.free.len() {
            let m = state.free[i];
            let mut disp = [0.0; 3];
            let mut degrade = false;
            let mut rng = m.key.child(first).rng();
            for s in 0..k.substeps {
                if s > 0 {
                    rng = m.key.child(first + s).rng();
                }
                disp = add(disp, normal3(&mut rng, k.sd_molecule));
                degrade |= uniform(&mut rng) < k.p_degrade;
            }
            if degrade {
                state.free.swap_remove(i);
                state.tally.degraded += 1;
                continue;
            }
            let mut to = sub(add(m.pos, disp), d_rx);
            if dot(to, to) < r2 {
                let tau = entry_fraction(m.pos, to, k.radius);
                let hit = add(m.pos, scale(sub(to, m.pos), tau));
                if state.bound.len() < k.capacity {
                    state.free[i].hazard += k.bind_hazard;
                }
                if state.bound.len() < k.capacity && state.free[i].hazard >= m.threshold {
                    state.bound.push((m.key, m.epoch));
                    state.free.swap_remove(i);
                    state.tally.bindings += 1;
                    continue;
                }
                // Mirror the endpoint in the tangent plane at the entry point.
                let n = scale(hit, 1.0 / dot(hit, hit).sqrt());
                let depth = dot(sub(to, hit), n);
                to = sub(to, scale(n, 2.0 * depth));
                if dot(to, to) < r2 {
                    to = scale(n, k.radius);
                }
            }
            if let Some(outer) = k.outer {
                to = reflect_outside_in(to, outer);
            }
            state.free[i].pos = to;
            i += 1;
        }
        state.free.extend(released);

        state.steps += 1;
        state.time = state.steps as f64 * self.config.dt;
        if self.config.debug_checks {
            self.check(state)?;
        }
        Ok(())
    }

    fn check(&self, state: &SimState) -> Result<()> {
        let k = &self.kin;
        let t = &state.tally;
        let alive = (state.free.len() + state.bound.len()) as u64;
        if t.injected != alive + t.degraded {
            return Err(Error::Numerical(format!(
                "molecule bookkeeping broken: injected {} != free {} + bound {} + degraded {}",
                t.injected,
                state.free.len(),
                state.bound.len(),
                t.degraded
            )));
        }
        if state.bound.len() > k.capacity {
            return Err(Error::Numerical("more bound molecules than receptors".into()));
        }
        let tx = dot(state.tx_rel, state.tx_rel).sqrt();
        if tx < k.contact * (1.0 - 1e-12) {
            return Err(Error::Numerical(format!("transmitter at distance {tx} inside contact radius")));
        }
        let floor = k.radius * k.radius * (1.0 - 1e-12);
        if let Some(m) = state.free.iter().find(|m| dot(m.pos, m.pos) < floor) {
            return Err(Error::Numerical(format!("molecule inside the receiver at {:?}", m.pos)));
        }
        Ok(())
    }

    fn step_of(&self, t: f64) -> u64 {
        (t / self.config.dt).round() as u64
    }

    /// Simulates one frame; `realization` selects the random streams.
    pub fn run_frame(&self, bits: &BitSequence, realization: u64) -> Result<FrameRecord> {
        let p = self.params;
        ensure!(
            bits.len() == p.seq_length,
            InvalidArgument,
            "bit sequence has {} bits, frame has {}",
            bits.len(),
            p.seq_length
        );
        let mut state = self.initial_state(realization);
        let releases: Vec<u64> =
            (0..p.seq_length).filter(|&j| bits.0[j]).map(|j| self.step_of(j as f64 * p.bit_interval)).collect();
        let sample_steps: Vec<u64> =
            (0..p.seq_length).map(|j| self.step_of(j as f64 * p.bit_interval + p.sample_offset)).collect();
        let grid_steps: Vec<u64> = self.config.record_grid.iter().map(|&t| self.step_of(t)).collect();
        let total = sample_steps.iter().chain(&grid_steps).copied().max().unwrap_or(0);

        let mut grid_order: Vec<usize> = (0..grid_steps.len()).collect();
        grid_order.sort_by_key(|&g| grid_steps[g]);
        let mut grid_counts = vec![0u32; grid_steps.len()];
        let mut sample_counts = vec![0u32; sample_steps.len()];
        let (mut next_grid, mut next_sample, mut next_release) = (0, 0, 0);

        for n in 0..=total {
            let count = state.bound.len() as u32;
            while next_grid < grid_order.len() && grid_steps[grid_order[next_grid]] == n {
                grid_counts[grid_order[next_grid]] = count;
                next_grid += 1;
            }
            while next_sample < sample_steps.len() && sample_steps[next_sample] == n {
                sample_counts[next_sample] = count;
                next_sample += 1;
            }
            while next_release < releases.len() && releases[next_release] == n {
                self.inject(&mut state, p.num_molecules);
                next_release += 1;
            }
            if n < total {
                self.step(&mut state)?;
            }
        }
        Ok(FrameRecord { grid_counts, sample_counts, tally: state.tally })
    }
}

#[inline]
fn reflect_outside_in(p: [f64; 3], outer: f64) -> [f64; 3] {
    let r = dot(p, p).sqrt();
    if r <= outer {
        p
    } else {
        scale(p, (2.0 * outer - r).max(0.0) / r)
    }
}

/// Bound counts of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    /// At each time of the record grid.
    pub grid_counts: Vec<u32>,
    /// At the sampling instant of each bit interval.
    pub sample_counts: Vec<u32>,
    pub tally: Tally,
}

/// Bound counts aggregated over realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    pub times: Vec<f64>,
    pub mean_bound: Vec<f64>,
    /// Standard error of the mean; absent for a single realization.
    pub std_error: Option<Vec<f64>>,
    pub sample_times: Vec<f64>,
    /// Per realization, the count at each sampling instant.
    pub sample_counts: Vec<Vec<u32>>,
    pub num_realizations: usize,
}

/// One-step convenience wrapper around [`Simulator::step`].
pub fn step(
    state: &mut SimState,
    params: &PhysicalParams<f64>,
    derived: &DerivedParams<f64>,
    config: &SimConfig,
) -> Result<()> {
    Simulator::new(params, derived, config)?.step(state)
}

pub fn run_frame(
    bits: &BitSequence,
    params: &PhysicalParams<f64>,
    derived: &DerivedParams<f64>,
    config: &SimConfig,
    realization: u64,
) -> Result<FrameRecord> {
    Simulator::new(params, derived, config)?.run_frame(bits, realization)
}

fn mean_and_error(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (nf - 1.0) / nf).sqrt())
}

/// Mean bound count over `config.num_realizations` independent frames.
pub fn estimate_received_signal(
    bits: &BitSequence,
    params: &PhysicalParams<f64>,
    derived: &DerivedParams<f64>,
    config: &SimConfig,
) -> Result<ObservationSeries> {
    let sim = Simulator::new(params, derived, config)?;
    ensure!(config.num_realizations >= 1, InvalidConfig, "need at least one realization");
    let frames = (0..config.num_realizations as u64)
        .into_par_iter()
        .map(|r| sim.run_frame(bits, r))
        .collect::<Result<Vec<_>>>()?;
    let n = frames.len();
    let mut mean_bound = Vec::with_capacity(config.record_grid.len());
    let mut errors = Vec::with_capacity(config.record_grid.len());
    for g in 0..config.record_grid.len() {
        let (m, e) = mean_and_error(frames.iter().map(|f| f.grid_counts[g] as f64), n);
        mean_bound.push(m);
        errors.push(e);
    }
    let sample_times =
        (0..params.seq_length).map(|j| j as f64 * params.bit_interval + params.sample_offset).collect();
    Ok(ObservationSeries {
        times: config.record_grid.clone(),
        mean_bound,
        std_error: (n > 1).then_some(errors),
        sample_times,
        sample_counts: frames.into_iter().map(|f| f.sample_counts).collect(),
        num_realizations: n,
    })
}

/// Simulated bit error probability per threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub thresholds: Vec<u64>,
    pub value: Vec<f64>,
    /// Between-realization standard error; NaN for a single realization.
    pub std_error: Vec<f64>,
    pub num_bits: usize,
}

/// Runs frames with random bits and applies the threshold rule at every
/// sampling instant.
pub fn estimate_ber(
    params: &PhysicalParams<f64>,
    derived: &DerivedParams<f64>,
    config: &SimConfig,
    thresholds: &[u64],
    p1: f64,
) -> Result<BerCurve> {
    ensure!((0.0..=1.0).contains(&p1), InvalidConfig, "p1 must lie in [0, 1], got {p1}");
    ensure!(config.num_realizations >= 1, InvalidConfig, "need at least one realization");
    let sim = Simulator::new(params, derived, config)?;
    let len = params.seq_length;
    let rows = (0..config.num_realizations as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = StreamKey::new(config.seed).child(r).child(TAG_BITS).rng();
            let bits = BitSequence::random(len, p1, &mut rng);
            let frame = sim.run_frame(&bits, r)?;
            Ok(thresholds
                .iter()
                .map(|&xi| {
                    let errors = (0..len).filter(|&j| (frame.sample_counts[j] as u64 >= xi) != bits.0[j]).count();
                    errors as f64 / len as f64
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len();
    let (value, std_error) = (0..thresholds.len()).map(|c| mean_and_error(rows.iter().map(|r| r[c]), n)).unzip();
    Ok(BerCurve { thresholds: thresholds.to_vec(), value, std_error, num_bits: n * len })
}

/// Two non-reactive diffusing spheres with hard-sphere contact.
#[derive(Debug, Clone, PartialEq)]
pub struct PairConfig {
    pub r0: f64,
    pub diff_tx: f64,
    pub diff_rx: f64,
    pub contact_radius: f64,
    pub dt: f64,
    pub num_pairs: usize,
    pub seed: u64,
}

/// Center-to-center distances of independent pairs after `t`, each started
/// at distance `r0` and moved with its own Brownian increments.
pub fn pair_distances(cfg: &PairConfig, t: f64) -> Result<Vec<f64>> {
    let PairConfig { r0, diff_tx, diff_rx, contact_radius: sigma, dt, num_pairs, seed } = *cfg;
    ensure!(dt.is_finite() && dt > 0.0, InvalidConfig, "dt must be > 0, got {dt}");
    ensure!(t.is_finite() && t >= 0.0, InvalidArgument, "t must be >= 0, got {t}");
    ensure!(sigma > 0.0 && r0 >= sigma, InvalidConfig, "need 0 < contact radius <= r0");
    ensure!(diff_tx >= 0.0 && diff_rx >= 0.0, InvalidConfig, "diffusion coefficients must be >= 0");
    let steps = (t / dt).round() as u64;
    let (sd_tx, sd_rx) = ((2.0 * diff_tx * dt).sqrt(), (2.0 * diff_rx * dt).sqrt());
    let key = StreamKey::new(seed);
    Ok((0..num_pairs as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = key.child(k).rng();
            let mut rel = [r0, 0.0, 0.0];
            for _ in 0..steps {
                let step = sub(normal3(&mut rng, sd_tx), normal3(&mut rng, sd_rx));
                rel = reflect_inside_out(add(rel, step), sigma);
            }
            dot(rel, rel).sqrt()
        })
        .collect())
}
