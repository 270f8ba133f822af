//! Threshold detector: Poisson model of the sampled receptor count with
//! inter-symbol interference, and expected bit error probability averaged
//! over bit sequences and distance trajectories.

use rand::RngCore;
use rayon::prelude::*;

use crate::channel::{cir, DerivedParams, PhysicalParams};
use crate::mobility::{Trajectory, TrajectorySampler};
use crate::rng::{uniform, CounterRng, StreamKey};
use crate::specfun::{poisson_cdf_below, poisson_cdf_ladder};
use crate::{ensure, Result};

/// Transmitted bits of one frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitSequence(pub Vec<bool>);

impl BitSequence {
    pub fn ones(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    /// From a string of `0`/`1` characters.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(crate::Error::InvalidArgument(format!("bit pattern {s:?} contains {c:?}"))),
            }
        }
        Ok(Self(bits))
    }

    /// I.i.d. bits with `Pr(1) = p1`.
    pub fn random(len: usize, p1: f64, rng: &mut impl RngCore) -> Self {
        Self((0..len).map(|_| uniform(rng) < p1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorConfig {
    /// Decide "1" when the sampled count is at least this.
    pub threshold: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitTreatment {
    /// Weighted sum over all `2^L` sequences.
    Enumerated,
    /// Random sequences drawn per trajectory.
    Sampled,
}

/// Sequences up to this length are enumerated unless asked otherwise.
pub const MAX_ENUMERATED_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub num_trajectories: usize,
    /// `None` picks enumeration for short frames and sampling otherwise.
    pub bit_treatment: Option<BitTreatment>,
    /// Sequences drawn per trajectory in sampled mode.
    pub sequences_per_trajectory: usize,
    pub seed: u64,
}

impl MonteCarloConfig {
    pub fn new(num_trajectories: usize, seed: u64) -> Self {
        Self { num_trajectories, bit_treatment: None, sequences_per_trajectory: 16, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub value: f64,
    /// Between-trajectory standard error; zero when the trajectory is
    /// deterministic or the estimate is an exact sum.
    pub std_error: f64,
    pub num_trajectories: usize,
    pub bit_treatment: BitTreatment,
}

/// Occupation probabilities `P[i][j]` of a release in interval `i` at the
/// sampling instant of interval `j ≥ i`, for one trajectory.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    p: Vec<Vec<f64>>,
}

impl ChannelMatrix {
    pub fn new(traj: &Trajectory, params: &PhysicalParams<f64>, derived: &DerivedParams<f64>) -> Result<Self> {
        let len = params.seq_length;
        ensure!(traj.len() == len, InvalidArgument, "trajectory has {} points, frame has {len} bits", traj.len());
        let mut p = Vec::with_capacity(len);
        for i in 0..len {
            let row = (i..len)
                .map(|j| {
                    let t = (j - i) as f64 * params.bit_interval + params.sample_offset;
                    cir(t, traj.distances[i], derived, params)
                })
                .collect::<Result<Vec<_>>>()?;
            p.push(row);
        }
        Ok(Self { p })
    }

    /// Probability for a release in interval `i` observed in interval `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j < i {
            0.0
        } else {
            self.p[i][j - i]
        }
    }
}

fn check_bits(j: usize, bits: &BitSequence, params: &PhysicalParams<f64>) -> Result<()> {
    ensure!(
        bits.len() == params.seq_length,
        InvalidArgument,
        "bit sequence has {} bits, frame has {}",
        bits.len(),
        params.seq_length
    );
    ensure!(j < bits.len(), InvalidArgument, "bit index {j} out of range for {} bits", bits.len());
    Ok(())
}

/// Mean received count at the sampling instant of interval `j` (from 0),
/// summing every earlier "1" released at the distance recorded for its
/// interval.
pub fn poisson_mean_isi(
    j: usize,
    bits: &BitSequence,
    traj: &Trajectory,
    params: &PhysicalParams<f64>,
    derived: &DerivedParams<f64>,
) -> Result<f64> {
    check_bits(j, bits, params)?;
    ensure!(traj.len() == params.seq_length, InvalidArgument, "trajectory length mismatch");
    let mut sum = 0.0;
    for i in 0..=j {
        if bits.0[i] {
            let t = (j - i) as f64 * params.bit_interval + params.sample_offset;
            sum += cir(t, traj.distances[i], derived, params)?;
        }
    }
    Ok(params.num_molecules as f64 * sum)
}

/// Error probability of bit `j` for known bits and trajectory.
pub fn conditional_bit_error(
    j: usize,
    bits: &BitSequence,
    traj: &Trajectory,
    threshold: u64,
    params: &PhysicalParams<f64>,
    derived: &DerivedParams<f64>,
) -> Result<f64> {
    let mean = poisson_mean_isi(j, bits, traj, params, derived)?;
    let below = poisson_cdf_below(mean, threshold)?;
    Ok(if bits.0[j] { below } else { 1.0 - below })
}

/// `Pr(N < xi)` for `N` a sum of independent binomials `(trials, p)`.
pub fn binomial_sum_cdf_below(parts: &[(u64, f64)], xi: u64) -> Result<f64> {
    if xi == 0 {
        return Ok(0.0);
    }
    let width = xi as usize;
    let mut dist = vec![0.0; width];
    dist[0] = 1.0;
    for &(n, p) in parts {
        ensure!((0.0..=1.0).contains(&p), InvalidArgument, "binomial probability {p} outside [0, 1]");
        if n == 0 || p == 0.0 {
            continue;
        }
        let mut pmf = vec![0.0; width];
        if p == 1.0 {
            if let Some(slot) = pmf.get_mut(n as usize) {
                *slot = 1.0;
            }
        } else {
            let mut term = (n as f64 * (-p).ln_1p()).exp();
            for (k, slot) in pmf.iter_mut().enumerate() {
                if k as u64 > n {
                    break;
                }
                *slot = term;
                term *= (n - k as u64) as f64 / (k + 1) as f64 * p / (1.0 - p);
            }
        }
        let mut next = vec![0.0; width];
        for (a, &da) in dist.iter().enumerate() {
            if da == 0.0 {
                continue;
            }
            for (b, &pb) in pmf.iter().enumerate().take(width - a) {
                next[a + b] += da * pb;
            }
        }
        dist = next;
    }
    Ok(dist.iter().sum::<f64>().min(1.0))
}

/// Bit error of bit `j` with the exact binomial count law instead of the
/// Poisson approximation, together with Le Cam's bound `Σ n·p²` on the
/// total-variation distance between the two count laws.
pub fn conditional_bit_error_binomial(
    j: usize,
    bits: &BitSequence,
    traj: &Trajectory,
    threshold: u64,
    params: &PhysicalParams<f64>,
    derived: &DerivedParams<f64>,
) -> Result<(f64, f64)> {
    check_bits(j, bits, params)?;
    let mut parts = Vec::new();
    let mut bound = 0.0;
    for i in 0..=j {
        if bits.0[i] {
            let t = (j - i) as f64 * params.bit_interval + params.sample_offset;
            let p = cir(t, traj.distances[i], derived, params)?;
            parts.push((params.num_molecules, p));
            bound += params.num_molecules as f64 * p * p;
        }
    }
    let below = binomial_sum_cdf_below(&parts, threshold)?;
    Ok((if bits.0[j] { below } else { 1.0 - below }, bound))
}

/// Source of distance trajectories for the expected error probability.
pub trait DistanceProcess: Sync {
    fn sample(&self, rng: &mut CounterRng) -> Result<Trajectory>;

    /// Every trajectory with its probability, when the process is finite.
    fn support(&self) -> Option<Vec<(Trajectory, f64)>> {
        None
    }

    fn is_constant(&self) -> bool {
        false
    }
}

impl DistanceProcess for TrajectorySampler {
    fn sample(&self, rng: &mut CounterRng) -> Result<Trajectory> {
        TrajectorySampler::sample(self, rng)
    }

    fn is_constant(&self) -> bool {
        TrajectorySampler::is_constant(self)
    }
}

/// Finite-state Markov chain over a few distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceChain {
    pub states: Vec<f64>,
    /// Row-stochastic transition matrix.
    pub transition: Vec<Vec<f64>>,
    pub initial: usize,
    pub len: usize,
}

impl DistanceChain {
    fn next(&self, from: usize, u: f64) -> usize {
        let row = &self.transition[from];
        let mut acc = 0.0;
        for (k, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        row.len() - 1
    }
}

impl DistanceProcess for DistanceChain {
    fn sample(&self, rng: &mut CounterRng) -> Result<Trajectory> {
        let mut s = self.initial;
        let mut distances = vec![self.states[s]];
        for _ in 1..self.len {
            s = self.next(s, uniform(rng));
            distances.push(self.states[s]);
        }
        Ok(Trajectory { distances })
    }

    fn support(&self) -> Option<Vec<(Trajectory, f64)>> {
        let mut paths = vec![(vec![self.initial], 1.0)];
        for _ in 1..self.len {
            let mut next = Vec::with_capacity(paths.len() * self.states.len());
            for (path, w) in &paths {
                let last = *path.last().unwrap();
                for (k, &p) in self.transition[last].iter().enumerate() {
                    let mut np = path.clone();
                    np.push(k);
                    next.push((np, w * p));
                }
            }
            paths = next;
        }
        Some(
            paths
                .into_iter()
                .map(|(path, w)| (Trajectory { distances: path.iter().map(|&s| self.states[s]).collect() }, w))
                .collect(),
        )
    }
}

/// Below this many thresholds (or above this largest threshold) each
/// threshold gets its own tail sum instead of a shared ladder.
const LADDER_LIMIT: u64 = 512;

fn error_rates(mean: f64, bit: bool, thresholds: &[u64], xi_max: u64, out: &mut [f64], weight: f64) -> Result<()> {
    if thresholds.len() > 1 && xi_max <= LADDER_LIMIT {
        let ladder = poisson_cdf_ladder(mean, xi_max)?;
        for (acc, &xi) in out.iter_mut().zip(thresholds) {
            let below = ladder[xi as usize];
            *acc += weight * if bit { below } else { 1.0 - below };
        }
    } else {
        for (acc, &xi) in out.iter_mut().zip(thresholds) {
            let below = poisson_cdf_below(mean, xi)?;
            *acc += weight * if bit { below } else { 1.0 - below };
        }
    }
    Ok(())
}

/// Average error probability over the bits of one trajectory, per threshold.
fn trajectory_error(
    matrix: &ChannelMatrix,
    params: &PhysicalParams<f64>,
    thresholds: &[u64],
    treatment: BitTreatment,
    sequences: usize,
    rng: &mut CounterRng,
) -> Result<Vec<f64>> {
    let len = params.seq_length;
    let n_a = params.num_molecules as f64;
    let p1 = params.p1;
    let xi_max = thresholds.iter().copied().max().unwrap_or(0);
    let mut acc = vec![0.0; thresholds.len()];
    match treatment {
        BitTreatment::Enumerated => {
            for j in 0..len {
                for mask in 0u64..(1 << (j + 1)) {
                    let ones = mask.count_ones() as i32;
                    let weight = p1.powi(ones) * (1.0 - p1).powi(j as i32 + 1 - ones);
                    if weight == 0.0 {
                        continue;
                    }
                    let mut sum = 0.0;
                    for i in 0..=j {
                        if mask >> i & 1 == 1 {
                            sum += matrix.get(i, j);
                        }
                    }
                    error_rates(n_a * sum, mask >> j & 1 == 1, thresholds, xi_max, &mut acc, weight)?;
                }
            }
            for a in &mut acc {
                *a /= len as f64;
            }
        }
        BitTreatment::Sampled => {
            for _ in 0..sequences {
                let bits = BitSequence::random(len, p1, rng);
                for j in 0..len {
                    let sum: f64 = (0..=j).filter(|&i| bits.0[i]).map(|i| matrix.get(i, j)).sum();
                    error_rates(n_a * sum, bits.0[j], thresholds, xi_max, &mut acc, 1.0)?;
                }
            }
            for a in &mut acc {
                *a /= (len * sequences) as f64;
            }
        }
    }
    Ok(acc)
}

/// Expected bit error probability for each threshold, averaging over
/// trajectories drawn from `process`.
pub fn expected_ber_with(
    process: &dyn DistanceProcess,
    params: &PhysicalParams<f64>,
    derived: &DerivedParams<f64>,
    thresholds: &[u64],
    mc: &MonteCarloConfig,
) -> Result<Vec<BerEstimate>> {
    ensure!(mc.num_trajectories >= 1, InvalidConfig, "need at least one trajectory");
    let treatment = mc.bit_treatment.unwrap_or(if params.seq_length <= MAX_ENUMERATED_LEN {
        BitTreatment::Enumerated
    } else {
        BitTreatment::Sampled
    });
    if treatment == BitTreatment::Enumerated {
        ensure!(
            params.seq_length <= 24,
            InvalidConfig,
            "enumerating {} bits is not feasible; use sampled bits",
            params.seq_length
        );
    } else {
        ensure!(mc.sequences_per_trajectory >= 1, InvalidConfig, "need at least one sequence per trajectory");
    }
    let key = StreamKey::new(mc.seed);
    let evaluate = |traj: &Trajectory, rng: &mut CounterRng| -> Result<Vec<f64>> {
        let matrix = ChannelMatrix::new(traj, params, derived)?;
        trajectory_error(&matrix, params, thresholds, treatment, mc.sequences_per_trajectory, rng)
    };
    let exact = |values: Vec<f64>, count: usize| {
        values
            .into_iter()
            .map(|value| BerEstimate { value: value.clamp(0.0, 1.0), std_error: 0.0, num_trajectories: count, bit_treatment: treatment })
            .collect()
    };

    if let Some(support) = process.support() {
        let mut total = vec![0.0; thresholds.len()];
        for (k, (traj, w)) in support.iter().enumerate() {
            let e = evaluate(traj, &mut key.child(k as u64).rng())?;
            for (t, v) in total.iter_mut().zip(e) {
                *t += w * v;
            }
        }
        return Ok(exact(total, support.len()));
    }
    if process.is_constant() && treatment == BitTreatment::Enumerated {
        let mut rng = key.rng();
        let traj = process.sample(&mut rng)?;
        return Ok(exact(evaluate(&traj, &mut rng)?, mc.num_trajectories));
    }

    let rows = (0..mc.num_trajectories as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = key.child(k).rng();
            let traj = process.sample(&mut rng)?;
            evaluate(&traj, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    Ok((0..thresholds.len())
        .map(|c| {
            let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
            let std_error = if rows.len() > 1 {
                let ss: f64 = rows.iter().map(|r| (r[c] - mean).powi(2)).sum();
                (ss / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            BerEstimate { value: mean.clamp(0.0, 1.0), std_error, num_trajectories: rows.len(), bit_treatment: treatment }
        })
        .collect())
}

/// [`expected_ber_with`] over trajectories of the distance process implied
/// by `params` and `derived`.
pub fn expected_ber_sweep(
    params: &PhysicalParams<f64>,
    derived: &DerivedParams<f64>,
    thresholds: &[u64],
    mc: &MonteCarloConfig,
) -> Result<Vec<BerEstimate>> {
    let sampler = TrajectorySampler::new(params, derived)?;
    expected_ber_with(&sampler, params, derived, thresholds, mc)
}

pub fn expected_ber(
    params: &PhysicalParams<f64>,
    derived: &DerivedParams<f64>,
    detector: DetectorConfig,
    mc: &MonteCarloConfig,
) -> Result<BerEstimate> {
    Ok(expected_ber_sweep(params, derived, &[detector.threshold], mc)?[0])
}
