//! Experiment subcommands. Each returns its CSV artifacts in memory; nothing
//! touches the output directory until every artifact has been produced.

use mobidiff::channel::{cir, expected_received_signal};
use mobidiff::detection::{expected_ber_sweep, expected_ber_with, BitSequence, DistanceChain, MonteCarloConfig};
use mobidiff::mobility::{DistanceLaw, TrajectorySampler};
use mobidiff::particlesim::{estimate_ber, estimate_received_signal, pair_distances, PairConfig};
use mobidiff::rng::StreamKey;
use mobidiff::specfun::{erfcx, poisson_cdf_below};
use rayon::prelude::*;

use crate::config::{Case, ExperimentConfig, Spacing};
use crate::{Artifact, CliError};

const TAG_SIGNAL_SIM: u64 = 1;
const TAG_SIGNAL_MC: u64 = 2;
const TAG_BER_SIM: u64 = 3;
const TAG_BER_MC: u64 = 4;
const TAG_PAIRS: u64 = 5;

fn sub_seed(seed: u64, tag: u64, case: usize) -> u64 {
    StreamKey::new(seed).child(tag).child(case as u64).raw()
}

/// Shortest round-trip representation; non-finite values become empty
/// fields.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        String::new()
    }
}

struct Table {
    name: &'static str,
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &'static [&'static str]) -> Self {
        Self { name, header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn into_artifact(self) -> Result<Artifact, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Artifact { name: self.name.to_string(), bytes, rows: self.rows.len() })
    }
}

fn io(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn time_grid(start: f64, end: f64, points: usize, spacing: Spacing) -> Vec<f64> {
    (0..points)
        .map(|k| {
            let f = k as f64 / (points - 1) as f64;
            match spacing {
                Spacing::Linear => start + f * (end - start),
                Spacing::Log => start * (end / start).powf(f),
            }
        })
        .collect()
}

pub fn cmd_cir(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let cases = cfg.cases()?;
    let c = &cfg.cir;
    let end = c.t_end.unwrap_or(cfg.physical.bit_interval);
    let start = c.t_start.unwrap_or(end / c.points as f64);
    if !(start > 0.0 && end > start) {
        return Err(CliError::Validation(format!("cir: need 0 < t_start < t_end, got {start} and {end}")));
    }
    let times = time_grid(start, end, c.points, c.spacing);
    let mut table = Table::new("cir.csv", &["time_s", "case", "p_ac", "n_c_expected"]);
    for case in &cases {
        log::info!("cir: {}", case.label);
        for &t in &times {
            let p = cir(t, case.params.r0, &case.derived, &case.params)?;
            let n = expected_received_signal(t, &case.derived, &case.params)?;
            table.push(vec![num(t), case.label.clone(), num(p), num(n)]);
        }
    }
    Ok(vec![table.into_artifact()?])
}

/// Expected bound count on `times` for a release pattern along one
/// trajectory of release distances.
fn signal_along(case: &Case, bits: &BitSequence, distances: &[f64], times: &[f64]) -> mobidiff::Result<Vec<f64>> {
    let p = &case.params;
    times
        .iter()
        .map(|&t| {
            let mut sum = 0.0;
            for (i, &bit) in bits.0.iter().enumerate() {
                let elapsed = t - i as f64 * p.bit_interval;
                if bit && elapsed > 0.0 {
                    sum += cir(elapsed, distances[i], &case.derived, p)?;
                }
            }
            Ok(p.num_molecules as f64 * sum)
        })
        .collect()
}

fn mean_and_error(rows: &[Vec<f64>], col: usize) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r[col]).sum::<f64>() / n;
    if rows.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = rows.iter().map(|r| (r[col] - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Trajectory-averaged analytical signal with its Monte Carlo standard
/// error; exact for fixed nodes.
pub fn analytical_signal(
    case: &Case,
    bits: &BitSequence,
    times: &[f64],
    num_trajectories: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let sampler = TrajectorySampler::new(&case.params, &case.derived)?;
    if sampler.is_constant() {
        let distances = vec![case.params.r0; bits.len()];
        let mean = signal_along(case, bits, &distances, times)?;
        return Ok((mean, vec![0.0; times.len()]));
    }
    let key = StreamKey::new(seed);
    let rows = (0..num_trajectories as u64)
        .into_par_iter()
        .map(|k| {
            let traj = sampler.sample(&mut key.child(k).rng())?;
            signal_along(case, bits, &traj.distances, times)
        })
        .collect::<mobidiff::Result<Vec<_>>>()?;
    Ok((0..times.len()).map(|c| mean_and_error(&rows, c)).unzip())
}

pub fn cmd_received_signal(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let cases = cfg.cases()?;
    let bits = cfg.bit_pattern()?;
    let frame = cfg.physical.seq_length as f64 * cfg.physical.bit_interval;
    let end = cfg.received_signal.t_end.unwrap_or(frame);
    if !(end > 0.0 && end.is_finite()) {
        return Err(CliError::Validation(format!("received_signal.t_end must be > 0, got {end}")));
    }
    let points = cfg.received_signal.points;
    let times: Vec<f64> = (1..=points).map(|k| k as f64 * end / points as f64).collect();

    // Check every simulator setup before running anything.
    let sims: Vec<_> = cases.iter().enumerate().map(|(i, c)| cfg.sim_config(c, sub_seed(cfg.seed, TAG_SIGNAL_SIM, i))).collect();
    for (case, sim) in cases.iter().zip(&sims) {
        mobidiff::particlesim::Simulator::new(&case.params, &case.derived, sim)?;
    }

    let mut table = Table::new(
        "received_signal.csv",
        &["time_s", "case", "n_c_analytical", "n_c_analytical_stderr", "n_c_sim", "n_c_sim_stderr"],
    );
    for (i, (case, sim)) in cases.iter().zip(&sims).enumerate() {
        log::info!("received-signal: {} analytical", case.label);
        let mc_seed = sub_seed(cfg.seed, TAG_SIGNAL_MC, i);
        let (mean, err) = analytical_signal(case, &bits, &times, cfg.monte_carlo.num_trajectories, mc_seed)?;
        log::info!("received-signal: {} simulating {} realizations", case.label, sim.num_realizations);
        let mut sim = sim.clone();
        sim.record_grid = times.clone();
        let series = estimate_received_signal(&bits, &case.params, &case.derived, &sim)?;
        let sim_err = series.std_error.unwrap_or_else(|| vec![f64::NAN; times.len()]);
        for k in 0..times.len() {
            table.push(vec![
                num(times[k]),
                case.label.clone(),
                num(mean[k]),
                num(err[k]),
                num(series.mean_bound[k]),
                num(sim_err[k]),
            ]);
        }
    }
    Ok(vec![table.into_artifact()?])
}

pub fn cmd_ber(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let cases = cfg.cases()?;
    let xs = &cfg.detector.thresholds;
    let sims: Vec<_> = cases.iter().enumerate().map(|(i, c)| cfg.sim_config(c, sub_seed(cfg.seed, TAG_BER_SIM, i))).collect();
    if cfg.detector.simulate {
        for (case, sim) in cases.iter().zip(&sims) {
            mobidiff::particlesim::Simulator::new(&case.params, &case.derived, sim)?;
        }
    }
    let mut table = Table::new(
        "ber.csv",
        &["xi", "case", "p_e_analytical", "p_e_analytical_stderr", "p_e_sim", "p_e_sim_stderr"],
    );
    for (i, (case, sim)) in cases.iter().zip(&sims).enumerate() {
        log::info!("ber: {} analytical", case.label);
        let mc: MonteCarloConfig = cfg.monte_carlo(sub_seed(cfg.seed, TAG_BER_MC, i));
        let analytical = expected_ber_sweep(&case.params, &case.derived, xs, &mc)?;
        let simulated = if cfg.detector.simulate {
            log::info!("ber: {} simulating {} frames", case.label, sim.num_realizations);
            Some(estimate_ber(&case.params, &case.derived, sim, xs, case.params.p1)?)
        } else {
            None
        };
        for (k, &xi) in xs.iter().enumerate() {
            let (sv, se) = simulated.as_ref().map_or((f64::NAN, f64::NAN), |s| (s.value[k], s.std_error[k]));
            table.push(vec![
                xi.to_string(),
                case.label.clone(),
                num(analytical[k].value),
                num(analytical[k].std_error),
                num(sv),
                num(se),
            ]);
        }
    }
    Ok(vec![table.into_artifact()?])
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

pub fn cmd_distance_pdf(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let cases: Vec<Case> = cfg.cases()?.into_iter().filter(|c| !c.is_fixed()).collect();
    if cases.is_empty() {
        return Err(CliError::Validation("distance-pdf: needs at least one mobility case with diff_tx > 0".into()));
    }
    let s = &cfg.distance_pdf;
    let times = if s.times.is_empty() { vec![cfg.physical.bit_interval] } else { s.times.clone() };
    let mut pdf = Table::new(
        "distance_pdf.csv",
        &["case", "t_s", "r_m", "pdf_analytical", "pdf_empirical", "stderr", "total_mass"],
    );
    let mut summary =
        Table::new("distance_pdf_summary.csv", &["case", "t_s", "total_mass", "ks_statistic", "ks_critical_001", "num_pairs"]);
    for (i, case) in cases.iter().enumerate() {
        let p = &case.params;
        let (d, sigma) = (case.derived.d_eff2, p.contact_radius());
        let dt = s.dt.unwrap_or((sigma / 100.0).powi(2) / (2.0 * d));
        for (j, &t) in times.iter().enumerate() {
            log::info!("distance-pdf: {} at t = {t:e}", case.label);
            let law = DistanceLaw::new(p.r0, t, d, sigma)?;
            let mass = law.total_mass();
            let pairs = PairConfig {
                r0: p.r0,
                diff_tx: p.diff_tx,
                diff_rx: p.diff_rx,
                contact_radius: sigma,
                dt,
                num_pairs: s.num_pairs,
                seed: StreamKey::new(cfg.seed).child(TAG_PAIRS).child(i as u64).child(j as u64).raw(),
            };
            let mut sample = pair_distances(&pairs, t)?;
            let n = sample.len() as f64;

            let spread = (2.0 * d * t).sqrt();
            let lo = sigma.max(p.r0 - 8.0 * spread);
            let hi = p.r0 + 8.0 * spread;
            let width = (hi - lo) / s.bins as f64;
            let mut counts = vec![0u64; s.bins];
            for &r in &sample {
                let b = ((r - lo) / width).floor();
                if b >= 0.0 && (b as usize) < s.bins {
                    counts[b as usize] += 1;
                }
            }
            for (b, &count) in counts.iter().enumerate() {
                let (a, z) = (lo + b as f64 * width, lo + (b + 1) as f64 * width);
                let analytic = (law.cdf(z) - law.cdf(a)) / width;
                let frac = count as f64 / n;
                let stderr = (frac * (1.0 - frac) / n).sqrt() / width;
                pdf.push(vec![
                    case.label.clone(),
                    num(t),
                    num(0.5 * (a + z)),
                    num(analytic),
                    num(frac / width),
                    num(stderr),
                    num(mass),
                ]);
            }
            let ks = ks_statistic(&mut sample, |x| law.cdf(x));
            let critical = 1.627_623 / n.sqrt();
            summary.push(vec![case.label.clone(), num(t), num(mass), num(ks), num(critical), s.num_pairs.to_string()]);
        }
    }
    Ok(vec![pdf.into_artifact()?, summary.into_artifact()?])
}

struct Check {
    name: &'static str,
    value: f64,
    expected: f64,
    tolerance: f64,
}

/// Fast internal consistency checks on the installed build.
pub fn cmd_selftest(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let reference = mobidiff::Params::reference();
    let fixed = mobidiff::channel::derive(&reference, mobidiff::channel::MobilityMode::Fixed)?;
    let mut checks = vec![
        Check { name: "erfcx(2)", value: erfcx(2.0)?, expected: 0.255_395_676_310_505_74, tolerance: 1e-15 },
        Check { name: "poisson_cdf_below(5,5)", value: poisson_cdf_below(5.0, 5)?, expected: 0.440_493_285_065_212_4, tolerance: 1e-15 },
        Check { name: "coverage", value: fixed.lambda, expected: 0.194_602_5, tolerance: 1e-12 },
        Check {
            name: "cir(6e-5)",
            value: cir(6e-5, reference.r0, &fixed, &reference)?,
            expected: 1.832_902_876_849_30e-4,
            tolerance: 1e-12,
        },
    ];
    let law = DistanceLaw::new(1e-6, 3e-4, 1.0005e-12, 0.5e-6)?;
    checks.push(Check { name: "distance_law_mass", value: law.total_mass(), expected: 1.0, tolerance: 1e-6 });

    // A two-bit chain that never moves equals the fixed-node result.
    let mut p = reference;
    p.seq_length = 2;
    let chain = DistanceChain { states: vec![p.r0], transition: vec![vec![1.0]], initial: 0, len: 2 };
    let via_chain = expected_ber_with(&chain, &p, &fixed, &[3], &MonteCarloConfig::new(1, cfg.seed))?[0].value;
    let direct = expected_ber_sweep(&p, &fixed, &[3], &MonteCarloConfig::new(1, cfg.seed))?[0].value;
    checks.push(Check { name: "chain_vs_fixed_ber", value: via_chain, expected: direct, tolerance: 1e-15 });

    for case in cfg.cases()? {
        let v = expected_received_signal(case.params.sample_offset, &case.derived, &case.params)?;
        let ok = v.is_finite() && v >= 0.0 && v <= case.params.num_molecules as f64;
        checks.push(Check { name: "signal_in_range", value: f64::from(u8::from(ok)), expected: 1.0, tolerance: 0.0 });
    }

    let mut table = Table::new("selftest.csv", &["check", "value", "expected", "tolerance", "passed"]);
    let mut failed = Vec::new();
    for c in &checks {
        let pass = (c.value - c.expected).abs() <= c.tolerance * c.expected.abs().max(1.0);
        if !pass {
            failed.push(c.name);
        }
        table.push(vec![c.name.into(), num(c.value), num(c.expected), num(c.tolerance), pass.to_string()]);
    }
    if !failed.is_empty() {
        return Err(CliError::Numerical(format!("selftest failed: {}", failed.join(", "))));
    }
    Ok(vec![table.into_artifact()?])
}
