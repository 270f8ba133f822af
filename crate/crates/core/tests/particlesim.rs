use mobidiff::channel::{derive, MobilityMode, PhysicalParams};
use mobidiff::detection::{poisson_mean_isi, BitSequence};
use mobidiff::mobility::TrajectorySampler;
use mobidiff::particlesim::{estimate_ber, estimate_received_signal, SimConfig, Simulator};
use mobidiff::rng::StreamKey;
use mobidiff::Error;

fn desk(n: u64, len: usize) -> PhysicalParams<f64> {
    let mut p = PhysicalParams::reference();
    p.num_molecules = n;
    p.seq_length = len;
    p
}

fn config(p: &PhysicalParams<f64>, dt: f64, n: usize, seed: u64) -> SimConfig {
    SimConfig::new(dt, n, seed, p.radius_rx)
}

#[test]
fn molecules_are_conserved_and_stay_outside() {
    for (mode, diff_tx) in [(MobilityMode::Fixed, 0.0), (MobilityMode::Mobile, 1e-9)] {
        let mut p = desk(300, 3);
        p.diff_tx = diff_tx;
        p.radius_tx = if diff_tx > 0.0 { mobidiff::channel::stokes_einstein_radius(diff_tx) } else { 0.0 };
        let d = derive(&p, mode).unwrap();
        let mut cfg = config(&p, 2e-7, 1, 3);
        cfg.debug_checks = true;
        cfg.substeps = 2;
        let sim = Simulator::new(&p, &d, &cfg).unwrap();
        let frame = sim.run_frame(&BitSequence::parse("101").unwrap(), 0).unwrap();
        assert_eq!(frame.tally.injected, 600);
        assert!(frame.tally.bindings > 0 && frame.tally.unbindings > 0 && frame.tally.degraded > 0);
    }
}

#[test]
fn no_binding_without_forward_rate() {
    let mut p = desk(500, 2);
    p.k_f_mod_override = Some(0.0);
    let d = derive(&p, MobilityMode::Fixed).unwrap();
    let cfg = config(&p, 2e-7, 4, 5);
    let sim = Simulator::new(&p, &d, &cfg).unwrap();
    assert_eq!(sim.binding_probability(), 0.0);
    for r in 0..4 {
        let f = sim.run_frame(&BitSequence::ones(2), r).unwrap();
        assert_eq!(f.tally.bindings, 0);
        assert!(f.sample_counts.iter().all(|&c| c == 0));
    }
}

#[test]
fn fast_degradation_clears_in_one_step() {
    let mut p = desk(2000, 1);
    p.k_d = 20.0 / 2e-7;
    let d = derive(&p, MobilityMode::Fixed).unwrap();
    let cfg = config(&p, 2e-7, 1, 6);
    let sim = Simulator::new(&p, &d, &cfg).unwrap();
    let mut state = sim.initial_state(0);
    sim.inject(&mut state, p.num_molecules);
    sim.step(&mut state).unwrap();
    // Survival per step is e^-20, about 2e-9.
    assert_eq!(state.free_count() + state.bound_count(), 0);
}

#[test]
fn survival_follows_first_order_decay() {
    let mut p = desk(100_000, 1);
    p.k_f_mod_override = Some(0.0);
    let d = derive(&p, MobilityMode::Fixed).unwrap();
    let dt = 2e-6;
    let cfg = config(&p, dt, 1, 7);
    let sim = Simulator::new(&p, &d, &cfg).unwrap();
    let mut state = sim.initial_state(0);
    sim.inject(&mut state, p.num_molecules);
    for checkpoint in [25, 50, 100] {
        while state.steps < checkpoint {
            sim.step(&mut state).unwrap();
        }
        let surv = (-p.k_d * state.time).exp();
        let n = p.num_molecules as f64;
        let sd = (n * surv * (1.0 - surv)).sqrt();
        let got = state.free_count() as f64;
        assert!((got - n * surv).abs() < 4.0 * sd, "t = {}: {got} vs {}", state.time, n * surv);
    }
}

#[test]
fn silence_gives_nothing() {
    let p = desk(1000, 4);
    let d = derive(&p, MobilityMode::Fixed).unwrap();
    let mut cfg = config(&p, 2e-7, 3, 8);
    cfg.record_grid = vec![1e-5, 1e-4, 5e-4];
    let s = estimate_received_signal(&BitSequence::zeros(4), &p, &d, &cfg).unwrap();
    assert!(s.mean_bound.iter().all(|&m| m == 0.0));
    assert!(s.sample_counts.iter().flatten().all(|&c| c == 0));
}

#[test]
fn single_realization_has_no_error_bar() {
    let p = desk(200, 1);
    let d = derive(&p, MobilityMode::Fixed).unwrap();
    let mut cfg = config(&p, 2e-7, 1, 9);
    cfg.record_grid = vec![6e-5];
    let s = estimate_received_signal(&BitSequence::ones(1), &p, &d, &cfg).unwrap();
    assert!(s.std_error.is_none());
    assert_eq!(s.num_realizations, 1);
}

#[test]
fn standard_error_shrinks_with_realizations() {
    let p = desk(1000, 1);
    let d = derive(&p, MobilityMode::Fixed).unwrap();
    let run = |n: usize| {
        let mut cfg = config(&p, 2e-7, n, 10);
        cfg.record_grid = vec![p.sample_offset];
        estimate_received_signal(&BitSequence::ones(1), &p, &d, &cfg).unwrap().std_error.unwrap()[0]
    };
    let ratio = run(800) / run(400);
    assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.2 * std::f64::consts::FRAC_1_SQRT_2, "{ratio}");
}

#[test]
fn rejects_coarse_steps() {
    let p = desk(1000, 1);
    let d = derive(&p, MobilityMode::Fixed).unwrap();
    let cfg = config(&p, 1e-4, 1, 0);
    assert!(matches!(Simulator::new(&p, &d, &cfg), Err(Error::InvalidConfig(_))));
    let mut cfg = config(&p, 2e-7, 1, 0);
    cfg.unbind_offset = p.radius_rx;
    assert!(matches!(Simulator::new(&p, &d, &cfg), Err(Error::InvalidConfig(_))));
}

/// In a closed shell around the receiver with no degradation, bound and free
/// counts settle at the ratio of the forward rate to `k_b · V`.
#[test]
fn reversible_binding_reaches_equilibrium() {
    let mut p = desk(400, 1);
    p.r0 = 0.6e-6;
    p.k_b = 2e3;
    p.k_d = 0.0;
    p.k_f_mod_override = Some(2.5e-15);
    let d = derive(&p, MobilityMode::Fixed).unwrap();
    let outer = 1.5 * p.radius_rx;
    let mut cfg = config(&p, 1e-6, 1, 11);
    cfg.confinement_radius = Some(outer);
    let sim = Simulator::new(&p, &d, &cfg).unwrap();

    let volume = 4.0 / 3.0 * std::f64::consts::PI * (outer.powi(3) - p.radius_rx.powi(3));
    let want = 2.5e-15 / (p.k_b * volume);

    let ratios: Vec<f64> = (0..8)
        .map(|r| {
            let mut state = sim.initial_state(r);
            sim.inject(&mut state, p.num_molecules);
            let (mut bound, mut free) = (0.0, 0.0);
            for n in 0..20_000 {
                sim.step(&mut state).unwrap();
                if n >= 5_000 {
                    bound += state.bound_count() as f64;
                    free += state.free_count() as f64;
                }
            }
            bound / free
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean / want - 1.0).abs() < 0.05, "bound/free {mean} vs {want}");
}

/// Ten consecutive releases from a moving transmitter against the
/// trajectory-averaged analytical mean at every sampling instant.
#[test]
fn repeated_releases_follow_the_model() {
    let mut p = desk(1000, 10);
    p.diff_tx = 1e-9;
    p.radius_tx = mobidiff::channel::stokes_einstein_radius(1e-9);
    let d = derive(&p, MobilityMode::Mobile).unwrap();
    let mut cfg = config(&p, 2e-7, 200, 12);
    cfg.record_grid = (0..10).map(|j| j as f64 * p.bit_interval + p.sample_offset).collect();
    let s = estimate_received_signal(&BitSequence::ones(10), &p, &d, &cfg).unwrap();
    let se = s.std_error.unwrap();

    let sampler = TrajectorySampler::new(&p, &d).unwrap();
    let key = StreamKey::new(14);
    let n = 4000;
    let mut model = [0.0; 10];
    for k in 0..n {
        let traj = sampler.sample(&mut key.child(k).rng()).unwrap();
        for (j, m) in model.iter_mut().enumerate() {
            *m += poisson_mean_isi(j, &BitSequence::ones(10), &traj, &p, &d).unwrap() / n as f64;
        }
    }
    for j in 0..10 {
        let z = (s.mean_bound[j] - model[j]) / se[j];
        assert!(z.abs() < 3.5, "sample {j}: {} vs {} (se {})", s.mean_bound[j], model[j], se[j]);
    }
}

#[test]
fn threshold_extremes() {
    let p = desk(500, 4);
    let d = derive(&p, MobilityMode::Fixed).unwrap();
    let cfg = config(&p, 2e-7, 50, 13);
    let curve = estimate_ber(&p, &d, &cfg, &[0, 1_000_000], 0.3).unwrap();
    // Threshold zero decides 1 everywhere; an unreachable one decides 0.
    let ones = 1.0 - curve.value[0];
    assert!((curve.value[1] - ones).abs() < 1e-12);
    assert!((ones - 0.3).abs() < 4.0 * (0.3 * 0.7 / curve.num_bits as f64).sqrt(), "{ones}");
}
