use mobidiff::channel::{cir, derive, expected_received_signal, MobilityMode, PhysicalParams};
use mobidiff::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference() -> PhysicalParams<f64> {
    PhysicalParams::reference()
}

/// Reference values from a 40-digit Talbot inversion of the Laplace-domain
/// solution of diffusion with degradation outside a sphere with a reversible
/// (Robin-type) reactive surface, at the reference parameters with fixed
/// nodes.
const INVERSION: [(f64, f64); 4] = [
    (1e-5, 5.722_899_239_328_25e-9),
    (6e-5, 1.832_902_876_849_30e-4),
    (1e-4, 1.534_619_035_060_32e-4),
    (3e-4, 2.909_723_383_560_88e-6),
];

#[test]
fn matches_numerical_laplace_inversion() {
    let p = reference();
    let d = derive(&p, MobilityMode::Fixed).unwrap();
    for (t, want) in INVERSION {
        let got = cir(t, p.r0, &d, &p).unwrap();
        assert!(((got - want) / want).abs() < 1e-9, "t = {t}: {got} vs {want}");
    }
}

#[test]
fn reference_homogenized_quantities() {
    let p = reference();
    let d = derive(&p, MobilityMode::Fixed).unwrap();
    assert!((d.lambda - 0.194_602_5).abs() < 1e-12);
    assert!((d.phi - 0.1946).abs() < 1e-3);
    assert!((d.k_f_mod - 2.432_531_25e-15).abs() < 1e-24);
}

fn log_uniform(rng: &mut ChaCha8Rng, center: f64) -> f64 {
    center * 10f64.powf(rng.random_range(-1.0..1.0))
}

fn random_params(rng: &mut ChaCha8Rng) -> PhysicalParams<f64> {
    let base = reference();
    let mut p = base;
    p.diff_a = log_uniform(rng, base.diff_a);
    p.diff_rx = log_uniform(rng, base.diff_rx);
    p.radius_rx = log_uniform(rng, base.radius_rx);
    p.r0 = p.radius_rx + log_uniform(rng, base.r0 - base.radius_rx);
    p.k_f = log_uniform(rng, base.k_f);
    p.k_b = log_uniform(rng, base.k_b);
    p.k_d = log_uniform(rng, base.k_d);
    p.num_receptors = log_uniform(rng, base.num_receptors as f64).round() as u64;
    p.receptor_radius = log_uniform(rng, base.receptor_radius);
    p
}

#[test]
fn random_draws_are_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut evaluated = 0;
    let mut drawn = 0;
    while evaluated < 10_000 {
        drawn += 1;
        let p = random_params(&mut rng);
        let mode = if rng.random_bool(0.5) { MobilityMode::Fixed } else { MobilityMode::Mobile };
        let t = 10f64.powf(rng.random_range(-6.0..-2.0));
        let d = match derive(&p, mode) {
            Ok(d) => d,
            // Coverage above one is not a valid receiver.
            Err(Error::InvalidConfig(_)) => continue,
            Err(e) => panic!("{e} for {p:?}"),
        };
        let v = cir(t, p.r0, &d, &p).unwrap_or_else(|e| panic!("{e} for {p:?} at t = {t}"));
        assert!(v.is_finite() && (0.0..=1.0).contains(&v), "{v} for {p:?} at t = {t}");
        evaluated += 1;
    }
    assert!(drawn < 20_000, "{drawn} draws for 10000 valid ones");
}

#[test]
fn more_degradation_never_increases_response() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..300 {
        let mut p = random_params(&mut rng);
        p.num_receptors = p.num_receptors.min(2000);
        p.receptor_radius = p.receptor_radius.min(p.radius_rx / 50.0);
        let t = 10f64.powf(rng.random_range(-6.0..-2.0));
        let mut last = f64::INFINITY;
        for k_d in [0.0, 1e2, 1e3, 1e4, 2e4, 1e5, 1e6] {
            p.k_d = k_d;
            let d = derive(&p, MobilityMode::Fixed).unwrap();
            let v = cir(t, p.r0, &d, &p).unwrap();
            assert!(v <= last * (1.0 + 1e-9) + 1e-300, "k_d = {k_d}: {v} > {last}");
            last = v;
        }
    }
}

#[test]
fn root_order_does_not_matter() {
    let p = reference();
    for mode in [MobilityMode::Fixed, MobilityMode::Mobile] {
        let d = derive(&p, mode).unwrap();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for t in [2e-6, 3e-5, 6e-5, 2e-4, 1e-3, 5e-3] {
            let base = cir(t, p.r0, &d, &p).unwrap();
            for perm in perms {
                let mut q = d;
                q.roots.roots = perm.map(|i| d.roots.roots[i]);
                let v = cir(t, p.r0, &q, &p).unwrap();
                assert!((v - base).abs() <= 1e-12 * base.abs(), "t = {t}, perm {perm:?}");
            }
        }
    }
}

#[test]
fn static_mobile_equals_fixed() {
    let mut p = reference();
    p.diff_tx = 0.0;
    p.diff_rx = 0.0;
    let f = derive(&p, MobilityMode::Fixed).unwrap();
    let m = derive(&p, MobilityMode::Mobile).unwrap();
    assert_eq!(f.k_f_mod.to_bits(), m.k_f_mod.to_bits());
    assert_eq!(f.symmetric, m.symmetric);
    assert_eq!(f.roots, m.roots);
    let mut t = 1e-6;
    while t < 3e-3 {
        assert_eq!(cir(t, p.r0, &f, &p).unwrap().to_bits(), cir(t, p.r0, &m, &p).unwrap().to_bits());
        t *= 1.1;
    }
}

#[test]
fn response_rises_then_falls() {
    let mut p = reference();
    p.num_molecules = 1000;
    for mode in [MobilityMode::Fixed, MobilityMode::Mobile] {
        let d = derive(&p, mode).unwrap();
        let values: Vec<f64> =
            (1..=3000).map(|k| expected_received_signal(k as f64 * 1e-6, &d, &p).unwrap()).collect();
        let peak = values.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        assert!(peak > 0 && peak < values.len() - 1);
        assert!(values[..=peak].windows(2).all(|w| w[1] > w[0]));
        assert!(values[peak..].windows(2).all(|w| w[1] < w[0]));
    }
}
