mod common;

use common::{pot, random_lipschitz};
use proxsample::bundle::{certificate, iteration_cap, run_pbs, run_pbs_with, BundleOptions};
use proxsample::{eta_mu, BuiltinPotential, CutPolicy, RegularizedProblem, RngStream};

#[test]
fn golden_abs_trace() {
    let p = RegularizedProblem::plain(pot(BuiltinPotential::MaxAffine {
        rows: vec![vec![1.0], vec![-1.0]],
        offsets: vec![0.0, 0.0],
    }));
    let opts = BundleOptions {
        trace: true,
        ..Default::default()
    };
    let r = run_pbs_with(&p, &[0.5], 1.0, 0.01, &opts).unwrap();
    assert_eq!(r.iterations, 2);
    assert!(r.x_j[0].abs() <= 1e-10);
    let rows: Vec<String> = r.trace.iter().map(|t| t.to_string()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("1\t1\t"));
    assert!(rows[1].starts_with("2\t2\t"));
}

fn check_certificates(policy: CutPolicy, seed: u64, tight: bool) {
    let root = RngStream::new(seed);
    for run in 0..1000 {
        let mut rng = root.substream(run);
        let spec = random_lipschitz(&mut rng);
        let f = pot(spec.clone());
        let d = f.dim();
        let m = f.lipschitz().unwrap();
        let mu = if rng.uniform() < 0.3 { 0.0 } else { rng.uniform() };
        let x0 = rng.normal_vec(d);
        let p = RegularizedProblem::new(f, mu, x0).unwrap();
        let eta = 10f64.powf(-3.0 * rng.uniform()) / (m * m * d as f64).max(1.0);
        let em = eta_mu(eta, mu);
        let delta = match (m > 0.0, tight) {
            (false, _) => 1e-3,
            (true, false) => em * m * m * (0.05 + rng.uniform()),
            (true, true) => em * m * m * 10f64.powf(-5.0 * rng.uniform()),
        };
        let scale = if tight { 10f64.powf(-3.0 + 3.5 * rng.uniform()) } else { 3.0 };
        let y: Vec<f64> = rng.normal_vec(d).iter().map(|v| scale * v).collect();
        let opts = BundleOptions {
            cut_policy: policy,
            ..Default::default()
        };
        let r = run_pbs_with(&p, &y, eta, delta, &opts).unwrap_or_else(|e| panic!("run {run} {spec:?}: {e}"));
        let c = certificate(&p, &y, eta, &r);
        assert!(r.gap <= delta, "run {run}: gap {} > {delta}", r.gap);
        assert!(c.stationarity_norm <= m + 1e-8, "run {run}: {} > {m}", c.stationarity_norm);
        assert!(
            c.center_distance_sq <= 2.0 * em * delta + 1e-10,
            "run {run}: {} > {}",
            c.center_distance_sq,
            2.0 * em * delta
        );
        let cap = iteration_cap(em, Some(m), None, delta).unwrap();
        assert!(r.iterations <= cap, "run {run}: {} > {cap}", r.iterations);
    }
}

#[test]
fn certificates_hold_minimal_policy() {
    check_certificates(CutPolicy::Minimal, 7, false);
}

#[test]
fn certificates_hold_full_policy() {
    check_certificates(CutPolicy::Full, 8, false);
}

#[test]
fn certificates_hold_for_small_delta() {
    check_certificates(CutPolicy::Minimal, 9, true);
    check_certificates(CutPolicy::Full, 10, true);
}

#[test]
fn policies_reach_the_same_tolerance() {
    let p = RegularizedProblem::new(
        pot(BuiltinPotential::MaxAffine {
            rows: vec![vec![1.0, 0.0], vec![-1.0, 0.5], vec![0.0, -1.0]],
            offsets: vec![0.0, 0.2, -0.1],
        }),
        0.3,
        vec![0.5, 0.5],
    )
    .unwrap();
    let a = run_pbs(&p, &[2.0, -1.0], 0.2, 1e-4).unwrap();
    let b = run_pbs_with(
        &p,
        &[2.0, -1.0],
        0.2,
        1e-4,
        &BundleOptions {
            cut_policy: CutPolicy::Full,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(a.gap <= 1e-4 && b.gap <= 1e-4);
    assert!((a.incumbent_value - b.incumbent_value).abs() <= 2e-4);
}

#[test]
fn zero_delta_uses_prox() {
    let p = RegularizedProblem::plain(pot(BuiltinPotential::L1 { dim: 2, m: 1.0 }));
    let r = run_pbs(&p, &[3.0, -0.5], 1.0, 0.0).unwrap();
    assert_eq!(r.iterations, 0);
    assert_eq!(r.x_j, vec![2.0, 0.0]);
    let no_prox = RegularizedProblem::plain(pot(BuiltinPotential::MaxAffine {
        rows: vec![vec![1.0]],
        offsets: vec![0.0],
    }));
    assert!(run_pbs(&no_prox, &[1.0], 1.0, 0.0).is_err());
}
