mod common;

use common::pot;
use proxsample::asf::{run_chain, run_chains, Schedule, Window};
use proxsample::diagnostics::{audit_rejections, exact_cdf_1d, ks_test};
use proxsample::rgo::{rgo_bundle, rgo_exact, rgo_smooth};
use proxsample::{eta_mu, BuiltinPotential, Regime, RegularizedProblem, RgoParams, RgoStats, RngStream};

fn mean_cov(xs: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = xs[0].len();
    let n = xs.len() as f64;
    let mut m = vec![0.0; d];
    for x in xs {
        for i in 0..d {
            m[i] += x[i] / n;
        }
    }
    let mut c = vec![vec![0.0; d]; d];
    for x in xs {
        for i in 0..d {
            for j in 0..d {
                c[i][j] += (x[i] - m[i]) * (x[j] - m[j]) / (n - 1.0);
            }
        }
    }
    (m, c)
}

/// Mean and covariance of `xs` within 4 standard errors of `N(center, var I)`.
fn assert_isotropic_gaussian(xs: &[Vec<f64>], center: &[f64], var: f64) {
    let n = xs.len() as f64;
    let (m, c) = mean_cov(xs);
    for i in 0..center.len() {
        assert!((m[i] - center[i]).abs() <= 4.0 * (var / n).sqrt(), "mean {i}: {} vs {}", m[i], center[i]);
        for j in 0..center.len() {
            let (target, se) = if i == j {
                (var, var * (2.0 / n).sqrt())
            } else {
                (0.0, var / n.sqrt())
            };
            assert!((c[i][j] - target).abs() <= 4.0 * se, "cov {i},{j}: {} vs {target}", c[i][j]);
        }
    }
}

#[test]
fn rgo_is_exact_for_zero_potential() {
    let x0 = vec![1.0, 0.0, -1.0];
    let p = RegularizedProblem::new(pot(BuiltinPotential::Zero { dim: 3 }), 2.0, x0.clone()).unwrap();
    let y = [0.5, -0.5, 2.0];
    let eta = 0.3;
    let em = eta_mu(eta, 2.0);
    let z: Vec<f64> = y.iter().zip(&x0).map(|(yi, ci)| em * (2.0 * ci + yi / eta)).collect();
    let root = RngStream::new(17);
    let draws = 20_000;
    type Oracle = fn(&RegularizedProblem, &[f64], &RgoParams, &mut RngStream) -> proxsample::Result<proxsample::RgoOutcome>;
    let oracles: [(Oracle, f64); 3] = [(rgo_exact, 0.0), (rgo_bundle, 0.2), (rgo_smooth, 1e-6)];
    for (k, (oracle, delta)) in oracles.into_iter().enumerate() {
        let params = RgoParams::new(eta, delta).unwrap();
        let mut rng = root.substream(k as u64);
        let xs: Vec<Vec<f64>> = (0..draws).map(|_| oracle(&p, &y, &params, &mut rng).unwrap().sample).collect();
        assert_isotropic_gaussian(&xs, &z, em);
    }
}

#[test]
fn rgo_matches_quadrature_for_abs() {
    // g^eta for f = |x| is the target of (f, 1/eta_mu, z).
    let abs = pot(BuiltinPotential::MaxAffine {
        rows: vec![vec![1.0], vec![-1.0]],
        offsets: vec![0.0, 0.0],
    });
    let (mu, eta, y) = (0.5, 0.4, 0.3);
    let p = RegularizedProblem::new(abs.clone(), mu, vec![1.0]).unwrap();
    let em = eta_mu(eta, mu);
    let z = em * (mu * 1.0 + y / eta);
    let q = exact_cdf_1d(&RegularizedProblem::new(abs, 1.0 / em, vec![z]).unwrap(), 400).unwrap();
    let params = RgoParams::new(eta, 0.05).unwrap();
    let mut rng = RngStream::new(3);
    let xs: Vec<f64> = (0..20_000).map(|_| rgo_bundle(&p, &[y], &params, &mut rng).unwrap().sample[0]).collect();
    let rep = ks_test(&xs, &q, 1.95 / (xs.len() as f64).sqrt());
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn chain_targets_gaussian_for_zero_potential() {
    let x0 = vec![0.5, -1.0];
    let mu = 2.0;
    let p = RegularizedProblem::new(pot(BuiltinPotential::Zero { dim: 2 }), mu, x0.clone()).unwrap();
    // eta = 1/mu gives lag-one correlation 1/2; thinning 16 leaves ~1.5e-5.
    let s = Schedule::manual(1.0 / mu, mu, 0.0, 0.1, None, Window::Smooth { smoothness: 0.0, dim: 2 })
        .unwrap()
        .with_thinning(16)
        .unwrap();
    let r = run_chain(&p, &s, 20_000, &RngStream::new(5)).unwrap();
    assert_isotropic_gaussian(&r.samples, &x0, 1.0 / mu);
}

#[test]
fn smooth_path_variance() {
    let (l, mu) = (4.0, 1.0);
    let p = RegularizedProblem::new(pot(BuiltinPotential::Quadratic { dim: 1, matrix: vec![l] }), mu, vec![0.0]).unwrap();
    let s = Schedule::smooth(1, 0.1, mu, l, Some(1.0 / l), 1e-6).unwrap().with_thinning(4).unwrap();
    let r = run_chain(&p, &s, 20_000, &RngStream::new(8)).unwrap();
    let (_, c) = mean_cov(&r.samples);
    let truth = 1.0 / (l + mu);
    assert!((c[0][0] / truth - 1.0).abs() < 0.05, "{} vs {truth}", c[0][0]);
}

#[test]
fn laplace_like_chain_passes_ks() {
    let abs = pot(BuiltinPotential::MaxAffine {
        rows: vec![vec![1.0], vec![-1.0]],
        offsets: vec![0.0, 0.0],
    });
    let p = RegularizedProblem::new(abs, 0.5, vec![0.0]).unwrap();
    let s = Schedule::strongly_convex(1, 0.1, 0.5, 1.0, None).unwrap().with_thinning(4).unwrap();
    let r = run_chain(&p, &s, 20_000, &RngStream::new(21)).unwrap();
    let q = exact_cdf_1d(&p, 400).unwrap();
    let xs: Vec<f64> = r.samples.iter().map(|v| v[0]).collect();
    let rep = ks_test(&xs, &q, 0.03);
    assert!(rep.pass, "{rep:?}");
}

fn collect_stats(
    oracle: impl Fn(&[f64], &mut RngStream) -> proxsample::Result<proxsample::RgoOutcome>,
    d: usize,
    calls: usize,
) -> Vec<RgoStats> {
    let root = RngStream::new(77);
    (0..calls)
        .map(|k| {
            let mut rng = root.substream(k as u64);
            let y: Vec<f64> = rng.normal_vec(d).iter().map(|v| 2.0 * v).collect();
            RgoStats::from(&oracle(&y, &mut rng).unwrap())
        })
        .collect()
}

#[test]
fn rejection_audits() {
    let d = 4;
    let m = 1.5;
    let l1 = RegularizedProblem::new(pot(BuiltinPotential::L1 { dim: d, m: m / (d as f64).sqrt() }), 0.2, vec![0.0; d]).unwrap();
    let eta = 1.0 / (16.0 * m * m * d as f64);
    let params = RgoParams::new(eta, 0.0).unwrap();
    let stats = collect_stats(|y, r| rgo_exact(&l1, y, &params, r), d, 10_000);
    let a = audit_rejections(&stats, Regime::Prox, 0.0).unwrap();
    assert!(a.pass && a.mean_trials <= 2.2, "{a:?}");

    let ma = RegularizedProblem::new(
        pot(BuiltinPotential::MaxAffine {
            rows: vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, -1.0, 0.5, 0.0], vec![-0.5, 0.5, 0.0, 1.0]],
            offsets: vec![0.0, 0.1, -0.2],
        }),
        0.2,
        vec![0.0; d],
    )
    .unwrap();
    let m = ma.potential().lipschitz().unwrap();
    let params = RgoParams::new(1.0 / (64.0 * m * m * d as f64), 1.0 / (32.0 * d as f64)).unwrap();
    let stats = collect_stats(|y, r| rgo_bundle(&ma, y, &params, r), d, 10_000);
    let a = audit_rejections(&stats, Regime::Bundle, params.delta).unwrap();
    assert!(a.pass && a.mean_trials <= 3.3, "{a:?}");

    let l = 3.0;
    let quad = RegularizedProblem::new(
        pot(BuiltinPotential::Quadratic {
            dim: d,
            matrix: (0..d * d).map(|i| if i % (d + 1) == 0 { l } else { 0.0 }).collect(),
        }),
        0.0,
        vec![0.0; d],
    )
    .unwrap();
    let params = RgoParams::new(1.0 / (l * d as f64), 1e-6).unwrap();
    let stats = collect_stats(|y, r| rgo_smooth(&quad, y, &params, r), d, 10_000);
    let a = audit_rejections(&stats, Regime::Smooth, 1e-6).unwrap();
    assert!(a.pass, "{a:?}");
}

#[test]
fn chains_are_deterministic_and_split_evenly() {
    let p = RegularizedProblem::new(pot(BuiltinPotential::L2norm { dim: 2, m: 1.0 }), 1.0, vec![0.0, 0.0]).unwrap();
    let s = Schedule::strongly_convex(2, 0.2, 1.0, 1.0, None).unwrap();
    let a = run_chains(&p, &s, 101, 3, &RngStream::new(9)).unwrap();
    let b = run_chains(&p, &s, 101, 3, &RngStream::new(9)).unwrap();
    assert_eq!(a, b);
    let sizes: Vec<usize> = a.iter().map(|c| c.samples.len()).collect();
    assert_eq!(sizes, vec![34, 34, 33]);
    assert_ne!(a[0].samples, a[1].samples);
    let c = run_chains(&p, &s, 101, 3, &RngStream::new(10)).unwrap();
    assert_ne!(a[0].samples, c[0].samples);
}
