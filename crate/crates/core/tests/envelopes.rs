mod common;

use common::{pot, random_lipschitz, random_max_affine};
use proxsample::diagnostics::{fuzz_envelopes, FuzzOptions};
use proxsample::{BuiltinPotential, RegularizedProblem, RngStream};

#[test]
fn zero_potential_has_no_violation() {
    let p = RegularizedProblem::new(pot(BuiltinPotential::Zero { dim: 3 }), 1.0, vec![0.0; 3]).unwrap();
    let r = fuzz_envelopes(&p, 200, &RngStream::new(1), FuzzOptions::default()).unwrap();
    assert!(r.max_violation.abs() <= 1e-12, "{r:?}");
}

#[test]
fn max_affine_corpus() {
    let root = RngStream::new(99);
    let mut evaluations = 0;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..100 {
        let mut rng = root.substream(i);
        let d = 1 + (rng.next_u64() % 20) as usize;
        let spec = random_max_affine(d, 2 + (rng.next_u64() % 10) as usize, &mut rng);
        let mu = rng.uniform();
        let p = RegularizedProblem::new(pot(spec), mu, rng.normal_vec(d)).unwrap();
        let r = fuzz_envelopes(&p, 100, &rng.substream(1_000), FuzzOptions::default()).unwrap();
        evaluations += r.evaluations;
        worst = worst.max(r.max_violation);
    }
    assert!(evaluations >= 10_000);
    assert!(worst <= 1e-8, "worst violation {worst:e}");
}

#[test]
fn mixed_corpus_including_smooth_envelopes() {
    let root = RngStream::new(5);
    for i in 0..60 {
        let mut rng = root.substream(i);
        let spec = random_lipschitz(&mut rng);
        let d = match &spec {
            BuiltinPotential::MaxAffine { rows, .. } => rows[0].len(),
            BuiltinPotential::L1 { dim, .. }
            | BuiltinPotential::L2norm { dim, .. }
            | BuiltinPotential::Huber { dim, .. }
            | BuiltinPotential::Zero { dim }
            | BuiltinPotential::Quadratic { dim, .. } => *dim,
        };
        let p = RegularizedProblem::new(pot(spec.clone()), rng.uniform(), rng.normal_vec(d)).unwrap();
        let r = fuzz_envelopes(&p, 40, &rng.substream(7), FuzzOptions::default()).unwrap();
        assert!(r.max_violation <= 1e-8, "{spec:?}: {r:?}");
    }
    let quad = RegularizedProblem::new(
        pot(BuiltinPotential::Quadratic {
            dim: 2,
            matrix: vec![2.0, 0.5, 0.5, 1.0],
        }),
        0.1,
        vec![1.0, -1.0],
    )
    .unwrap();
    let r = fuzz_envelopes(&quad, 200, &RngStream::new(3), FuzzOptions::default()).unwrap();
    assert!(r.max_violation <= 1e-8, "{r:?}");
}

#[test]
fn corrupted_lower_envelope_is_detected() {
    let p = RegularizedProblem::new(
        pot(BuiltinPotential::MaxAffine {
            rows: vec![vec![1.0], vec![-1.0]],
            offsets: vec![0.0, 0.0],
        }),
        0.5,
        vec![0.0],
    )
    .unwrap();
    let r = fuzz_envelopes(&p, 100, &RngStream::new(4), FuzzOptions { corrupt_h1: true }).unwrap();
    assert!(r.max_lower_violation > 1e-6, "{r:?}");
}
