mod common;

use common::pot;
use proptest::prelude::*;
use proxsample::linalg::{dot, norm};
use proxsample::BuiltinPotential;

fn specs() -> impl Strategy<Value = BuiltinPotential> {
    let dim = 1usize..6;
    prop_oneof![
        dim.clone().prop_map(|dim| BuiltinPotential::Zero { dim }),
        (dim.clone(), 0.1f64..3.0).prop_map(|(dim, m)| BuiltinPotential::L1 { dim, m }),
        (dim.clone(), 0.1f64..3.0).prop_map(|(dim, m)| BuiltinPotential::L2norm { dim, m }),
        (dim.clone(), 0.1f64..3.0, 0.05f64..2.0).prop_map(|(dim, m, threshold)| BuiltinPotential::Huber {
            dim,
            m,
            threshold
        }),
        (dim, 1usize..6)
            .prop_flat_map(|(d, k)| (
                prop::collection::vec(prop::collection::vec(-2.0f64..2.0, d), k),
                prop::collection::vec(-1.0f64..1.0, k)
            ))
            .prop_map(|(rows, offsets)| BuiltinPotential::MaxAffine { rows, offsets }),
    ]
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, d)
}

proptest! {
    #[test]
    fn subgradient_inequality_and_lipschitz_bound(
        (spec, x, z) in specs().prop_flat_map(|s| {
            let d = pot(s.clone()).dim();
            (Just(s), point(d), point(d))
        })
    ) {
        let f = pot(spec);
        let s = f.subgradient(&x);
        let diff: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a - b).collect();
        let lin = f.value(&x) + dot(&s, &diff);
        prop_assert!(f.value(&z) >= lin - 1e-10 * (1.0 + lin.abs()));
        let m = f.lipschitz().unwrap();
        prop_assert!(norm(&s) <= m * (1.0 + 1e-12) + 1e-12);
        prop_assert!((f.value(&z) - f.value(&x)).abs() <= m * norm(&diff) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn prox_is_optimal(
        (spec, y) in specs().prop_flat_map(|s| {
            let d = pot(s.clone()).dim();
            (Just(s), point(d))
        }),
        step in 0.01f64..3.0,
        probe in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let f = pot(spec);
        prop_assume!(f.has_prox());
        let x = f.prox(&y, step).unwrap();
        let obj = |u: &[f64]| f.value(u) + u.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (2.0 * step);
        let base = obj(&x);
        // no coordinate perturbation improves the prox objective
        for (i, t) in probe.iter().enumerate() {
            let mut u = x.clone();
            let k = i % u.len();
            u[k] += 1e-3 * t;
            prop_assert!(obj(&u) >= base - 1e-12);
        }
    }
}

#[test]
fn quadratic_gradient_is_linear() {
    let f = pot(BuiltinPotential::Quadratic {
        dim: 2,
        matrix: vec![2.0, 1.0, 1.0, 3.0],
    });
    assert_eq!(f.subgradient(&[1.0, 1.0]), vec![3.0, 4.0]);
    assert!((f.value(&[1.0, 1.0]) - 3.5).abs() < 1e-15);
    assert!(f.smoothness().unwrap() > 3.6 && f.smoothness().unwrap() < 3.7);
}
