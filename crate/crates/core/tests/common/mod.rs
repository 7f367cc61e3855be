#![allow(dead_code)]

use std::sync::Arc;

use proxsample::{builtin_potential, BuiltinPotential, Potential, RngStream};

pub fn pot(spec: BuiltinPotential) -> Arc<dyn Potential> {
    builtin_potential(&spec).unwrap()
}

/// Random max-affine potential with `pieces` rows in dimension `d`.
pub fn random_max_affine(d: usize, pieces: usize, rng: &mut RngStream) -> BuiltinPotential {
    let rows = (0..pieces).map(|_| rng.normal_vec(d)).collect();
    let offsets = (0..pieces).map(|_| rng.normal()).collect();
    BuiltinPotential::MaxAffine { rows, offsets }
}

/// One random Lipschitz potential from the builtin families.
pub fn random_lipschitz(rng: &mut RngStream) -> BuiltinPotential {
    let d = 1 + (rng.next_u64() % 20) as usize;
    let m = 0.2 + 2.0 * rng.uniform();
    match rng.next_u64() % 5 {
        0 => BuiltinPotential::L1 { dim: d, m },
        1 => BuiltinPotential::L2norm { dim: d, m },
        2 => BuiltinPotential::Huber {
            dim: d,
            m,
            threshold: 0.05 + rng.uniform(),
        },
        3 => BuiltinPotential::Zero { dim: d },
        _ => {
            let pieces = 2 + (rng.next_u64() % 12) as usize;
            random_max_affine(d, pieces, rng)
        }
    }
}
