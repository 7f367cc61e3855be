//! Fixed problems shared by the benchmarks.

use proxsample::{builtin_potential, BuiltinPotential, RegularizedProblem, RngStream};

pub const MU: f64 = 0.5;

/// `max_i (a_i . x + b_i)` with `k` Gaussian rows in dimension `d`.
pub fn max_affine(d: usize, k: usize, seed: u64) -> RegularizedProblem {
    let mut rng = RngStream::new(seed);
    let spec = BuiltinPotential::MaxAffine {
        rows: (0..k).map(|_| rng.normal_vec(d)).collect(),
        offsets: (0..k).map(|_| rng.normal()).collect(),
    };
    RegularizedProblem::new(builtin_potential(&spec).unwrap(), MU, vec![0.0; d]).unwrap()
}

pub fn l1(d: usize) -> RegularizedProblem {
    let f = builtin_potential(&BuiltinPotential::L1 { dim: d, m: 1.0 }).unwrap();
    RegularizedProblem::new(f, MU, vec![0.0; d]).unwrap()
}

/// Isotropic quadratic with curvature `l`.
pub fn quadratic(d: usize, l: f64) -> RegularizedProblem {
    let matrix = (0..d * d).map(|i| if i % (d + 1) == 0 { l } else { 0.0 }).collect();
    let f = builtin_potential(&BuiltinPotential::Quadratic { dim: d, matrix }).unwrap();
    RegularizedProblem::new(f, MU, vec![0.0; d]).unwrap()
}

/// `eta` with `eta / (1 + eta mu) = em`.
pub fn eta_for(em: f64, mu: f64) -> f64 {
    em / (1.0 - em * mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proxsample::eta_mu;

    #[test]
    fn eta_for_inverts_eta_mu() {
        let eta = eta_for(0.01, MU);
        assert!((eta_mu(eta, MU) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn fixtures_build() {
        assert_eq!(max_affine(4, 6, 1).dim(), 4);
        assert_eq!(l1(3).dim(), 3);
        assert_eq!(quadratic(2, 1.0).dim(), 2);
    }
}
