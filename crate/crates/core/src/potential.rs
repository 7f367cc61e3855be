//! Convex potentials `f` with a subgradient oracle and optional metadata.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// A convex potential, finite on all of `R^d`.
///
/// `subgradient_into` must return one fixed element of the subdifferential;
/// at kinks the builtins pick the `+M` side so bundle traces are
/// reproducible.
pub trait Potential: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn subgradient_into(&self, x: &[f64], out: &mut [f64]);

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.subgradient_into(x, &mut g);
        g
    }

    /// Bound `M` on every subgradient norm, if known.
    fn lipschitz(&self) -> Option<f64>;

    /// Gradient Lipschitz constant `L`, if the potential is smooth.
    fn smoothness(&self) -> Option<f64>;

    fn has_prox(&self) -> bool {
        false
    }

    /// `argmin_x f(x) + |x - y|^2 / (2 step)`, when available in closed form.
    fn prox(&self, _y: &[f64], _step: f64) -> Option<Vec<f64>> {
        None
    }
}

#[inline]
fn sign_up(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone)]
pub struct Zero {
    dim: usize,
}

impl Potential for Zero {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn subgradient_into(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
    fn smoothness(&self) -> Option<f64> {
        Some(0.0)
    }
    fn has_prox(&self) -> bool {
        true
    }
    fn prox(&self, y: &[f64], _step: f64) -> Option<Vec<f64>> {
        Some(y.to_vec())
    }
}

/// `f(x) = M * |x|_1`. Subgradients have Euclidean norm `M * sqrt(d)`.
#[derive(Debug, Clone)]
pub struct L1Norm {
    dim: usize,
    weight: f64,
}

impl Potential for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.weight * x.iter().map(|v| v.abs()).sum::<f64>()
    }
    fn subgradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = self.weight * sign_up(*v);
        }
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(self.weight * (self.dim as f64).sqrt())
    }
    fn smoothness(&self) -> Option<f64> {
        None
    }
    fn has_prox(&self) -> bool {
        true
    }
    fn prox(&self, y: &[f64], step: f64) -> Option<Vec<f64>> {
        let t = step * self.weight;
        Some(
            y.iter()
                .map(|&v| v.signum() * (v.abs() - t).max(0.0))
                .collect(),
        )
    }
}

/// `f(x) = M * |x|_2`.
#[derive(Debug, Clone)]
pub struct L2Norm {
    dim: usize,
    weight: f64,
}

impl Potential for L2Norm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.weight * norm(x)
    }
    fn subgradient_into(&self, x: &[f64], out: &mut [f64]) {
        let r = norm(x);
        if r == 0.0 {
            out.fill(0.0);
            out[0] = self.weight;
        } else {
            for (o, v) in out.iter_mut().zip(x) {
                *o = self.weight * v / r;
            }
        }
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(self.weight)
    }
    fn smoothness(&self) -> Option<f64> {
        None
    }
    fn has_prox(&self) -> bool {
        true
    }
    fn prox(&self, y: &[f64], step: f64) -> Option<Vec<f64>> {
        let r = norm(y);
        let t = step * self.weight;
        if r <= t {
            return Some(vec![0.0; y.len()]);
        }
        let scale = 1.0 - t / r;
        Some(y.iter().map(|v| scale * v).collect())
    }
}

/// `f(x) = max_i <a_i, x> + b_i`. Ties resolve to the lowest index.
#[derive(Debug, Clone)]
pub struct MaxAffine {
    rows: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    lipschitz: f64,
}

impl MaxAffine {
    fn active_piece(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, (a, b)) in self.rows.iter().zip(&self.offsets).enumerate() {
            let v = dot(a, x) + b;
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }
}

impl Potential for MaxAffine {
    fn dim(&self) -> usize {
        self.rows[0].len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.active_piece(x).1
    }
    fn subgradient_into(&self, x: &[f64], out: &mut [f64]) {
        let (i, _) = self.active_piece(x);
        out.copy_from_slice(&self.rows[i]);
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
    fn smoothness(&self) -> Option<f64> {
        None
    }
}

/// `f(x) = x^T S x / 2` with `S` symmetric PSD. Not globally Lipschitz.
#[derive(Debug, Clone)]
pub struct Quadratic {
    dim: usize,
    // row-major
    matrix: Vec<f64>,
    smoothness: f64,
}

impl Quadratic {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&self.matrix[i * self.dim..(i + 1) * self.dim], x);
        }
    }
}

impl Potential for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        let mut sx = vec![0.0; self.dim];
        self.apply(x, &mut sx);
        0.5 * dot(x, &sx)
    }
    fn subgradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.apply(x, out);
    }
    fn lipschitz(&self) -> Option<f64> {
        None
    }
    fn smoothness(&self) -> Option<f64> {
        Some(self.smoothness)
    }
}

/// Huber function of the Euclidean norm, scaled so the slope saturates at `M`:
/// `M |x|^2 / (2 tau)` inside the ball of radius `tau`, `M (|x| - tau/2)` outside.
#[derive(Debug, Clone)]
pub struct Huber {
    dim: usize,
    weight: f64,
    threshold: f64,
}

impl Potential for Huber {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        if r <= self.threshold {
            self.weight * r * r / (2.0 * self.threshold)
        } else {
            self.weight * (r - 0.5 * self.threshold)
        }
    }
    fn subgradient_into(&self, x: &[f64], out: &mut [f64]) {
        let r = norm(x);
        let scale = if r <= self.threshold {
            self.weight / self.threshold
        } else {
            self.weight / r
        };
        for (o, v) in out.iter_mut().zip(x) {
            *o = scale * v;
        }
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(self.weight)
    }
    fn smoothness(&self) -> Option<f64> {
        Some(self.weight / self.threshold)
    }
}

/// Declarative description of the builtin test corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuiltinPotential {
    Zero { dim: usize },
    L1 { dim: usize, m: f64 },
    L2norm { dim: usize, m: f64 },
    MaxAffine { rows: Vec<Vec<f64>>, offsets: Vec<f64> },
    /// Row-major `dim x dim` matrix.
    Quadratic { dim: usize, matrix: Vec<f64> },
    Huber { dim: usize, m: f64, threshold: f64 },
}

impl BuiltinPotential {
    pub fn kind_name(&self) -> &'static str {
        match self {
            BuiltinPotential::Zero { .. } => "zero",
            BuiltinPotential::L1 { .. } => "l1",
            BuiltinPotential::L2norm { .. } => "l2norm",
            BuiltinPotential::MaxAffine { .. } => "max_affine",
            BuiltinPotential::Quadratic { .. } => "quadratic",
            BuiltinPotential::Huber { .. } => "huber",
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_weight(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "{name} must be finite and nonnegative, got {v}"
        )));
    }
    Ok(())
}

pub fn builtin_potential(spec: &BuiltinPotential) -> Result<Arc<dyn Potential>> {
    Ok(match spec {
        BuiltinPotential::Zero { dim } => {
            check_dim(*dim)?;
            Arc::new(Zero { dim: *dim })
        }
        BuiltinPotential::L1 { dim, m } => {
            check_dim(*dim)?;
            check_weight("M", *m)?;
            Arc::new(L1Norm {
                dim: *dim,
                weight: *m,
            })
        }
        BuiltinPotential::L2norm { dim, m } => {
            check_dim(*dim)?;
            check_weight("M", *m)?;
            Arc::new(L2Norm {
                dim: *dim,
                weight: *m,
            })
        }
        BuiltinPotential::MaxAffine { rows, offsets } => {
            if rows.is_empty() {
                return Err(Error::EmptyAffineFamily);
            }
            if rows.len() != offsets.len() {
                return Err(Error::InvalidArgument(format!(
                    "max_affine has {} rows but {} offsets",
                    rows.len(),
                    offsets.len()
                )));
            }
            let dim = rows[0].len();
            check_dim(dim)?;
            for r in rows {
                if r.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: r.len(),
                    });
                }
            }
            if !rows.iter().flatten().chain(offsets).all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument("max_affine entries must be finite".into()));
            }
            let lipschitz = rows.iter().map(|r| norm(r)).fold(0.0, f64::max);
            Arc::new(MaxAffine {
                rows: rows.clone(),
                offsets: offsets.clone(),
                lipschitz,
            })
        }
        BuiltinPotential::Quadratic { dim, matrix } => {
            check_dim(*dim)?;
            if matrix.len() != dim * dim {
                return Err(Error::DimensionMismatch {
                    expected: dim * dim,
                    got: matrix.len(),
                });
            }
            if !matrix.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument("quadratic entries must be finite".into()));
            }
            let m = DMatrix::from_row_slice(*dim, *dim, matrix);
            let scale = m.amax().max(1.0);
            if (&m - m.transpose()).amax() > 1e-12 * scale {
                return Err(Error::InvalidArgument("quadratic matrix must be symmetric".into()));
            }
            let eig = SymmetricEigen::new(m).eigenvalues;
            let min = eig.min();
            let max = eig.max();
            if min < -1e-12 * scale {
                return Err(Error::NotPositiveSemidefinite {
                    min_eigenvalue: min,
                });
            }
            Arc::new(Quadratic {
                dim: *dim,
                matrix: matrix.clone(),
                smoothness: max.max(0.0),
            })
        }
        BuiltinPotential::Huber { dim, m, threshold } => {
            check_dim(*dim)?;
            check_weight("M", *m)?;
            if !(threshold.is_finite() && *threshold > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "huber threshold must be positive, got {threshold}"
                )));
            }
            Arc::new(Huber {
                dim: *dim,
                weight: *m,
                threshold: *threshold,
            })
        }
    })
}
