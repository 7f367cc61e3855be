//! The regularized target `g = f + (mu/2)|x - x0|^2` and the stepsize
//! quantities shared by the RGO and the bundle solver.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dist_sq};
use crate::potential::Potential;

/// `eta / (1 + eta mu)`.
pub fn eta_mu(eta: f64, mu: f64) -> f64 {
    eta / (1.0 + eta * mu)
}

/// `eta / (1 + eta mu + eta L)`.
pub fn eta_mu_l(eta: f64, mu: f64, smoothness: f64) -> f64 {
    eta / (1.0 + eta * mu + eta * smoothness)
}

#[derive(Debug, Clone)]
pub struct RegularizedProblem {
    f: Arc<dyn Potential>,
    mu: f64,
    x0: Vec<f64>,
}

impl RegularizedProblem {
    pub fn new(f: Arc<dyn Potential>, mu: f64, x0: Vec<f64>) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mu must be finite and nonnegative, got {mu}"
            )));
        }
        if x0.len() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: x0.len(),
            });
        }
        if !all_finite(&x0) {
            return Err(Error::InvalidArgument("x0 must be finite".into()));
        }
        Ok(Self { f, mu, x0 })
    }

    /// Unregularized problem (`mu = 0`, `x0 = 0`).
    pub fn plain(f: Arc<dyn Potential>) -> Self {
        let d = f.dim();
        Self {
            f,
            mu: 0.0,
            x0: vec![0.0; d],
        }
    }

    pub fn potential(&self) -> &dyn Potential {
        self.f.as_ref()
    }

    pub fn potential_arc(&self) -> &Arc<dyn Potential> {
        &self.f
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn eval_g(&self, x: &[f64]) -> f64 {
        self.f.value(x) + 0.5 * self.mu * dist_sq(x, &self.x0)
    }

    /// `g(x) + |x - y|^2 / (2 eta)`.
    pub fn eval_g_eta(&self, y: &[f64], eta: f64, x: &[f64]) -> f64 {
        self.eval_g(x) + dist_sq(x, y) / (2.0 * eta)
    }

    /// One element of `dg(x)`.
    pub fn subgradient_g(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.f.subgradient(x);
        for ((si, xi), ci) in s.iter_mut().zip(x).zip(&self.x0) {
            *si += self.mu * (xi - ci);
        }
        s
    }

    /// Center of the Gaussian part of `g^eta`: `eta_mu (mu x0 + y / eta)`.
    pub fn quadratic_center(&self, y: &[f64], eta: f64) -> Vec<f64> {
        let em = eta_mu(eta, self.mu);
        y.iter()
            .zip(&self.x0)
            .map(|(yi, ci)| em * (self.mu * ci + yi / eta))
            .collect()
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !all_finite(x) {
            return Err(Error::InvalidArgument("point has non-finite coordinates".into()));
        }
        Ok(())
    }
}

/// Which cuts survive a bundle iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutPolicy {
    /// Active cuts plus the new one.
    #[default]
    Minimal,
    /// Every cut ever generated.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RgoParams {
    pub eta: f64,
    pub delta: f64,
    pub cut_policy: CutPolicy,
}

impl RgoParams {
    pub fn new(eta: f64, delta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must be nonnegative, got {delta}"
            )));
        }
        Ok(Self {
            eta,
            delta,
            cut_policy: CutPolicy::Minimal,
        })
    }

    pub fn with_cut_policy(mut self, policy: CutPolicy) -> Self {
        self.cut_policy = policy;
        self
    }

    pub fn eta_mu(&self, mu: f64) -> f64 {
        eta_mu(self.eta, mu)
    }

    pub fn eta_mu_l(&self, mu: f64, smoothness: Option<f64>) -> Option<f64> {
        smoothness.map(|l| eta_mu_l(self.eta, mu, l))
    }
}
