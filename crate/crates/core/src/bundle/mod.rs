//! Proximal bundle solver for the RGO subproblem `min_x g^eta(x)`.
//!
//! Each iteration minimizes the cutting-plane model `g_j^eta` exactly,
//! keeps the better of the new point and the previous incumbent, and stops
//! once the incumbent is within `delta` of the model minimum. The model
//! minimum lower-bounds `min g^eta`, so the incumbent is a `delta`-solution.

mod qp;
mod simplex;

use std::fmt;

use serde::Serialize;

pub use qp::{solve_model_subproblem, ModelSolution};
pub use simplex::project_onto_simplex;

use crate::error::{Error, Result};
use crate::linalg::{dist_sq, dot};
use crate::potential::Potential;
use crate::problem::{eta_mu, CutPolicy, RegularizedProblem};

/// Constant in front of the iteration cap.
pub const CAP_CONSTANT: f64 = 8.0;
const MIN_CAP: usize = 64;

/// Affine minorant `l(u) = value + <slope, u - anchor>` of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub anchor: Vec<f64>,
    pub value: f64,
    pub slope: Vec<f64>,
}

impl Cut {
    pub fn at(f: &dyn Potential, x: &[f64]) -> Self {
        Self {
            anchor: x.to_vec(),
            value: f.value(x),
            slope: f.subgradient(x),
        }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.value
            + self
                .slope
                .iter()
                .zip(u.iter().zip(&self.anchor))
                .map(|(s, (ui, ai))| s * (ui - ai))
                .sum::<f64>()
    }
}

/// `f_j(u) = max_i l_i(u)`.
pub fn model_value(cuts: &[Cut], u: &[f64]) -> f64 {
    cuts.iter()
        .map(|c| c.eval(u))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone)]
pub struct BundleState {
    pub cuts: Vec<Cut>,
    pub x_j: Vec<f64>,
    pub x_tilde: Vec<f64>,
    /// `g^eta(x_tilde) - g_j^eta(x_j)`
    pub gap: f64,
    /// `f_j(x_j)`
    pub model_at_xj: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub cuts: usize,
    pub gap: f64,
    pub model_value: f64,
}

impl fmt::Display for TraceRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{:.16e}\t{:.16e}",
            self.iteration, self.cuts, self.gap, self.model_value
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleResult {
    pub x_j: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
    /// `g_j^eta(x_j)`
    pub model_min_value: f64,
    /// `g^eta(x_tilde)`
    pub incumbent_value: f64,
    pub final_cuts: usize,
    pub cap: usize,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BundleOptions {
    pub cut_policy: CutPolicy,
    pub trace: bool,
    /// Replaces the default iteration cap.
    pub cap: Option<usize>,
}

/// `max(64, ceil(8 (eta_mu M^2 / delta + 1) log(1/delta)))`, or the
/// smooth-case analogue `8 (eta_mu L + 1) log(1/delta)` when `M` is unknown.
pub fn iteration_cap(
    eta_mu: f64,
    lipschitz: Option<f64>,
    smoothness: Option<f64>,
    delta: f64,
) -> Option<usize> {
    let scale = match (lipschitz, smoothness) {
        (Some(m), _) => eta_mu * m * m / delta + 1.0,
        (None, Some(l)) => eta_mu * l + 1.0,
        (None, None) => return None,
    };
    let raw = (CAP_CONSTANT * scale * (1.0 / delta).ln()).ceil();
    // float-to-int casts saturate
    Some(raw.max(MIN_CAP as f64) as usize)
}

fn activity_tol(model_at_xj: f64) -> f64 {
    1e-9 * (1.0 + model_at_xj.abs())
}

fn retained(cuts: &[Cut], x_j: &[f64], model_at_xj: f64, policy: CutPolicy) -> Vec<usize> {
    match policy {
        CutPolicy::Full => (0..cuts.len()).collect(),
        CutPolicy::Minimal => {
            let tol = activity_tol(model_at_xj);
            cuts.iter()
                .enumerate()
                .filter(|(_, c)| c.eval(x_j) >= model_at_xj - tol)
                .map(|(i, _)| i)
                .collect()
        }
    }
}

/// Next cut set: the cuts active at `x_j` (or all of them under
/// [`CutPolicy::Full`]) plus `new_cut`. A new cut anchored at an existing
/// anchor is not duplicated.
pub fn prune_cuts(state: &BundleState, new_cut: Cut, policy: CutPolicy) -> Vec<Cut> {
    let keep = retained(&state.cuts, &state.x_j, state.model_at_xj, policy);
    let mut next: Vec<Cut> = keep.iter().map(|&i| state.cuts[i].clone()).collect();
    if !next.iter().any(|c| c.anchor == new_cut.anchor) {
        next.push(new_cut);
    }
    next
}

/// Runs the bundle solver with default options.
pub fn run_pbs(p: &RegularizedProblem, y: &[f64], eta: f64, delta: f64) -> Result<BundleResult> {
    run_pbs_with(p, y, eta, delta, &BundleOptions::default())
}

pub fn run_pbs_with(
    p: &RegularizedProblem,
    y: &[f64],
    eta: f64,
    delta: f64,
    opts: &BundleOptions,
) -> Result<BundleResult> {
    p.check_point(y)?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    let f = p.potential();
    let em = eta_mu(eta, p.mu());

    if delta == 0.0 {
        return exact_via_prox(p, y, eta);
    }

    let cap = match opts.cap {
        Some(c) => c,
        None => iteration_cap(em, f.lipschitz(), f.smoothness(), delta)
            .ok_or(Error::MissingLipschitz)?,
    };

    let objective_from_cut = |cut: &Cut| {
        cut.value
            + 0.5 * p.mu() * dist_sq(&cut.anchor, p.x0())
            + dist_sq(&cut.anchor, y) / (2.0 * eta)
    };

    let first = Cut::at(f, y);
    let mut x_tilde = y.to_vec();
    let mut incumbent = objective_from_cut(&first);
    let mut cuts = vec![first];
    let mut weights = vec![1.0];
    let mut trace = Vec::new();
    let mut last_gap = f64::INFINITY;

    for j in 1..=cap {
        let sol = qp::solve_model_subproblem_warm(&cuts, y, p.x0(), eta, p.mu(), Some(&weights))?;
        let x_j = sol.x;
        let new_cut = Cut::at(f, &x_j);
        let value_xj = objective_from_cut(&new_cut);
        if value_xj < incumbent {
            incumbent = value_xj;
            x_tilde.clone_from(&x_j);
        }
        let gap = incumbent - sol.model_value;
        last_gap = gap;
        if opts.trace {
            trace.push(TraceRow {
                iteration: j,
                cuts: cuts.len(),
                gap,
                model_value: sol.model_value,
            });
        }
        if gap <= delta {
            return Ok(BundleResult {
                x_j,
                x_tilde,
                iterations: j,
                gap,
                model_min_value: sol.model_value,
                incumbent_value: incumbent,
                final_cuts: cuts.len(),
                cap,
                trace,
            });
        }

        let model_at_xj = model_value(&cuts, &x_j);
        let keep = retained(&cuts, &x_j, model_at_xj, opts.cut_policy);
        let mut next_cuts: Vec<Cut> = Vec::with_capacity(keep.len() + 1);
        let mut next_weights: Vec<f64> = Vec::with_capacity(keep.len() + 1);
        for &i in &keep {
            next_cuts.push(cuts[i].clone());
            next_weights.push(sol.weights[i]);
        }
        if !next_cuts.iter().any(|c| c.anchor == new_cut.anchor) {
            next_cuts.push(new_cut);
            next_weights.push(0.0);
        }
        if next_weights.iter().all(|&w| w == 0.0) {
            next_weights.iter_mut().for_each(|w| *w = 1.0);
        }
        cuts = next_cuts;
        weights = next_weights;
    }

    Err(Error::BundleCapExceeded {
        cap,
        gap: last_gap,
        delta,
    })
}

/// `delta = 0`: the subproblem is solved exactly by one prox call.
fn exact_via_prox(p: &RegularizedProblem, y: &[f64], eta: f64) -> Result<BundleResult> {
    let x_star = prox_minimizer(p, y, eta)?;
    let value = p.eval_g_eta(y, eta, &x_star);
    Ok(BundleResult {
        x_j: x_star.clone(),
        x_tilde: x_star,
        iterations: 0,
        gap: 0.0,
        model_min_value: value,
        incumbent_value: value,
        final_cuts: 0,
        cap: 0,
        trace: Vec::new(),
    })
}

/// `argmin g^eta` via one prox call of `f`: the two quadratics fold into a
/// single one centered at `eta_mu (mu x0 + y/eta)` with step `eta_mu`.
pub fn prox_minimizer(p: &RegularizedProblem, y: &[f64], eta: f64) -> Result<Vec<f64>> {
    let f = p.potential();
    if !f.has_prox() {
        return Err(Error::MissingProx);
    }
    let em = eta_mu(eta, p.mu());
    let center = p.quadratic_center(y, eta);
    f.prox(&center, em).ok_or(Error::MissingProx)
}

/// Certificate quantities at termination, used by tests and
/// the diagnostics harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BundleCertificate {
    /// `|mu (x_j - x0) + (x_j - y) / eta|`
    pub stationarity_norm: f64,
    /// `|x_j - x_tilde|^2`
    pub center_distance_sq: f64,
}

pub fn certificate(p: &RegularizedProblem, y: &[f64], eta: f64, r: &BundleResult) -> BundleCertificate {
    let mu = p.mu();
    let resid: Vec<f64> = r
        .x_j
        .iter()
        .zip(p.x0())
        .zip(y)
        .map(|((x, c), yi)| mu * (x - c) + (x - yi) / eta)
        .collect();
    BundleCertificate {
        stationarity_norm: dot(&resid, &resid).sqrt(),
        center_distance_sq: dist_sq(&r.x_j, &r.x_tilde),
    }
}
