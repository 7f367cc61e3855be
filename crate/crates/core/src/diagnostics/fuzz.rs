use serde::Serialize;

use crate::bundle::run_pbs;
use crate::error::Result;
use crate::problem::{eta_mu, RegularizedProblem, RgoParams};
use crate::rgo::{envelopes, Regime};
use crate::rng::RngStream;

/// Evaluation points per trial besides `x_j` and `x_tilde`.
const POINTS_PER_TRIAL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FuzzReport {
    pub trials: usize,
    pub evaluations: usize,
    /// `max(h1 - g^eta, g^eta - h2)` over all evaluations.
    pub max_violation: f64,
    pub max_lower_violation: f64,
    pub max_upper_violation: f64,
}

impl FuzzReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FuzzOptions {
    /// Adds `2 delta` to the `h1` offset (negative control).
    pub corrupt_h1: bool,
}

fn draw_step(p: &RegularizedProblem, rng: &mut RngStream) -> (f64, f64) {
    let f = p.potential();
    let d = p.dim() as f64;
    let mu = p.mu();
    // eta on a log scale inside whichever window the potential admits
    let mut eta_max: f64 = 1.0;
    if let Some(m) = f.lipschitz().filter(|m| *m > 0.0) {
        eta_max = eta_max.min(1.0 / (m * m * d));
    }
    if let Some(l) = f.smoothness().filter(|l| *l > 0.0) {
        eta_max = eta_max.min(1.0 / (l * d));
    }
    if mu > 0.0 {
        eta_max = eta_max.min(1.0 / mu);
    }
    let eta = eta_max * 10f64.powf(-2.0 * rng.uniform());
    let em = eta_mu(eta, mu);
    let scale = match f.lipschitz() {
        Some(m) if m > 0.0 => em * m * m,
        _ => 1.0 / (32.0 * d),
    };
    let delta = scale * (0.1 + 0.9 * rng.uniform());
    (eta, delta)
}

/// Runs the bundle solver at random `(y, eta, delta)` and checks
/// `h1 <= g^eta <= h2` at `x_j`, `x_tilde` and random points around them.
/// Both upper envelopes are checked when the potential supports them.
pub fn fuzz_envelopes(
    p: &RegularizedProblem,
    trials: usize,
    rng: &RngStream,
    opts: FuzzOptions,
) -> Result<FuzzReport> {
    let f = p.potential();
    let d = p.dim();
    let mut report = FuzzReport {
        trials,
        evaluations: 0,
        max_violation: f64::NEG_INFINITY,
        max_lower_violation: f64::NEG_INFINITY,
        max_upper_violation: f64::NEG_INFINITY,
    };
    for t in 0..trials {
        let mut r = rng.substream(t as u64);
        let (eta, delta) = draw_step(p, &mut r);
        let params = RgoParams::new(eta, delta)?;
        let em = eta_mu(eta, p.mu());
        let spread = 3.0 * (1.0 + (d as f64 / p.mu().max(1e-2)).sqrt().min(10.0));
        let y: Vec<f64> = p.x0().iter().map(|c| c + spread * r.normal()).collect();
        let res = run_pbs(p, &y, eta, delta)?;

        let mut regimes = Vec::new();
        if f.lipschitz().is_some() {
            regimes.push(Regime::Bundle);
        }
        if f.smoothness().is_some() {
            regimes.push(Regime::Smooth);
        }
        let mut pairs = Vec::new();
        for regime in regimes {
            let (mut h1, h2) = envelopes(p, &y, &params, &res, regime)?;
            if opts.corrupt_h1 {
                h1.offset += 2.0 * delta;
            }
            pairs.push((h1, h2));
        }

        let mut points = vec![res.x_j.clone(), res.x_tilde.clone()];
        for k in 0..POINTS_PER_TRIAL {
            let width = em.sqrt() * [0.1, 1.0, 3.0, 10.0][k % 4];
            let base = if k % 2 == 0 { &res.x_j } else { &res.x_tilde };
            points.push(base.iter().map(|b| b + width * r.normal()).collect());
        }
        for x in &points {
            let g = p.eval_g_eta(&y, eta, x);
            for (h1, h2) in &pairs {
                let lower = h1.eval(x) - g;
                let upper = g - h2.eval(x);
                report.max_lower_violation = report.max_lower_violation.max(lower);
                report.max_upper_violation = report.max_upper_violation.max(upper);
                report.evaluations += 1;
            }
        }
    }
    report.max_violation = report.max_lower_violation.max(report.max_upper_violation);
    Ok(report)
}
