use serde::Serialize;

use crate::error::{Error, Result};
use crate::rgo::{Regime, RgoStats};

/// Smallest batch an audit will judge.
pub const MIN_AUDIT_CALLS: usize = 10_000;
/// Slack on the expected-trials bound.
pub const AUDIT_SLACK: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RejectionAudit {
    pub regime: Regime,
    pub calls: usize,
    pub mean_trials: f64,
    pub bound: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Expected proposals per RGO call: 2 (prox, `eta_mu <= 1/(16 M^2 d)`),
/// 3 (bundle, `eta_mu <= 1/(64 M^2 d)`, `delta <= 1/(32 d)`),
/// `exp(1/2 + delta)` (smooth, `eta_mu <= 1/(L d)`).
pub fn expected_trials_bound(regime: Regime, delta: f64) -> f64 {
    match regime {
        Regime::Prox => 2.0,
        Regime::Bundle => 3.0,
        Regime::Smooth => (0.5 + delta).exp(),
    }
}

pub fn audit_rejections(stats: &[RgoStats], regime: Regime, delta: f64) -> Result<RejectionAudit> {
    if stats.len() < MIN_AUDIT_CALLS {
        return Err(Error::InsufficientSamples {
            required: MIN_AUDIT_CALLS,
            got: stats.len(),
        });
    }
    let mean_trials = stats.iter().map(|s| (s.rejections + 1) as f64).sum::<f64>() / stats.len() as f64;
    let bound = expected_trials_bound(regime, delta);
    let threshold = bound * AUDIT_SLACK;
    Ok(RejectionAudit {
        regime,
        calls: stats.len(),
        mean_trials,
        bound,
        threshold,
        pass: mean_trials <= threshold,
    })
}
