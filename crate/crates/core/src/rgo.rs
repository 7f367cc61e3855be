//! Restricted Gaussian oracle: exact draws from `exp(-g^eta)` by rejection
//! sampling from the Gaussian `exp(-h1)`.
//!
//! `h1` is a quadratic minorant of `g^eta` centered at the (approximate)
//! minimizer, so `h1(X) - g^eta(X) <= 0` and the acceptance test
//! `log U <= h1(X) - g^eta(X)` never forms an exponential.

use serde::Serialize;

use crate::bundle::{prox_minimizer, run_pbs_with, BundleOptions, BundleResult};
use crate::error::{Error, Result};
use crate::linalg::{dist_sq, norm};
use crate::problem::{eta_mu, eta_mu_l, RegularizedProblem, RgoParams};
use crate::rng::RngStream;

/// Proposals allowed per RGO call before giving up.
pub const REJECTION_CAP: usize = 10_000;

/// `offset + (inv_width / 2) |x - center|^2 + linear_coeff |x - center|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub center: Vec<f64>,
    pub inv_width: f64,
    pub linear_coeff: f64,
    pub offset: f64,
}

impl Envelope {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2 = dist_sq(x, &self.center);
        self.offset + 0.5 * self.inv_width * r2 + self.linear_coeff * r2.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Prox,
    Bundle,
    Smooth,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Prox => "prox",
            Regime::Bundle => "bundle",
            Regime::Smooth => "smooth",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RgoOutcome {
    pub sample: Vec<f64>,
    /// Proposals drawn minus one.
    pub rejections: usize,
    /// Zero on the prox path.
    pub bundle_iterations: usize,
    pub center: Vec<f64>,
    /// `g^eta` at the incumbent (`x_tilde` or `x*`).
    pub incumbent_value: f64,
    pub regime: Regime,
}

/// Per-call statistics kept by chains and audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RgoStats {
    pub rejections: usize,
    pub bundle_iterations: usize,
}

impl From<&RgoOutcome> for RgoStats {
    fn from(o: &RgoOutcome) -> Self {
        Self {
            rejections: o.rejections,
            bundle_iterations: o.bundle_iterations,
        }
    }
}

fn rejection_loop(
    p: &RegularizedProblem,
    y: &[f64],
    eta: f64,
    h1: &Envelope,
    rng: &mut RngStream,
) -> Result<(Vec<f64>, usize)> {
    let sd = (1.0 / h1.inv_width).sqrt();
    let d = p.dim();
    let mut x = vec![0.0; d];
    for proposals in 1..=REJECTION_CAP {
        rng.fill_normal(&mut x);
        for (xi, ci) in x.iter_mut().zip(&h1.center) {
            *xi = ci + sd * *xi;
        }
        let log_ratio = h1.eval(&x) - p.eval_g_eta(y, eta, &x);
        let u = rng.uniform();
        if u.ln() <= log_ratio {
            return Ok((x, proposals - 1));
        }
    }
    Err(Error::RejectionCapExceeded {
        proposals: REJECTION_CAP,
        acceptance_rate: 0.0,
    })
}

fn check_call(p: &RegularizedProblem, y: &[f64]) -> Result<()> {
    p.check_point(y)
}

/// Exact lower envelope around `x*` (delta = 0).
fn exact_h1(p: &RegularizedProblem, y: &[f64], eta: f64, x_star: &[f64]) -> (Envelope, f64) {
    let value = p.eval_g_eta(y, eta, x_star);
    (
        Envelope {
            center: x_star.to_vec(),
            inv_width: 1.0 / eta_mu(eta, p.mu()),
            linear_coeff: 0.0,
            offset: value,
        },
        value,
    )
}

/// RGO using one proximal map of `f` to locate the proposal center.
pub fn rgo_exact(
    p: &RegularizedProblem,
    y: &[f64],
    params: &RgoParams,
    rng: &mut RngStream,
) -> Result<RgoOutcome> {
    check_call(p, y)?;
    let x_star = prox_minimizer(p, y, params.eta)?;
    let (h1, value) = exact_h1(p, y, params.eta, &x_star);
    let (sample, rejections) = rejection_loop(p, y, params.eta, &h1, rng)?;
    Ok(RgoOutcome {
        sample,
        rejections,
        bundle_iterations: 0,
        center: x_star,
        incumbent_value: value,
        regime: Regime::Prox,
    })
}

fn bundle_options(params: &RgoParams) -> BundleOptions {
    BundleOptions {
        cut_policy: params.cut_policy,
        ..Default::default()
    }
}

fn h1_from_bundle(eta_mu: f64, delta: f64, r: &BundleResult) -> Envelope {
    Envelope {
        center: r.x_j.clone(),
        inv_width: 1.0 / eta_mu,
        linear_coeff: 0.0,
        offset: r.incumbent_value - delta,
    }
}

fn bundle_rgo(
    p: &RegularizedProblem,
    y: &[f64],
    params: &RgoParams,
    rng: &mut RngStream,
    regime: Regime,
) -> Result<RgoOutcome> {
    if params.delta == 0.0 {
        if p.potential().has_prox() {
            let mut out = rgo_exact(p, y, params, rng)?;
            out.regime = regime;
            return Ok(out);
        }
        return Err(Error::InvalidArgument(
            "delta = 0 requires a proximal map; use delta > 0".into(),
        ));
    }
    let r = run_pbs_with(p, y, params.eta, params.delta, &bundle_options(params))?;
    let h1 = h1_from_bundle(params.eta_mu(p.mu()), params.delta, &r);
    let (sample, rejections) = rejection_loop(p, y, params.eta, &h1, rng)?;
    Ok(RgoOutcome {
        sample,
        rejections,
        bundle_iterations: r.iterations,
        center: r.x_j,
        incumbent_value: r.incumbent_value,
        regime,
    })
}

/// RGO for Lipschitz `f` without a proximal map: bundle solve, then
/// rejection sampling around the model minimizer `x_j`.
pub fn rgo_bundle(
    p: &RegularizedProblem,
    y: &[f64],
    params: &RgoParams,
    rng: &mut RngStream,
) -> Result<RgoOutcome> {
    check_call(p, y)?;
    if p.potential().lipschitz().is_none() {
        return Err(Error::MissingLipschitz);
    }
    bundle_rgo(p, y, params, rng, Regime::Bundle)
}

/// Same mechanism as [`rgo_bundle`], valid for `L`-smooth `f` when
/// `eta_mu <= 1/(L d)`.
pub fn rgo_smooth(
    p: &RegularizedProblem,
    y: &[f64],
    params: &RgoParams,
    rng: &mut RngStream,
) -> Result<RgoOutcome> {
    check_call(p, y)?;
    let l = p
        .potential()
        .smoothness()
        .ok_or_else(|| Error::NoRgoPath("smooth RGO needs a smoothness constant L".into()))?;
    if !smooth_window_ok(params.eta_mu(p.mu()), l, p.dim()) {
        return Err(Error::InfeasibleWindow(format!(
            "smooth RGO needs eta_mu <= 1/(L d) = {:e}, got {:e}",
            1.0 / (l * p.dim() as f64),
            params.eta_mu(p.mu())
        )));
    }
    bundle_rgo(p, y, params, rng, Regime::Smooth)
}

pub(crate) fn smooth_window_ok(eta_mu: f64, l: f64, d: usize) -> bool {
    eta_mu * l * d as f64 <= 1.0 + 1e-12
}

/// Gradient descent on `g^eta` from `start`. `g^eta` is
/// `(1/eta_mu)`-strongly convex and `(1/eta_mu + L)`-smooth, so the fixed
/// step `1/(1/eta_mu + L)` contracts by `eta_mu L / (1 + eta_mu L)`.
fn refine_smooth_minimizer(p: &RegularizedProblem, y: &[f64], eta: f64, l: f64, start: &[f64]) -> Vec<f64> {
    let em = eta_mu(eta, p.mu());
    let step = 1.0 / (1.0 / em + l);
    let mut x = start.to_vec();
    for _ in 0..10_000 {
        let mut g = p.subgradient_g(&x);
        for ((gi, xi), yi) in g.iter_mut().zip(&x).zip(y) {
            *gi += (xi - yi) / eta;
        }
        let gn = norm(&g);
        if gn <= 1e-15 * (1.0 + norm(&x)) / em {
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
    }
    x
}

/// Lower and upper envelopes of `g^eta` for a terminated bundle run.
///
/// Non-smooth: `h1` around `x_j` with offset `g^eta(x_tilde) - delta`, and
/// `h2` around `x_tilde` with linear term `2M + sqrt(2 delta / eta_mu)`.
/// Smooth: the same `h1`, and `h2` around `x*` with inverse width
/// `1/eta_{mu,L}`. For the prox path pass a result with
/// `x_j = x_tilde = x*` and `delta = 0`.
pub fn envelopes(
    p: &RegularizedProblem,
    y: &[f64],
    params: &RgoParams,
    r: &BundleResult,
    regime: Regime,
) -> Result<(Envelope, Envelope)> {
    let f = p.potential();
    let em = params.eta_mu(p.mu());
    let h1 = h1_from_bundle(em, params.delta, r);
    let h2 = match regime {
        Regime::Prox | Regime::Bundle => {
            let m = f.lipschitz().ok_or(Error::MissingLipschitz)?;
            Envelope {
                center: r.x_tilde.clone(),
                inv_width: 1.0 / em,
                linear_coeff: 2.0 * m + (2.0 * params.delta / em).sqrt(),
                offset: r.incumbent_value,
            }
        }
        Regime::Smooth => {
            let l = f
                .smoothness()
                .ok_or_else(|| Error::NoRgoPath("smooth envelope needs L".into()))?;
            let x_star = if r.x_j == r.x_tilde && r.gap == 0.0 && params.delta == 0.0 {
                r.x_j.clone()
            } else {
                refine_smooth_minimizer(p, y, params.eta, l, &r.x_tilde)
            };
            let value = p.eval_g_eta(y, params.eta, &x_star);
            Envelope {
                center: x_star,
                inv_width: 1.0 / eta_mu_l(params.eta, p.mu(), l),
                linear_coeff: 0.0,
                offset: value,
            }
        }
    };
    Ok((h1, h2))
}

/// Bundle-shaped result for the prox path (`x_j = x_tilde = x*`, zero gap).
pub fn exact_bundle_result(p: &RegularizedProblem, y: &[f64], eta: f64) -> Result<BundleResult> {
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

/// Acceptance log-ratio `h1(x_j) - g^eta(x_j)` at the proposal center.
pub fn center_log_ratio(p: &RegularizedProblem, y: &[f64], params: &RgoParams, r: &BundleResult) -> f64 {
    let h1 = h1_from_bundle(params.eta_mu(p.mu()), params.delta, r);
    h1.eval(&r.x_j) - p.eval_g_eta(y, params.eta, &r.x_j)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::bundle::run_pbs;
    use crate::potential::{builtin_potential, BuiltinPotential, Potential};

    fn pot(spec: BuiltinPotential) -> Arc<dyn Potential> {
        builtin_potential(&spec).unwrap()
    }

    #[test]
    fn zero_potential_always_accepts() {
        let p = RegularizedProblem::new(pot(BuiltinPotential::Zero { dim: 3 }), 0.5, vec![1.0, 0.0, -1.0]).unwrap();
        // bundle acceptance is exp(-delta) here, so delta must be negligible
        let params = RgoParams::new(0.7, 1e-12).unwrap();
        let mut rng = RngStream::new(3);
        for _ in 0..500 {
            assert_eq!(rgo_exact(&p, &[0.2, 0.3, 0.4], &params, &mut rng).unwrap().rejections, 0);
            assert_eq!(rgo_bundle(&p, &[0.2, 0.3, 0.4], &params, &mut rng).unwrap().rejections, 0);
            assert_eq!(rgo_smooth(&p, &[0.2, 0.3, 0.4], &RgoParams::new(0.7, 1e-8).unwrap(), &mut rng).unwrap().rejections, 0);
        }
    }

    #[test]
    fn exact_center_is_soft_threshold() {
        let p = RegularizedProblem::plain(pot(BuiltinPotential::L1 { dim: 1, m: 1.0 }));
        let params = RgoParams::new(1.0, 0.0).unwrap();
        let out = rgo_exact(&p, &[3.0], &params, &mut RngStream::new(1)).unwrap();
        assert_eq!(out.center, vec![2.0]);
        assert_eq!(out.bundle_iterations, 0);
    }

    #[test]
    fn bundle_log_ratio_at_center_is_nonpositive() {
        let p = RegularizedProblem::new(
            pot(BuiltinPotential::MaxAffine {
                rows: vec![vec![1.0, 0.5], vec![-1.0, 0.2], vec![0.0, -1.0]],
                offsets: vec![0.0, 0.3, -0.1],
            }),
            0.3,
            vec![0.1, -0.2],
        )
        .unwrap();
        let mut rng = RngStream::new(11);
        for _ in 0..200 {
            let y = vec![3.0 * rng.normal(), 3.0 * rng.normal()];
            let params = RgoParams::new(0.01 + rng.uniform(), 1e-3 + 0.1 * rng.uniform()).unwrap();
            let r = run_pbs(&p, &y, params.eta, params.delta).unwrap();
            assert!(center_log_ratio(&p, &y, &params, &r) <= 1e-12);
        }
    }

    #[test]
    fn envelope_centers() {
        let p = RegularizedProblem::new(pot(BuiltinPotential::L2norm { dim: 2, m: 1.5 }), 0.2, vec![0.0, 1.0]).unwrap();
        let y = [0.4, -0.3];
        let params = RgoParams::new(0.05, 0.01).unwrap();
        let r = run_pbs(&p, &y, params.eta, params.delta).unwrap();
        let (h1, h2) = envelopes(&p, &y, &params, &r, Regime::Bundle).unwrap();
        assert!((h1.eval(&r.x_j) - (r.incumbent_value - params.delta)).abs() < 1e-14);
        assert!((h2.eval(&r.x_tilde) - r.incumbent_value).abs() < 1e-14);

        // delta = 0 on the prox path reduces to the plain 2M envelope.
        let params0 = RgoParams::new(0.05, 0.0).unwrap();
        let r0 = exact_bundle_result(&p, &y, params0.eta).unwrap();
        let (h1, h2) = envelopes(&p, &y, &params0, &r0, Regime::Prox).unwrap();
        assert_eq!(h2.linear_coeff, 3.0);
        assert_eq!(h1.center, h2.center);
        assert_eq!(h1.offset, h2.offset);
    }

    #[test]
    fn smooth_requires_window() {
        let p = RegularizedProblem::plain(pot(BuiltinPotential::Quadratic {
            dim: 1,
            matrix: vec![4.0],
        }));
        let bad = RgoParams::new(1.0, 1e-6).unwrap();
        assert!(matches!(
            rgo_smooth(&p, &[0.0], &bad, &mut RngStream::new(0)),
            Err(Error::InfeasibleWindow(_))
        ));
        assert_eq!(
            rgo_bundle(&p, &[0.0], &RgoParams::new(0.25, 1e-6).unwrap(), &mut RngStream::new(0)).unwrap_err(),
            Error::MissingLipschitz
        );
    }
}
