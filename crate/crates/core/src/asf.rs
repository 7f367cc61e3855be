//! The alternating sampling chain: `y ~ N(x, eta I)`, then `x ~ RGO(y)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::{run_pbs_with, BundleOptions, TraceRow};
use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::problem::{eta_mu, CutPolicy, RegularizedProblem, RgoParams};
use crate::rgo::{rgo_bundle, rgo_exact, rgo_smooth, smooth_window_ok, Regime, RgoOutcome, RgoStats};
use crate::rng::RngStream;

/// Constant in `T = c_T / (eta mu) * log(d / (eta mu eps))`.
pub const DEFAULT_C_T: f64 = 2.0;
/// Proximal steps without halving the distance bound before a certified
/// minimizer is accepted.
pub const STALL_STEPS: usize = 5;

/// Which stepsize window a schedule was validated against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    /// `delta / M^2 <= eta <= min(1/(64 M^2 d), 1/mu)`.
    NonSmooth { lipschitz: f64, dim: usize },
    /// `eta <= min(1/(L d), 1/mu)`.
    Smooth { smoothness: f64, dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    eta: f64,
    mu: f64,
    delta: f64,
    burn_in: usize,
    epsilon: f64,
    c_t: f64,
    thinning: usize,
    cut_policy: CutPolicy,
    window: Window,
}

/// Unrounded outer iteration count.
pub fn outer_iterations(eta: f64, mu: f64, d: usize, eps: f64, c_t: f64) -> f64 {
    let em = eta * mu;
    c_t / em * (d as f64 / (em * eps)).ln()
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn check_window(eta: f64, mu: f64, delta: f64, window: Window) -> Result<()> {
    check_positive("eta", eta)?;
    check_positive("mu", mu)?;
    // slack for values computed as exact window endpoints
    let slack = 1.0 + 1e-12;
    if eta > slack / mu {
        return Err(Error::InfeasibleWindow(format!("eta = {eta:e} exceeds 1/mu = {:e}", 1.0 / mu)));
    }
    match window {
        Window::NonSmooth { lipschitz: m, dim } => {
            check_positive("M", m)?;
            check_positive("delta", delta)?;
            let upper = 1.0 / (64.0 * m * m * dim as f64);
            if eta > upper * slack {
                return Err(Error::InfeasibleWindow(format!(
                    "eta = {eta:e} exceeds 1/(64 M^2 d) = {upper:e}"
                )));
            }
            if delta / (m * m) > eta * slack {
                return Err(Error::InfeasibleWindow(format!(
                    "delta / M^2 = {:e} exceeds eta = {eta:e}",
                    delta / (m * m)
                )));
            }
        }
        Window::Smooth { smoothness: l, dim } => {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::InvalidArgument(format!("L must be nonnegative, got {l}")));
            }
            if !(delta.is_finite() && delta >= 0.0) {
                return Err(Error::InvalidArgument(format!("delta must be nonnegative, got {delta}")));
            }
            if eta * l * dim as f64 > slack {
                return Err(Error::InfeasibleWindow(format!(
                    "eta = {eta:e} exceeds 1/(L d) = {:e}",
                    1.0 / (l * dim as f64)
                )));
            }
        }
    }
    Ok(())
}

impl Schedule {
    /// Largest legal stepsize for `mu`-strongly convex `g` with `M`-Lipschitz `f`.
    /// `delta` defaults to `1/(64 d)`.
    pub fn strongly_convex(d: usize, eps: f64, mu: f64, m: f64, delta: Option<f64>) -> Result<Self> {
        check_eps(eps)?;
        check_positive("mu", mu)?;
        check_positive("M", m)?;
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let delta = delta.unwrap_or(1.0 / (64.0 * d as f64));
        let eta = (1.0 / (64.0 * m * m * d as f64)).min(1.0 / mu);
        Self::build(eta, mu, delta, eps, DEFAULT_C_T, Window::NonSmooth { lipschitz: m, dim: d })
    }

    /// Regularized schedule for a merely convex `f`: picks
    /// `mu = eps / (sqrt(2) (sqrt(M4) + |x0 - x_min|^2))` and spends the
    /// remaining `eps/2` on the chain.
    pub fn convex(d: usize, eps: f64, m: f64, m4: f64, x0: &[f64], x_min: &[f64]) -> Result<Self> {
        let mu = regularization_for(eps, m4, x0, x_min)?;
        Self::strongly_convex(d, eps / 2.0, mu, m, None)
    }

    /// Smooth potentials: `eta` defaults to `min(1/(L d), 1/mu)`.
    pub fn smooth(d: usize, eps: f64, mu: f64, l: f64, eta: Option<f64>, delta: f64) -> Result<Self> {
        check_eps(eps)?;
        check_positive("mu", mu)?;
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let cap = if l > 0.0 { 1.0 / (l * d as f64) } else { f64::INFINITY };
        let eta = eta.unwrap_or(cap.min(1.0 / mu));
        Self::build(eta, mu, delta, eps, DEFAULT_C_T, Window::Smooth { smoothness: l, dim: d })
    }

    /// Fully explicit schedule; still validated against `window`.
    /// `burn_in` overrides the computed outer iteration count.
    pub fn manual(
        eta: f64,
        mu: f64,
        delta: f64,
        eps: f64,
        burn_in: Option<usize>,
        window: Window,
    ) -> Result<Self> {
        check_eps(eps)?;
        let mut s = Self::build(eta, mu, delta, eps, DEFAULT_C_T, window)?;
        if let Some(t) = burn_in {
            s.burn_in = t;
        }
        Ok(s)
    }

    fn build(eta: f64, mu: f64, delta: f64, eps: f64, c_t: f64, window: Window) -> Result<Self> {
        check_window(eta, mu, delta, window)?;
        let dim = match window {
            Window::NonSmooth { dim, .. } | Window::Smooth { dim, .. } => dim,
        };
        Ok(Self {
            eta,
            mu,
            delta,
            burn_in: burn_in_for(eta, mu, dim, eps, c_t),
            epsilon: eps,
            c_t,
            thinning: 1,
            cut_policy: CutPolicy::Minimal,
            window,
        })
    }

    /// Recomputes the burn-in with a different `c_T`.
    pub fn with_c_t(mut self, c_t: f64) -> Result<Self> {
        check_positive("c_T", c_t)?;
        self.c_t = c_t;
        self.burn_in = burn_in_for(self.eta, self.mu, self.dim(), self.epsilon, c_t);
        Ok(self)
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_thinning(mut self, thinning: usize) -> Result<Self> {
        if thinning == 0 {
            return Err(Error::InvalidArgument("thinning must be at least 1".into()));
        }
        self.thinning = thinning;
        Ok(self)
    }

    pub fn with_cut_policy(mut self, policy: CutPolicy) -> Self {
        self.cut_policy = policy;
        self
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn burn_in(&self) -> usize {
        self.burn_in
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn c_t(&self) -> f64 {
        self.c_t
    }
    pub fn thinning(&self) -> usize {
        self.thinning
    }
    pub fn cut_policy(&self) -> CutPolicy {
        self.cut_policy
    }
    pub fn window(&self) -> Window {
        self.window
    }
    pub fn dim(&self) -> usize {
        match self.window {
            Window::NonSmooth { dim, .. } | Window::Smooth { dim, .. } => dim,
        }
    }

    pub fn rgo_params(&self) -> RgoParams {
        RgoParams {
            eta: self.eta,
            delta: self.delta,
            cut_policy: self.cut_policy,
        }
    }
}

fn burn_in_for(eta: f64, mu: f64, d: usize, eps: f64, c_t: f64) -> usize {
    outer_iterations(eta, mu, d, eps, c_t).ceil().max(1.0) as usize
}

/// `eps / (sqrt(2) (sqrt(M4) + |x0 - x_min|^2))`.
pub fn regularization_for(eps: f64, m4: f64, x0: &[f64], x_min: &[f64]) -> Result<f64> {
    if !(m4.is_finite() && m4 > 0.0) {
        return Err(Error::InvalidArgument(format!("M4 must be positive, got {m4}")));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if x0.len() != x_min.len() {
        return Err(Error::DimensionMismatch {
            expected: x0.len(),
            got: x_min.len(),
        });
    }
    let r = dist(x0, x_min);
    Ok(eps / (std::f64::consts::SQRT_2 * (m4.sqrt() + r * r)))
}

/// Picks the RGO implementation: prox when available, else the smooth path
/// inside its window, else the bundle path.
pub fn select_regime(p: &RegularizedProblem, params: &RgoParams) -> Result<Regime> {
    let f = p.potential();
    if f.has_prox() {
        return Ok(Regime::Prox);
    }
    if let Some(l) = f.smoothness() {
        if smooth_window_ok(eta_mu(params.eta, p.mu()), l, p.dim()) {
            return Ok(Regime::Smooth);
        }
    }
    if f.lipschitz().is_some() {
        return Ok(Regime::Bundle);
    }
    Err(Error::NoRgoPath(
        "potential has no prox, no Lipschitz constant, and eta_mu exceeds 1/(L d)".into(),
    ))
}

pub fn rgo_dispatch(
    p: &RegularizedProblem,
    y: &[f64],
    params: &RgoParams,
    rng: &mut RngStream,
) -> Result<RgoOutcome> {
    match select_regime(p, params)? {
        Regime::Prox => rgo_exact(p, y, params, rng),
        Regime::Smooth => rgo_smooth(p, y, params, rng),
        Regime::Bundle => rgo_bundle(p, y, params, rng),
    }
}

/// One outer iteration. `rng` should be a substream owned by this step.
pub fn asf_step(
    p: &RegularizedProblem,
    x: &[f64],
    sched: &Schedule,
    rng: &RngStream,
) -> Result<(Vec<f64>, RgoOutcome)> {
    p.check_point(x)?;
    let sd = sched.eta.sqrt();
    let mut gauss = rng.substream(0);
    let y: Vec<f64> = x.iter().map(|xi| xi + sd * gauss.normal()).collect();
    let mut oracle_rng = rng.substream(1);
    let out = rgo_dispatch(p, &y, &sched.rgo_params(), &mut oracle_rng)?;
    Ok((out.sample.clone(), out))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Proximal-point stepsize; defaults to `1/mu`.
    pub eta: Option<f64>,
    /// Stop once the certified distance to the minimizer is below this.
    pub tol: f64,
    pub max_steps: usize,
    pub cut_policy: CutPolicy,
    pub trace: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            eta: None,
            tol: 1e-9,
            max_steps: 500,
            cut_policy: CutPolicy::Minimal,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizerReport {
    pub x: Vec<f64>,
    /// Certified upper bound on `|x - x_opt|`.
    pub distance_bound: f64,
    /// `distance_bound^2 <= d / mu`.
    pub certified: bool,
    pub prox_steps: usize,
    pub bundle_iterations: usize,
    pub objective: f64,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

/// Approximately minimizes `g` by proximal-point steps, each solved by the
/// bundle method (or by the prox map when `f` has one). Strong convexity
/// turns two residuals into distance bounds:
///
/// - any `v` in `dg(x)` gives `|x - x_opt| <= |v| / mu`;
/// - an inexact step from `x` to `x_tilde` with gap `e` gives
///   `|x_tilde - x_opt| <= s + (|x - x_tilde| + s) / (eta mu)`, `s = sqrt(2 eta_mu e)`.
pub fn init_at_minimizer(p: &RegularizedProblem, sched: &Schedule) -> Result<MinimizerReport> {
    minimize_g(
        p,
        &MinimizeOptions {
            cut_policy: sched.cut_policy,
            ..Default::default()
        },
    )
}

pub fn minimize_g(p: &RegularizedProblem, opts: &MinimizeOptions) -> Result<MinimizerReport> {
    let mu = p.mu();
    check_positive("mu", mu)?;
    let d = p.dim();
    let radius_sq = d as f64 / mu;
    let f = p.potential();

    let mut x = p.x0().to_vec();
    let mut bound = norm(&p.subgradient_g(&x)) / mu;
    let mut report = MinimizerReport {
        x: x.clone(),
        distance_bound: bound,
        certified: bound * bound <= radius_sq,
        prox_steps: 0,
        bundle_iterations: 0,
        objective: p.eval_g(&x),
        trace: Vec::new(),
    };
    if bound <= opts.tol {
        return Ok(report);
    }

    let eta = opts.eta.unwrap_or(1.0 / mu);
    check_positive("eta", eta)?;
    let em = eta_mu(eta, mu);
    let use_prox = f.has_prox();
    // First tolerance keeps the gap term of the certificate under half the radius.
    let mut delta = radius_sq / (8.0 * em * (1.0 + 1.0 / (eta * mu)).powi(2));
    let bundle_opts = BundleOptions {
        cut_policy: opts.cut_policy,
        trace: opts.trace,
        cap: None,
    };

    let mut best = bound;
    let mut stalled = 0;
    for step in 1..=opts.max_steps {
        let r = run_pbs_with(p, &x, eta, if use_prox { 0.0 } else { delta }, &bundle_opts)?;
        report.bundle_iterations += r.iterations;
        report.trace.extend(r.trace.iter().copied());
        // gaps below rounding of g^eta carry no information
        let gap = r.gap.max(0.0) + 4.0 * f64::EPSILON * (1.0 + r.incumbent_value.abs());
        let s = (2.0 * em * gap).sqrt();
        let from_step = s + (dist(&x, &r.x_tilde) + s) / (eta * mu);
        let tilde_bound = from_step.min(norm(&p.subgradient_g(&r.x_tilde)) / mu);
        let model_bound = norm(&p.subgradient_g(&r.x_j)) / mu;
        (x, bound) = if model_bound < tilde_bound {
            (r.x_j, model_bound)
        } else {
            (r.x_tilde, tilde_bound)
        };
        delta = (delta * 0.1).max(1e-13 * (1.0 + r.incumbent_value.abs()));

        report.x.clone_from(&x);
        report.distance_bound = bound;
        report.certified = bound * bound <= radius_sq;
        report.prox_steps = step;
        report.objective = p.eval_g(&x);
        if bound <= opts.tol {
            return Ok(report);
        }
        // Near rounding level the bound stops shrinking; accept once certified.
        if bound < 0.5 * best {
            best = bound;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if report.certified && stalled >= STALL_STEPS {
            return Ok(report);
        }
    }
    if report.certified {
        Ok(report)
    } else {
        Err(Error::CertificationFailed {
            iterations: opts.max_steps,
            bound,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    /// Post-burn-in states, one per `thinning` outer iterations.
    pub samples: Vec<Vec<f64>>,
    /// One entry per outer iteration, burn-in included.
    pub rgo_stats: Vec<RgoStats>,
    pub burn_in: usize,
    pub schedule: Schedule,
    pub init_point: Vec<f64>,
}

impl ChainReport {
    pub fn mean_trials(&self) -> f64 {
        if self.rgo_stats.is_empty() {
            return 0.0;
        }
        self.rgo_stats.iter().map(|s| (s.rejections + 1) as f64).sum::<f64>() / self.rgo_stats.len() as f64
    }

    pub fn mean_bundle_iterations(&self) -> f64 {
        if self.rgo_stats.is_empty() {
            return 0.0;
        }
        self.rgo_stats.iter().map(|s| s.bundle_iterations as f64).sum::<f64>() / self.rgo_stats.len() as f64
    }
}

/// Runs one chain: minimizer init, `T` burn-in steps, then `n_samples`
/// recorded states. Step `k` uses `rng.substream(k)`.
pub fn run_chain(p: &RegularizedProblem, sched: &Schedule, n_samples: usize, rng: &RngStream) -> Result<ChainReport> {
    let init = init_at_minimizer(p, sched)?;
    run_chain_from(p, sched, n_samples, rng, init.x)
}

/// Like [`run_chain`] but starting from a given point.
pub fn run_chain_from(
    p: &RegularizedProblem,
    sched: &Schedule,
    n_samples: usize,
    rng: &RngStream,
    init: Vec<f64>,
) -> Result<ChainReport> {
    if sched.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: sched.dim(),
        });
    }
    let total = sched.burn_in + n_samples * sched.thinning;
    let mut stats = Vec::with_capacity(total);
    let mut samples = Vec::with_capacity(n_samples);
    let mut x = init.clone();
    for k in 0..total {
        let (next, out) = asf_step(p, &x, sched, &rng.substream(k as u64))?;
        stats.push(RgoStats::from(&out));
        x = next;
        if k >= sched.burn_in && (k + 1 - sched.burn_in).is_multiple_of(sched.thinning) {
            samples.push(x.clone());
        }
    }
    Ok(ChainReport {
        samples,
        rgo_stats: stats,
        burn_in: sched.burn_in,
        schedule: sched.clone(),
        init_point: init,
    })
}

/// Independent chains on substreams `0..chains`; `n_samples` is split as
/// evenly as possible, earlier chains taking the remainder. Results are in
/// chain order regardless of scheduling.
pub fn run_chains(
    p: &RegularizedProblem,
    sched: &Schedule,
    n_samples: usize,
    chains: usize,
    rng: &RngStream,
) -> Result<Vec<ChainReport>> {
    let init = init_at_minimizer(p, sched)?;
    run_chains_from(p, sched, n_samples, chains, rng, &init.x)
}

/// Like [`run_chains`] with every chain starting at `init`.
pub fn run_chains_from(
    p: &RegularizedProblem,
    sched: &Schedule,
    n_samples: usize,
    chains: usize,
    rng: &RngStream,
    init: &[f64],
) -> Result<Vec<ChainReport>> {
    if chains == 0 {
        return Err(Error::InvalidArgument("need at least one chain".into()));
    }
    (0..chains)
        .into_par_iter()
        .map(|c| {
            let n = n_samples / chains + usize::from(c < n_samples % chains);
            run_chain_from(p, sched, n, &rng.substream(c as u64), init.to_vec())
        })
        .collect()
}
