use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use proxsample::asf::{
    init_at_minimizer, minimize_g, regularization_for, run_chain_from, run_chains_from, select_regime,
    MinimizeOptions, Schedule, Window,
};
use proxsample::diagnostics::{
    audit_rejections, check_integral_bound, exact_cdf_1d, fuzz_envelopes, ks_test, radial_integral, FuzzOptions,
};
use proxsample::{builtin_potential, BuiltinPotential, Error, Potential, Regime, RegularizedProblem, RgoStats, RngStream};
use serde_json::{json, Value};

use crate::config::{ConfigError, Mode, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER_CAP: i32 = 3;

/// Largest envelope violation `verify` tolerates.
pub const ENVELOPE_TOL: f64 = 1e-8;
const DEFAULT_EPS: f64 = 0.1;
const DEFAULT_SMOOTH_DELTA: f64 = 1e-6;
const QUADRATURE_CELLS: usize = 400;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Solver(Error),
    Io(PathBuf, io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(..) => EXIT_CONFIG,
            CliError::Solver(e) => match e {
                Error::BundleCapExceeded { .. }
                | Error::QpNotConverged { .. }
                | Error::RejectionCapExceeded { .. }
                | Error::CertificationFailed { .. } => EXIT_SOLVER_CAP,
                _ => EXIT_CONFIG,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Solver(e) => write!(f, "solver: {e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Solver(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Target, regularized problem and schedule resolved from a config.
pub struct Resolved {
    pub problem: RegularizedProblem,
    pub schedule: Schedule,
    pub mode: Mode,
}

/// Config key a library error most likely refers to.
fn key_for(msg: &str) -> &'static str {
    let first = msg.split_whitespace().next().unwrap_or("");
    match first {
        "eta" => "schedule.eta",
        "delta" => "schedule.delta",
        "eps" => "schedule.eps",
        "c_T" => "schedule.c_T",
        "thinning" => "schedule.thinning",
        "M4" => "schedule.m4",
        "mu" => "target.mu",
        "M" => "target.M",
        _ => "schedule.mode",
    }
}

fn schedule_error(cfg: &RunConfig, e: Error) -> CliError {
    match &e {
        Error::InvalidArgument(msg) | Error::InfeasibleWindow(msg) => {
            CliError::Config(cfg.error(key_for(msg), e.to_string()))
        }
        Error::DimensionMismatch { .. } => CliError::Config(cfg.error("schedule.x_min", e.to_string())),
        _ => CliError::Solver(e),
    }
}

pub fn build_potential(cfg: &RunConfig) -> CliResult<Arc<dyn Potential>> {
    builtin_potential(&cfg.target.potential).map_err(|e| {
        let key = match (&cfg.target.potential, &e) {
            (BuiltinPotential::Quadratic { .. }, _) => "target.matrix",
            (BuiltinPotential::MaxAffine { .. }, _) => "target.rows",
            (_, Error::InvalidArgument(m)) if m.starts_with("dimension") => "target.dim",
            (BuiltinPotential::Huber { .. }, Error::InvalidArgument(m)) if m.contains("threshold") => {
                "target.threshold"
            }
            _ => "target.M",
        };
        CliError::Config(cfg.error(key, e.to_string()))
    })
}

fn require_mu(cfg: &RunConfig, mode: Mode) -> CliResult<f64> {
    cfg.target
        .mu
        .ok_or_else(|| CliError::Config(cfg.error("target.mu", format!("missing key (mode {} needs mu)", mode.name()))))
}

fn positive_lipschitz(f: &dyn Potential) -> Option<f64> {
    f.lipschitz().filter(|m| *m > 0.0)
}

/// Builds the problem and the schedule, re-checking every stepsize window.
pub fn resolve(cfg: &RunConfig) -> CliResult<Resolved> {
    let f = build_potential(cfg)?;
    let d = f.dim();
    let x0 = cfg.target.x0.clone().unwrap_or_else(|| vec![0.0; d]);
    if x0.len() != d {
        return Err(cfg.error("target.x0", format!("expected {d} coordinates, got {}", x0.len())).into());
    }
    let s = &cfg.schedule;
    let mode = match s.mode {
        Some(m) => m,
        None if positive_lipschitz(f.as_ref()).is_some() => Mode::StronglyConvex,
        None if f.smoothness().is_some() => Mode::Smooth,
        None => {
            return Err(cfg
                .error("target.M", "missing key (no Lipschitz or smoothness constant for the default schedule)")
                .into())
        }
    };
    let eps = s.eps.unwrap_or(DEFAULT_EPS);
    let reject = |key: &str, present: bool| -> CliResult<()> {
        if present {
            return Err(cfg.error(key, format!("not allowed in mode {}", mode.name())).into());
        }
        Ok(())
    };
    let need_m = || {
        positive_lipschitz(f.as_ref()).ok_or_else(|| {
            CliError::Config(cfg.error(
                "target.M",
                format!("missing key (mode {} needs a Lipschitz constant M > 0)", mode.name()),
            ))
        })
    };

    let (mu, schedule) = match mode {
        Mode::StronglyConvex => {
            let mu = require_mu(cfg, mode)?;
            let m = need_m()?;
            let sched = match s.eta {
                None => Schedule::strongly_convex(d, eps, mu, m, s.delta),
                Some(eta) => Schedule::manual(
                    eta,
                    mu,
                    s.delta.unwrap_or(1.0 / (64.0 * d as f64)),
                    eps,
                    None,
                    Window::NonSmooth { lipschitz: m, dim: d },
                ),
            };
            (mu, sched.map_err(|e| schedule_error(cfg, e))?)
        }
        Mode::Convex => {
            reject("target.mu", cfg.target.mu.is_some())?;
            reject("schedule.eta", s.eta.is_some())?;
            reject("schedule.delta", s.delta.is_some())?;
            let m = need_m()?;
            let m4 = s
                .m4
                .ok_or_else(|| CliError::Config(cfg.error("schedule.m4", "missing key (mode convex needs m4)")))?;
            let x_min = s
                .x_min
                .clone()
                .ok_or_else(|| CliError::Config(cfg.error("schedule.x_min", "missing key (mode convex needs x_min)")))?;
            let mu = regularization_for(eps, m4, &x0, &x_min).map_err(|e| schedule_error(cfg, e))?;
            let sched = Schedule::convex(d, eps, m, m4, &x0, &x_min).map_err(|e| schedule_error(cfg, e))?;
            (mu, sched)
        }
        Mode::Smooth => {
            let mu = require_mu(cfg, mode)?;
            let l = f.smoothness().ok_or_else(|| {
                CliError::Config(cfg.error(
                    "target.kind",
                    format!("kind {} has no smoothness constant", cfg.target.potential.kind_name()),
                ))
            })?;
            let sched = Schedule::smooth(d, eps, mu, l, s.eta, s.delta.unwrap_or(DEFAULT_SMOOTH_DELTA))
                .map_err(|e| schedule_error(cfg, e))?;
            (mu, sched)
        }
        Mode::Manual => {
            let mu = require_mu(cfg, mode)?;
            let eta = s
                .eta
                .ok_or_else(|| CliError::Config(cfg.error("schedule.eta", "missing key (mode manual needs eta)")))?;
            let delta = s
                .delta
                .ok_or_else(|| CliError::Config(cfg.error("schedule.delta", "missing key (mode manual needs delta)")))?;
            let window = match (positive_lipschitz(f.as_ref()), f.smoothness()) {
                (_, Some(l)) if eta * l * d as f64 <= 1.0 => Window::Smooth { smoothness: l, dim: d },
                (Some(m), _) => Window::NonSmooth { lipschitz: m, dim: d },
                (None, Some(l)) => Window::Smooth { smoothness: l, dim: d },
                (None, None) => return Err(need_m().unwrap_err()),
            };
            (
                mu,
                Schedule::manual(eta, mu, delta, eps, None, window).map_err(|e| schedule_error(cfg, e))?,
            )
        }
    };
    let mut schedule = schedule;
    if let Some(c) = s.c_t {
        schedule = schedule.with_c_t(c).map_err(|e| schedule_error(cfg, e))?;
    }
    if let Some(t) = s.burn_in {
        schedule = schedule.with_burn_in(t);
    }
    if let Some(t) = s.thinning {
        schedule = schedule.with_thinning(t).map_err(|e| schedule_error(cfg, e))?;
    }
    if let Some(p) = s.cut_policy {
        schedule = schedule.with_cut_policy(p);
    }
    let problem = RegularizedProblem::new(f, mu, x0).map_err(|e| CliError::Config(cfg.error("target.mu", e.to_string())))?;
    select_regime(&problem, &schedule.rgo_params()).map_err(|e| CliError::Config(cfg.error("target.kind", e.to_string())))?;
    Ok(Resolved { problem, schedule, mode })
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
        }
    }
    fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values always serialize");
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// One sample per line, coordinates comma separated, 17 significant digits.
pub fn format_samples<'a>(samples: impl IntoIterator<Item = &'a Vec<f64>>) -> String {
    let mut out = String::new();
    for s in samples {
        let line: Vec<String> = s.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn stats_json(stats: &[RgoStats]) -> Value {
    let calls = stats.len();
    let n = calls.max(1) as f64;
    json!({
        "calls": calls,
        "mean_trials": stats.iter().map(|s| (s.rejections + 1) as f64).sum::<f64>() / n,
        "max_trials": stats.iter().map(|s| s.rejections + 1).max().unwrap_or(0),
        "mean_bundle_iterations": stats.iter().map(|s| s.bundle_iterations as f64).sum::<f64>() / n,
        "max_bundle_iterations": stats.iter().map(|s| s.bundle_iterations).max().unwrap_or(0),
    })
}

fn target_json(cfg: &RunConfig, r: &Resolved) -> Value {
    json!({
        "kind": cfg.target.potential.kind_name(),
        "dim": r.problem.dim(),
        "mu": r.problem.mu(),
        "x0": r.problem.x0(),
    })
}

pub struct SampleOutcome {
    pub samples_path: Option<PathBuf>,
    pub summary_path: PathBuf,
}

pub fn cmd_sample(cfg: &RunConfig, out_dir: &Path) -> CliResult<SampleOutcome> {
    let start = Instant::now();
    let r = resolve(cfg)?;
    let regime = select_regime(&r.problem, &r.schedule.rgo_params())?;
    let init = init_at_minimizer(&r.problem, &r.schedule)?;
    let rng = RngStream::new(cfg.run.seed);
    let chains = run_chains_from(&r.problem, &r.schedule, cfg.run.n_samples, cfg.run.chains, &rng, &init.x)?;

    let samples_path = if cfg.run.n_samples > 0 {
        let path = out_dir.join(&cfg.output.samples);
        write_file(&path, format_samples(chains.iter().flat_map(|c| &c.samples)).as_bytes())?;
        Some(path)
    } else {
        None
    };
    let stats: Vec<RgoStats> = chains.iter().flat_map(|c| c.rgo_stats.iter().copied()).collect();
    let summary = json!({
        "command": "sample",
        "seed": cfg.run.seed,
        "n_samples": cfg.run.n_samples,
        "chains": cfg.run.chains,
        "mode": r.mode.name(),
        "regime": regime.name(),
        "target": target_json(cfg, &r),
        "schedule": r.schedule,
        "burn_in": r.schedule.burn_in(),
        "init": init,
        "rgo": stats_json(&stats),
        "samples_file": samples_path.as_ref().map(|_| cfg.output.samples.clone()),
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let summary_path = out_dir.join(&cfg.output.summary);
    write_json(&summary_path, &summary)?;
    Ok(SampleOutcome {
        samples_path,
        summary_path,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    pub corrupt_envelope: bool,
}

fn status(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn not_applicable(suite: &str, reason: impl Into<String>) -> Value {
    json!({"suite": suite, "status": "not_applicable", "reason": reason.into()})
}

fn verify_envelopes(r: &Resolved, trials: usize, rng: &RngStream, opts: VerifyOptions) -> CliResult<Value> {
    let rep = fuzz_envelopes(
        &r.problem,
        trials,
        rng,
        FuzzOptions {
            corrupt_h1: opts.corrupt_envelope,
        },
    )?;
    Ok(json!({
        "suite": "envelopes",
        "status": status(rep.passes(ENVELOPE_TOL)),
        "tolerance": ENVELOPE_TOL,
        "report": rep,
    }))
}

/// The stepsize condition under which the regime's trial bound holds, or
/// the reason it does not apply.
fn audit_condition(r: &Resolved, regime: Regime) -> std::result::Result<(), String> {
    let f = r.problem.potential();
    let d = r.problem.dim() as f64;
    let params = r.schedule.rgo_params();
    let em = params.eta_mu(r.problem.mu());
    match regime {
        Regime::Prox => match f.lipschitz() {
            Some(m) if em * m * m * d <= 1.0 / 16.0 * (1.0 + 1e-12) => Ok(()),
            Some(_) => Err("eta_mu exceeds 1/(16 M^2 d)".into()),
            None => Err("prox bound needs a Lipschitz constant".into()),
        },
        Regime::Bundle => {
            let m = f.lipschitz().unwrap_or(f64::INFINITY);
            if em * m * m * d > 1.0 / 64.0 * (1.0 + 1e-12) {
                Err("eta_mu exceeds 1/(64 M^2 d)".into())
            } else if params.delta * 32.0 * d > 1.0 + 1e-12 {
                Err("delta exceeds 1/(32 d)".into())
            } else {
                Ok(())
            }
        }
        Regime::Smooth => Ok(()),
    }
}

fn verify_rejections(r: &Resolved, calls: usize, rng: &RngStream, init: &[f64]) -> CliResult<Value> {
    let regime = select_regime(&r.problem, &r.schedule.rgo_params())?;
    if let Err(reason) = audit_condition(r, regime) {
        return Ok(not_applicable("rejections", reason));
    }
    let sched = r.schedule.clone().with_burn_in(0).with_thinning(1)?;
    let chain = run_chain_from(&r.problem, &sched, calls, rng, init.to_vec())?;
    Ok(match audit_rejections(&chain.rgo_stats, regime, sched.delta()) {
        Ok(a) => json!({"suite": "rejections", "status": status(a.pass), "report": a}),
        Err(e) => json!({"suite": "rejections", "status": "fail", "reason": e.to_string()}),
    })
}

fn verify_integral(r: &Resolved) -> CliResult<Value> {
    let mut cases = Vec::new();
    for d in 1..=10 {
        for a in [0.5, 1.0, 4.0] {
            cases.push((d, a));
        }
    }
    if let Some(m) = positive_lipschitz(r.problem.potential()) {
        cases.push((r.problem.dim(), m));
    }
    let mut worst_ratio = f64::INFINITY;
    let mut pass = true;
    for (d, a) in cases {
        let b = check_integral_bound(d, a, 1.0 / (16.0 * a * a * d as f64))?;
        worst_ratio = worst_ratio.min(b.lhs / b.rhs);
        pass &= b.pass;
    }
    let mut worst_gauss: f64 = 0.0;
    for d in 1..=10 {
        let lam = 0.5;
        let exact = (2.0 * std::f64::consts::PI * lam).powf(d as f64 / 2.0);
        worst_gauss = worst_gauss.max((radial_integral(d, 0.0, lam) / exact - 1.0).abs());
    }
    pass &= worst_gauss <= 1e-9;
    Ok(json!({
        "suite": "integral",
        "status": status(pass),
        "min_lhs_over_rhs": worst_ratio,
        "gaussian_relative_error": worst_gauss,
    }))
}

fn verify_ks(r: &Resolved, n: usize, threshold: f64, rng: &RngStream, init: &[f64]) -> CliResult<Value> {
    if r.problem.dim() != 1 {
        return Ok(not_applicable(
            "ks",
            format!("quadrature oracle is one-dimensional, target has d = {}", r.problem.dim()),
        ));
    }
    if n == 0 {
        return Ok(not_applicable("ks", "ks_samples = 0"));
    }
    let q = exact_cdf_1d(&r.problem, QUADRATURE_CELLS)?;
    let chain = run_chain_from(&r.problem, &r.schedule, n, rng, init.to_vec())?;
    let xs: Vec<f64> = chain.samples.iter().map(|s| s[0]).collect();
    let rep = ks_test(&xs, &q, threshold);
    Ok(json!({"suite": "ks", "status": status(rep.pass), "report": rep}))
}

pub struct VerifyOutcome {
    pub pass: bool,
    pub report_path: PathBuf,
}

pub fn cmd_verify(cfg: &RunConfig, out_dir: &Path, opts: VerifyOptions) -> CliResult<VerifyOutcome> {
    let r = resolve(cfg)?;
    let root = RngStream::new(cfg.run.seed);
    let v = &cfg.verify;
    let wants = |s: &str| v.suites.iter().any(|x| x == s);
    let needs_init = wants("rejections") || (wants("ks") && r.problem.dim() == 1);
    let init = if needs_init {
        init_at_minimizer(&r.problem, &r.schedule)?.x
    } else {
        r.problem.x0().to_vec()
    };

    let mut suites = Vec::new();
    if wants("envelopes") {
        suites.push(verify_envelopes(&r, v.envelope_trials, &root.substream(0), opts)?);
    }
    if wants("rejections") {
        suites.push(verify_rejections(&r, v.audit_calls, &root.substream(1), &init)?);
    }
    if wants("integral") {
        suites.push(verify_integral(&r)?);
    }
    if wants("ks") {
        suites.push(verify_ks(&r, v.ks_samples, v.ks_threshold, &root.substream(2), &init)?);
    }
    let pass = suites.iter().all(|s| s["status"] != "fail");
    let report = json!({
        "command": "verify",
        "seed": cfg.run.seed,
        "pass": pass,
        "target": target_json(cfg, &r),
        "schedule": r.schedule,
        "corrupt_envelope": opts.corrupt_envelope,
        "suites": suites,
    });
    let report_path = out_dir.join("verify.json");
    write_json(&report_path, &report)?;
    Ok(VerifyOutcome { pass, report_path })
}

/// Problem for `minimize`: only the target section and `cut_policy` matter.
fn minimize_problem(cfg: &RunConfig) -> CliResult<RegularizedProblem> {
    let f = build_potential(cfg)?;
    let d = f.dim();
    let x0 = cfg.target.x0.clone().unwrap_or_else(|| vec![0.0; d]);
    if x0.len() != d {
        return Err(cfg.error("target.x0", format!("expected {d} coordinates, got {}", x0.len())).into());
    }
    let mu = match cfg.target.mu {
        Some(mu) if mu > 0.0 => mu,
        Some(_) => return Err(cfg.error("target.mu", "minimize needs mu > 0").into()),
        None => return Err(cfg.error("target.mu", "missing key (minimize needs mu > 0)").into()),
    };
    RegularizedProblem::new(f, mu, x0).map_err(|e| CliError::Config(cfg.error("target.mu", e.to_string())))
}

pub fn cmd_minimize(cfg: &RunConfig, out_dir: &Path, trace: bool) -> CliResult<PathBuf> {
    let p = minimize_problem(cfg)?;
    let opts = MinimizeOptions {
        cut_policy: cfg.schedule.cut_policy.unwrap_or_default(),
        trace,
        ..Default::default()
    };
    let rep = minimize_g(&p, &opts)?;
    if trace {
        let mut text = String::new();
        for row in &rep.trace {
            text.push_str(&row.to_string());
            text.push('\n');
        }
        write_file(&out_dir.join("trace.tsv"), text.as_bytes())?;
    }
    let path = out_dir.join("minimize.json");
    write_json(
        &path,
        &json!({
            "command": "minimize",
            "target": {
                "kind": cfg.target.potential.kind_name(),
                "dim": p.dim(),
                "mu": p.mu(),
                "x0": p.x0(),
            },
            "radius_sq": p.dim() as f64 / p.mu(),
            "result": rep,
        }),
    )?;
    Ok(path)
}

pub fn cmd_bench(cfg: &RunConfig, out_dir: &Path) -> CliResult<PathBuf> {
    let r = resolve(cfg)?;
    let init = init_at_minimizer(&r.problem, &r.schedule)?;
    let root = RngStream::new(cfg.run.seed);
    let mut text = String::from(
        "eta,delta,regime,calls,mean_trials,max_trials,mean_bundle_iterations,max_bundle_iterations,status\n",
    );
    let mut k = 0;
    for &es in &cfg.bench.eta_scales {
        for &ds in &cfg.bench.delta_scales {
            let eta = r.schedule.eta() * es;
            // delta moves with eta so that delta / M^2 <= eta keeps holding
            let delta = r.schedule.delta() * es * ds;
            let sched = Schedule::manual(eta, r.problem.mu(), delta, r.schedule.epsilon(), Some(0), r.schedule.window())
                .map(|s| s.with_cut_policy(r.schedule.cut_policy()));
            let row = match sched {
                Err(e) => format!("{eta:.6e},{delta:.6e},,0,,,,,infeasible: {}", csv_safe(&e.to_string())),
                Ok(s) => {
                    let regime = select_regime(&r.problem, &s.rgo_params())?;
                    let chain = run_chain_from(&r.problem, &s, cfg.bench.calls, &root.substream(k), init.x.clone())?;
                    let st = stats_json(&chain.rgo_stats);
                    format!(
                        "{eta:.6e},{delta:.6e},{},{},{:.6e},{},{:.6e},{},ok",
                        regime.name(),
                        st["calls"],
                        st["mean_trials"].as_f64().unwrap_or(0.0),
                        st["max_trials"],
                        st["mean_bundle_iterations"].as_f64().unwrap_or(0.0),
                        st["max_bundle_iterations"],
                    )
                }
            };
            text.push_str(&row);
            text.push('\n');
            k += 1;
        }
    }
    let path = out_dir.join("bench.csv");
    write_file(&path, text.as_bytes())?;
    Ok(path)
}

fn csv_safe(s: &str) -> String {
    s.replace(',', ";")
}

/// Writes `msg` to stderr, ignoring a closed pipe.
pub fn report_error(err: &dyn fmt::Display) {
    let _ = writeln!(io::stderr(), "error: {err}");
}
