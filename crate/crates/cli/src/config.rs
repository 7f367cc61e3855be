//! Run configuration: flat `key = value` text with `[section]` headers.
//!
//! ```text
//! [target]
//! kind = l1
//! dim = 1
//! M = 1
//! mu = 0.1
//!
//! [schedule]
//! eps = 0.1
//! thinning = 10
//!
//! [run]
//! seed = 42
//! n_samples = 1000
//! ```
//!
//! Lists are comma separated; matrix rows are separated by `;`.
//! `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use proxsample::{BuiltinPotential, CutPolicy};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(line: Option<usize>, key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line,
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config line {line}: `{}`: {}", self.key, self.message),
            None => write!(f, "config: `{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    StronglyConvex,
    Convex,
    Smooth,
    Manual,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::StronglyConvex => "strongly_convex",
            Mode::Convex => "convex",
            Mode::Smooth => "smooth",
            Mode::Manual => "manual",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "strongly_convex" => Mode::StronglyConvex,
            "convex" => Mode::Convex,
            "smooth" => Mode::Smooth,
            "manual" => Mode::Manual,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub potential: BuiltinPotential,
    pub mu: Option<f64>,
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScheduleSpec {
    pub mode: Option<Mode>,
    pub eps: Option<f64>,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub burn_in: Option<usize>,
    pub c_t: Option<f64>,
    pub cut_policy: Option<CutPolicy>,
    pub thinning: Option<usize>,
    pub m4: Option<f64>,
    pub x_min: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub seed: u64,
    pub n_samples: usize,
    pub chains: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_samples: 1000,
            chains: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySpec {
    pub suites: Vec<String>,
    pub envelope_trials: usize,
    pub audit_calls: usize,
    pub ks_samples: usize,
    pub ks_threshold: f64,
}

pub const SUITES: [&str; 4] = ["envelopes", "rejections", "integral", "ks"];

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            suites: SUITES.iter().map(|s| s.to_string()).collect(),
            envelope_trials: 2000,
            audit_calls: 10_000,
            ks_samples: 100_000,
            ks_threshold: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub eta_scales: Vec<f64>,
    pub delta_scales: Vec<f64>,
    pub calls: usize,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            eta_scales: vec![1.0, 0.5, 0.25],
            delta_scales: vec![1.0, 0.5, 0.25],
            calls: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub samples: String,
    pub summary: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            samples: "samples.csv".into(),
            summary: "summary.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub target: TargetSpec,
    pub schedule: ScheduleSpec,
    pub run: RunSpec,
    pub verify: VerifySpec,
    pub bench: BenchSpec,
    pub output: OutputSpec,
    /// Line of each `section.key`, for error messages.
    pub lines: BTreeMap<String, usize>,
}

const KEYS: &[(&str, &[&str])] = &[
    ("target", &["kind", "dim", "M", "threshold", "rows", "offsets", "matrix", "mu", "x0"]),
    (
        "schedule",
        &["mode", "eps", "eta", "delta", "T", "c_T", "cut_policy", "thinning", "m4", "x_min"],
    ),
    ("run", &["seed", "n_samples", "chains"]),
    ("verify", &["suites", "envelope_trials", "audit_calls", "ks_samples", "ks_threshold"]),
    ("bench", &["eta_scales", "delta_scales", "calls"]),
    ("output", &["samples", "summary"]),
];

struct Entry {
    value: String,
    line: usize,
}

struct Raw {
    entries: BTreeMap<(String, String), Entry>,
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn tokenize(text: &str) -> ConfigResult<Raw> {
    let mut entries = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw_line) in text.lines().enumerate() {
        let n = i + 1;
        let line = strip_comment(raw_line);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(Some(n), line, "unterminated section header"))?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::new(Some(n), name, "unknown section"));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(Some(n), line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .clone()
            .ok_or_else(|| ConfigError::new(Some(n), key, "key outside of any section"))?;
        let known = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !known.contains(&key) {
            return Err(ConfigError::new(Some(n), format!("{sec}.{key}"), "unknown key"));
        }
        if value.is_empty() {
            return Err(ConfigError::new(Some(n), format!("{sec}.{key}"), "empty value"));
        }
        let slot = (sec.clone(), key.to_string());
        if let Some(prev) = entries.get(&slot) {
            let prev: &Entry = prev;
            return Err(ConfigError::new(
                Some(n),
                format!("{sec}.{key}"),
                format!("duplicate key (first set on line {})", prev.line),
            ));
        }
        entries.insert(
            slot,
            Entry {
                value: value.to_string(),
                line: n,
            },
        );
    }
    Ok(Raw { entries })
}

impl Raw {
    fn get(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(sec.to_string(), key.to_string()))
    }

    fn err(&self, sec: &str, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::new(self.get(sec, key).map(|e| e.line), format!("{sec}.{key}"), msg)
    }

    fn parse<T>(&self, sec: &str, key: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> ConfigResult<Option<T>> {
        match self.get(sec, key) {
            None => Ok(None),
            Some(e) => f(&e.value)
                .map(Some)
                .ok_or_else(|| self.err(sec, key, format!("expected {what}, got `{}`", e.value))),
        }
    }

    fn real(&self, sec: &str, key: &str) -> ConfigResult<Option<f64>> {
        self.parse(sec, key, "a finite number", parse_real)
    }

    fn count(&self, sec: &str, key: &str) -> ConfigResult<Option<usize>> {
        self.parse(sec, key, "a nonnegative integer", |s| s.parse().ok())
    }

    fn list(&self, sec: &str, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        self.parse(sec, key, "a comma-separated list of numbers", parse_list)
    }

    fn matrix(&self, sec: &str, key: &str) -> ConfigResult<Option<Vec<Vec<f64>>>> {
        self.parse(sec, key, "rows of numbers separated by `;`", |s| {
            s.split(';').map(parse_list).collect()
        })
    }

    fn require<T>(&self, sec: &str, key: &str, v: Option<T>, why: &str) -> ConfigResult<T> {
        v.ok_or_else(|| ConfigError::new(None, format!("{sec}.{key}"), format!("missing key ({why})")))
    }
}

fn parse_real(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    let v: Option<Vec<f64>> = s.split(',').map(parse_real).collect();
    v.filter(|v| !v.is_empty())
}

fn parse_target(raw: &Raw) -> ConfigResult<TargetSpec> {
    let kind_entry = raw
        .get("target", "kind")
        .ok_or_else(|| ConfigError::new(None, "target.kind", "missing key"))?;
    let kind = kind_entry.value.as_str();
    let dim = raw.count("target", "dim")?;
    let m = raw.real("target", "M")?;
    let need_dim = |why| raw.require("target", "dim", dim, why);
    let need_m = || raw.require("target", "M", m, &format!("kind {kind} needs a Lipschitz constant"));
    let potential = match kind {
        "zero" => BuiltinPotential::Zero {
            dim: need_dim("kind zero")?,
        },
        "l1" => BuiltinPotential::L1 {
            dim: need_dim("kind l1")?,
            m: need_m()?,
        },
        "l2norm" => BuiltinPotential::L2norm {
            dim: need_dim("kind l2norm")?,
            m: need_m()?,
        },
        "huber" => BuiltinPotential::Huber {
            dim: need_dim("kind huber")?,
            m: need_m()?,
            threshold: raw.require("target", "threshold", raw.real("target", "threshold")?, "kind huber")?,
        },
        "max_affine" => {
            let rows = raw.require("target", "rows", raw.matrix("target", "rows")?, "kind max_affine")?;
            let offsets = raw
                .list("target", "offsets")?
                .unwrap_or_else(|| vec![0.0; rows.len()]);
            if offsets.len() != rows.len() {
                return Err(raw.err(
                    "target",
                    "offsets",
                    format!("{} offsets for {} rows", offsets.len(), rows.len()),
                ));
            }
            let d = rows[0].len();
            if rows.iter().any(|r| r.len() != d) {
                return Err(raw.err("target", "rows", "rows have different lengths"));
            }
            if let Some(dim) = dim {
                if dim != d {
                    return Err(raw.err("target", "dim", format!("dim = {dim} but rows have length {d}")));
                }
            }
            BuiltinPotential::MaxAffine { rows, offsets }
        }
        "quadratic" => {
            let rows = raw.require("target", "matrix", raw.matrix("target", "matrix")?, "kind quadratic")?;
            let d = rows.len();
            if rows.iter().any(|r| r.len() != d) {
                return Err(raw.err("target", "matrix", "matrix must be square"));
            }
            if let Some(dim) = dim {
                if dim != d {
                    return Err(raw.err("target", "dim", format!("dim = {dim} but matrix is {d} x {d}")));
                }
            }
            BuiltinPotential::Quadratic {
                dim: d,
                matrix: rows.concat(),
            }
        }
        other => {
            return Err(ConfigError::new(
                Some(kind_entry.line),
                "target.kind",
                format!("unknown kind `{other}` (zero, l1, l2norm, huber, max_affine, quadratic)"),
            ))
        }
    };
    let allowed: &[&str] = match kind {
        "zero" => &["dim"],
        "l1" | "l2norm" => &["dim", "M"],
        "huber" => &["dim", "M", "threshold"],
        "max_affine" => &["dim", "rows", "offsets"],
        _ => &["dim", "matrix"],
    };
    for key in ["dim", "M", "threshold", "rows", "offsets", "matrix"] {
        if raw.get("target", key).is_some() && !allowed.contains(&key) {
            return Err(raw.err("target", key, format!("not used by kind {kind}")));
        }
    }
    Ok(TargetSpec {
        potential,
        mu: raw.real("target", "mu")?,
        x0: raw.list("target", "x0")?,
    })
}

fn parse_schedule(raw: &Raw) -> ConfigResult<ScheduleSpec> {
    let mode = match raw.get("schedule", "mode") {
        None => None,
        Some(e) => Some(Mode::parse(&e.value).ok_or_else(|| {
            raw.err(
                "schedule",
                "mode",
                format!("unknown mode `{}` (strongly_convex, convex, smooth, manual)", e.value),
            )
        })?),
    };
    let cut_policy = raw.parse("schedule", "cut_policy", "`minimal` or `full`", |s| match s {
        "minimal" => Some(CutPolicy::Minimal),
        "full" => Some(CutPolicy::Full),
        _ => None,
    })?;
    Ok(ScheduleSpec {
        mode,
        eps: raw.real("schedule", "eps")?,
        eta: raw.real("schedule", "eta")?,
        delta: raw.real("schedule", "delta")?,
        burn_in: raw.count("schedule", "T")?,
        c_t: raw.real("schedule", "c_T")?,
        cut_policy,
        thinning: raw.count("schedule", "thinning")?,
        m4: raw.real("schedule", "m4")?,
        x_min: raw.list("schedule", "x_min")?,
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> ConfigResult<Self> {
        let raw = tokenize(text)?;
        let target = parse_target(&raw)?;
        let schedule = parse_schedule(&raw)?;
        let defaults = RunSpec::default();
        let run = RunSpec {
            seed: raw
                .parse("run", "seed", "an unsigned 64-bit integer", |s| s.parse().ok())?
                .unwrap_or(defaults.seed),
            n_samples: raw.count("run", "n_samples")?.unwrap_or(defaults.n_samples),
            chains: raw.count("run", "chains")?.unwrap_or(defaults.chains),
        };
        if run.chains == 0 {
            return Err(raw.err("run", "chains", "need at least one chain"));
        }
        let vd = VerifySpec::default();
        let suites = match raw.get("verify", "suites") {
            None => vd.suites,
            Some(e) => {
                let list: Vec<String> = e.value.split(',').map(|s| s.trim().to_string()).collect();
                if let Some(bad) = list.iter().find(|s| !SUITES.contains(&s.as_str())) {
                    return Err(raw.err(
                        "verify",
                        "suites",
                        format!("unknown suite `{bad}` ({})", SUITES.join(", ")),
                    ));
                }
                list
            }
        };
        let verify = VerifySpec {
            suites,
            envelope_trials: raw.count("verify", "envelope_trials")?.unwrap_or(vd.envelope_trials),
            audit_calls: raw.count("verify", "audit_calls")?.unwrap_or(vd.audit_calls),
            ks_samples: raw.count("verify", "ks_samples")?.unwrap_or(vd.ks_samples),
            ks_threshold: raw.real("verify", "ks_threshold")?.unwrap_or(vd.ks_threshold),
        };
        let bd = BenchSpec::default();
        let bench = BenchSpec {
            eta_scales: raw.list("bench", "eta_scales")?.unwrap_or(bd.eta_scales),
            delta_scales: raw.list("bench", "delta_scales")?.unwrap_or(bd.delta_scales),
            calls: raw.count("bench", "calls")?.unwrap_or(bd.calls),
        };
        let od = OutputSpec::default();
        let output = OutputSpec {
            samples: raw.get("output", "samples").map(|e| e.value.clone()).unwrap_or(od.samples),
            summary: raw.get("output", "summary").map(|e| e.value.clone()).unwrap_or(od.summary),
        };
        let lines = raw
            .entries
            .iter()
            .map(|((s, k), e)| (format!("{s}.{k}"), e.line))
            .collect();
        Ok(Self {
            target,
            schedule,
            run,
            verify,
            bench,
            output,
            lines,
        })
    }

    pub fn load(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(None, "--config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied()
    }

    pub fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::new(self.line_of(key), key, message)
    }

    /// Canonical text form; parsing it gives back an equal config (line
    /// numbers aside).
    pub fn render(&self) -> String {
        let mut out = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let rows = |r: &[Vec<f64>]| r.iter().map(|row| list(row)).collect::<Vec<_>>().join("; ");
        out.push_str("[target]\n");
        let _ = writeln!(out, "kind = {}", self.target.potential.kind_name());
        match &self.target.potential {
            BuiltinPotential::Zero { dim } => {
                let _ = writeln!(out, "dim = {dim}");
            }
            BuiltinPotential::L1 { dim, m } | BuiltinPotential::L2norm { dim, m } => {
                let _ = writeln!(out, "dim = {dim}\nM = {m:?}");
            }
            BuiltinPotential::Huber { dim, m, threshold } => {
                let _ = writeln!(out, "dim = {dim}\nM = {m:?}\nthreshold = {threshold:?}");
            }
            BuiltinPotential::MaxAffine { rows: r, offsets } => {
                let _ = writeln!(out, "rows = {}\noffsets = {}", rows(r), list(offsets));
            }
            BuiltinPotential::Quadratic { dim, matrix } => {
                let r: Vec<Vec<f64>> = matrix.chunks(*dim).map(|c| c.to_vec()).collect();
                let _ = writeln!(out, "matrix = {}", rows(&r));
            }
        }
        if let Some(mu) = self.target.mu {
            let _ = writeln!(out, "mu = {mu:?}");
        }
        if let Some(x0) = &self.target.x0 {
            let _ = writeln!(out, "x0 = {}", list(x0));
        }

        let s = &self.schedule;
        out.push_str("\n[schedule]\n");
        if let Some(m) = s.mode {
            let _ = writeln!(out, "mode = {}", m.name());
        }
        for (k, v) in [("eps", s.eps), ("eta", s.eta), ("delta", s.delta), ("c_T", s.c_t), ("m4", s.m4)] {
            if let Some(v) = v {
                let _ = writeln!(out, "{k} = {v:?}");
            }
        }
        if let Some(t) = s.burn_in {
            let _ = writeln!(out, "T = {t}");
        }
        if let Some(p) = s.cut_policy {
            let _ = writeln!(
                out,
                "cut_policy = {}",
                match p {
                    CutPolicy::Minimal => "minimal",
                    CutPolicy::Full => "full",
                }
            );
        }
        if let Some(t) = s.thinning {
            let _ = writeln!(out, "thinning = {t}");
        }
        if let Some(x) = &s.x_min {
            let _ = writeln!(out, "x_min = {}", list(x));
        }

        let _ = writeln!(
            out,
            "\n[run]\nseed = {}\nn_samples = {}\nchains = {}",
            self.run.seed, self.run.n_samples, self.run.chains
        );
        let v = &self.verify;
        let _ = writeln!(
            out,
            "\n[verify]\nsuites = {}\nenvelope_trials = {}\naudit_calls = {}\nks_samples = {}\nks_threshold = {:?}",
            v.suites.join(", "),
            v.envelope_trials,
            v.audit_calls,
            v.ks_samples,
            v.ks_threshold
        );
        let _ = writeln!(
            out,
            "\n[bench]\neta_scales = {}\ndelta_scales = {}\ncalls = {}",
            list(&self.bench.eta_scales),
            list(&self.bench.delta_scales),
            self.bench.calls
        );
        let _ = writeln!(
            out,
            "\n[output]\nsamples = {}\nsummary = {}",
            self.output.samples, self.output.summary
        );
        out
    }
}
