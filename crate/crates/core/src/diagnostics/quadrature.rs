//! Adaptive Gauss–Legendre quadrature and the 1D target oracle.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::RegularizedProblem;

const ORDER: usize = 16;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

fn gl(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

fn adaptive_rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, abs_tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gl(f, a, mid);
    let right = gl(f, mid, b);
    let refined = left + right;
    // halves that agree to rounding cannot be improved by bisecting further
    let floor = 16.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || (refined - whole).abs() <= abs_tol.max(floor) {
        return refined;
    }
    adaptive_rec(f, a, mid, left, 0.5 * abs_tol, depth - 1)
        + adaptive_rec(f, mid, b, right, 0.5 * abs_tol, depth - 1)
}

/// Adaptive 16-point Gauss–Legendre with bisection until halves agree to
/// `abs_tol` (or to rounding).
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gl(&f, a, b);
    adaptive_rec(&f, a, b, whole, abs_tol, 40)
}

/// Normalized 1D density `exp(-g) / Z` tabulated on a uniform grid, with
/// cumulative probabilities at every node.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureDensity {
    pub grid: Vec<f64>,
    /// Normalized log density at each grid node.
    pub log_density: Vec<f64>,
    /// `log Z` with `Z = ∫ exp(-g)`.
    pub log_normalizer: f64,
    pub cdf_at_nodes: Vec<f64>,
    #[serde(skip)]
    problem: RegularizedProblem,
    #[serde(skip)]
    g_min: f64,
}

/// Drop below the peak at which the grid is truncated: `exp(-46) ~ 1e-20`.
const TAIL_DROP: f64 = 46.0;
const CELL_TOL: f64 = 1e-15;

fn minimize_convex_1d(g: impl Fn(f64) -> f64, slope: impl Fn(f64) -> f64, start: f64) -> Result<f64> {
    // Bracket a sign change of the subgradient, then bisect.
    let mut step = 1.0;
    let (mut lo, mut hi);
    if slope(start) >= 0.0 {
        hi = start;
        lo = start - step;
        while slope(lo) >= 0.0 {
            step *= 2.0;
            lo = start - step;
            if step > 1e12 {
                return Err(Error::InvalidArgument("density is not integrable".into()));
            }
        }
    } else {
        lo = start;
        hi = start + step;
        while slope(hi) < 0.0 {
            step *= 2.0;
            hi = start + step;
            if step > 1e12 {
                return Err(Error::InvalidArgument("density is not integrable".into()));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if slope(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(if g(lo) < g(hi) { lo } else { hi })
}

fn tail_limit(g: &impl Fn(f64) -> f64, mode: f64, g_min: f64, dir: f64) -> Result<f64> {
    let mut step = 1.0;
    while g(mode + dir * step) - g_min < TAIL_DROP {
        step *= 2.0;
        if step > 1e12 {
            return Err(Error::InvalidArgument("density is not integrable".into()));
        }
    }
    let (mut inside, mut outside) = (0.0, step);
    for _ in 0..100 {
        let mid = 0.5 * (inside + outside);
        if g(mode + dir * mid) - g_min < TAIL_DROP {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(mode + dir * outside)
}

/// Quadrature oracle for `pi ∝ exp(-g)` on `R`, with `cells` grid cells.
pub fn exact_cdf_1d(p: &RegularizedProblem, cells: usize) -> Result<QuadratureDensity> {
    if p.dim() != 1 {
        return Err(Error::NotOneDimensional(p.dim()));
    }
    if cells == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let g = |x: f64| p.eval_g(&[x]);
    let slope = |x: f64| p.subgradient_g(&[x])[0];
    let mode = minimize_convex_1d(g, slope, p.x0()[0])?;
    let g_min = g(mode);
    let lo = tail_limit(&g, mode, g_min, -1.0)?;
    let hi = tail_limit(&g, mode, g_min, 1.0)?;

    let h = (hi - lo) / cells as f64;
    let grid: Vec<f64> = (0..=cells).map(|i| lo + h * i as f64).collect();
    let unnorm = |x: f64| (-(g(x) - g_min)).exp();
    let mut cumulative = Vec::with_capacity(cells + 1);
    cumulative.push(0.0);
    let mut acc = 0.0;
    for w in grid.windows(2) {
        acc += integrate(unnorm, w[0], w[1], CELL_TOL * h);
        cumulative.push(acc);
    }
    let z = acc;
    let log_z = z.ln();
    Ok(QuadratureDensity {
        log_density: grid.iter().map(|&x| -(g(x) - g_min) - log_z).collect(),
        cdf_at_nodes: cumulative.iter().map(|c| c / z).collect(),
        grid,
        log_normalizer: log_z - g_min,
        problem: p.clone(),
        g_min,
    })
}

impl QuadratureDensity {
    fn density_unchecked(&self, x: f64) -> f64 {
        (-(self.problem.eval_g(&[x]) - self.g_min) - (self.log_normalizer + self.g_min)).exp()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.grid[0] || x > *self.grid.last().unwrap() {
            return 0.0;
        }
        self.density_unchecked(x)
    }

    fn cell_of(&self, x: f64) -> usize {
        let n = self.grid.len() - 1;
        let h = (self.grid[n] - self.grid[0]) / n as f64;
        (((x - self.grid[0]) / h).floor() as usize).min(n - 1)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.grid.len() - 1;
        if x <= self.grid[0] {
            return 0.0;
        }
        if x >= self.grid[n] {
            return 1.0;
        }
        let i = self.cell_of(x);
        let h = self.grid[1] - self.grid[0];
        let part = integrate(|t| self.density_unchecked(t), self.grid[i], x, CELL_TOL * h);
        (self.cdf_at_nodes[i] + part).clamp(0.0, 1.0)
    }

    /// Inverse CDF by bisection.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.grid.len() - 1;
        let i = self.cdf_at_nodes.partition_point(|&c| c < u).clamp(1, n);
        let (mut lo, mut hi) = (self.grid[i - 1], self.grid[i]);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `∫ phi(x) pi(x) dx` over the grid.
    pub fn expectation(&self, phi: impl Fn(f64) -> f64) -> f64 {
        let h = self.grid[1] - self.grid[0];
        self.grid
            .windows(2)
            .map(|w| integrate(|t| phi(t) * self.density_unchecked(t), w[0], w[1], CELL_TOL * h))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expectation(|x| (x - m) * (x - m))
    }

    pub fn total_mass(&self) -> f64 {
        *self.cdf_at_nodes.last().unwrap()
    }

    /// Trapezoidal mass of the tabulated log density.
    pub fn trapezoid_mass(&self) -> f64 {
        let h = self.grid[1] - self.grid[0];
        let d: Vec<f64> = self.log_density.iter().map(|v| v.exp()).collect();
        h * (d.iter().sum::<f64>() - 0.5 * (d[0] + d[d.len() - 1]))
    }
}
