//! The cutting-plane subproblem
//!
//! ```text
//! min_u  max_i l_i(u) + (mu/2)|u - x0|^2 + |u - y|^2 / (2 eta)
//! ```
//!
//! solved through its dual over the probability simplex. For weights `w` the
//! primal point is `u(w) = z - eta_mu * sum_i w_i s_i` with
//! `z = eta_mu (mu x0 + y / eta)`, the dual gradient is `l_i(u(w))`, and the
//! duality gap is `max_i l_i(u) - sum_i w_i l_i(u)`, which is computed
//! without cancellation between large terms.
//!
//! Accelerated projected gradient with function-value restarts does the
//! bulk of the work; whenever the support settles, the KKT system on that
//! support is solved directly, which recovers the exact minimizer.

use nalgebra::{DMatrix, DVector};

use super::simplex::project_onto_simplex;
use super::Cut;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dist_sq, dot};
use crate::problem::eta_mu;

const TARGET_GAP: f64 = 1e-13;
const ACCEPT_GAP: f64 = 1e-10;
const MAX_ITERATIONS: usize = 200_000;
const POLISH_EVERY: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSolution {
    pub x: Vec<f64>,
    /// `g_j^eta(x)`: the model objective at `x`.
    pub model_value: f64,
    /// Optimal simplex weights, one per cut.
    pub weights: Vec<f64>,
    pub dual_gap: f64,
    pub iterations: usize,
}

struct Subproblem<'a> {
    cuts: &'a [Cut],
    y: &'a [f64],
    x0: &'a [f64],
    eta: f64,
    mu: f64,
    eta_mu: f64,
    center: Vec<f64>,
    intercepts: Vec<f64>,
    // b_i = l_i(center), gram = S^T S
    b: Vec<f64>,
    gram: Vec<f64>,
}

impl<'a> Subproblem<'a> {
    fn new(cuts: &'a [Cut], y: &'a [f64], x0: &'a [f64], eta: f64, mu: f64) -> Self {
        let em = eta_mu(eta, mu);
        let center: Vec<f64> = y
            .iter()
            .zip(x0)
            .map(|(yi, ci)| em * (mu * ci + yi / eta))
            .collect();
        let intercepts: Vec<f64> = cuts
            .iter()
            .map(|c| c.value - dot(&c.slope, &c.anchor))
            .collect();
        let b = cuts
            .iter()
            .zip(&intercepts)
            .map(|(c, ci)| ci + dot(&c.slope, &center))
            .collect();
        let k = cuts.len();
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let v = dot(&cuts[i].slope, &cuts[j].slope);
                gram[i * k + j] = v;
                gram[j * k + i] = v;
            }
        }
        Self {
            cuts,
            y,
            x0,
            eta,
            mu,
            eta_mu: em,
            center,
            intercepts,
            b,
            gram,
        }
    }

    fn k(&self) -> usize {
        self.cuts.len()
    }

    fn primal_point(&self, w: &[f64]) -> Vec<f64> {
        let mut u = self.center.clone();
        for (c, &wi) in self.cuts.iter().zip(w) {
            if wi != 0.0 {
                axpy(-self.eta_mu * wi, &c.slope, &mut u);
            }
        }
        u
    }

    fn cut_values(&self, u: &[f64]) -> Vec<f64> {
        self.cuts
            .iter()
            .zip(&self.intercepts)
            .map(|(c, ci)| ci + dot(&c.slope, u))
            .collect()
    }

    fn proximity(&self, u: &[f64]) -> f64 {
        0.5 * self.mu * dist_sq(u, self.x0) + dist_sq(u, self.y) / (2.0 * self.eta)
    }

    /// Dual gradient `b - eta_mu G w` (equals the cut values at `u(w)`).
    fn gradient(&self, w: &[f64], out: &mut [f64]) {
        let k = self.k();
        for i in 0..k {
            let row = &self.gram[i * k..(i + 1) * k];
            out[i] = self.b[i] - self.eta_mu * dot(row, w);
        }
    }

    fn dual_objective(&self, w: &[f64]) -> f64 {
        let k = self.k();
        let mut quad = 0.0;
        for i in 0..k {
            if w[i] != 0.0 {
                quad += w[i] * dot(&self.gram[i * k..(i + 1) * k], w);
            }
        }
        dot(&self.b, w) - 0.5 * self.eta_mu * quad
    }

    fn evaluate(&self, w: &[f64]) -> (Vec<f64>, f64, f64) {
        let u = self.primal_point(w);
        let vals = self.cut_values(&u);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let avg = dot(&vals, w);
        let model = max + self.proximity(&u);
        (u, model, (max - avg).max(0.0))
    }

    fn gradient_lipschitz(&self) -> f64 {
        let k = self.k();
        let trace: f64 = (0..k).map(|i| self.gram[i * k + i]).sum();
        if trace <= 0.0 {
            return 0.0;
        }
        // Power iteration on the PSD Gram matrix; trace is a hard upper bound.
        let mut v: Vec<f64> = (0..k).map(|i| 1.0 + i as f64 / k as f64).collect();
        let mut lambda = 0.0;
        let mut gv = vec![0.0; k];
        for _ in 0..60 {
            for i in 0..k {
                gv[i] = dot(&self.gram[i * k..(i + 1) * k], &v);
            }
            let n = dot(&gv, &gv).sqrt() / dot(&v, &v).sqrt();
            if n == 0.0 {
                lambda = trace;
                break;
            }
            lambda = n;
            let vn = dot(&gv, &gv).sqrt();
            for i in 0..k {
                v[i] = gv[i] / vn;
            }
        }
        self.eta_mu * (1.05 * lambda).min(trace).max(lambda)
    }

    /// Solve the KKT system restricted to `support`; `None` if singular or
    /// the weights leave the simplex.
    fn polish(&self, support: &[usize]) -> Option<Vec<f64>> {
        let mut active: Vec<usize> = support.to_vec();
        let k = self.k();
        while !active.is_empty() {
            let n = active.len();
            let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
            let mut rhs = DVector::<f64>::zeros(n + 1);
            for (r, &i) in active.iter().enumerate() {
                for (c, &j) in active.iter().enumerate() {
                    a[(r, c)] = self.eta_mu * self.gram[i * k + j];
                }
                a[(r, n)] = 1.0;
                a[(n, r)] = 1.0;
                rhs[r] = self.b[i];
            }
            rhs[n] = 1.0;
            let sol = a.lu().solve(&rhs)?;
            if !sol.iter().all(|v| v.is_finite()) {
                return None;
            }
            let (worst, min) = (0..n).fold((0, f64::INFINITY), |acc, r| {
                if sol[r] < acc.1 {
                    (r, sol[r])
                } else {
                    acc
                }
            });
            if min >= 0.0 {
                let mut w = vec![0.0; k];
                for (r, &i) in active.iter().enumerate() {
                    w[i] = sol[r];
                }
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= s);
                return Some(w);
            }
            active.remove(worst);
        }
        None
    }
}

fn support_of(w: &[f64]) -> Vec<usize> {
    w.iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, _)| i)
        .collect()
}

fn near_active(vals: &[f64]) -> Vec<usize> {
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * (1.0 + max.abs());
    vals.iter()
        .enumerate()
        .filter(|(_, &v)| v >= max - tol)
        .map(|(i, _)| i)
        .collect()
}

fn finish(sp: &Subproblem<'_>, w: Vec<f64>, iterations: usize) -> ModelSolution {
    let (x, model_value, dual_gap) = sp.evaluate(&w);
    ModelSolution {
        x,
        model_value,
        weights: w,
        dual_gap,
        iterations,
    }
}

/// Minimizes the cutting-plane model plus both quadratic terms.
pub fn solve_model_subproblem(
    cuts: &[Cut],
    y: &[f64],
    x0: &[f64],
    eta: f64,
    mu: f64,
) -> Result<ModelSolution> {
    solve_model_subproblem_warm(cuts, y, x0, eta, mu, None)
}

pub(crate) fn solve_model_subproblem_warm(
    cuts: &[Cut],
    y: &[f64],
    x0: &[f64],
    eta: f64,
    mu: f64,
    warm: Option<&[f64]>,
) -> Result<ModelSolution> {
    if cuts.is_empty() {
        return Err(Error::InvalidArgument("cutting-plane model needs at least one cut".into()));
    }
    let sp = Subproblem::new(cuts, y, x0, eta, mu);
    let k = sp.k();
    if k == 1 {
        return Ok(finish(&sp, vec![1.0], 0));
    }

    let mut w: Vec<f64> = match warm {
        Some(w0) if w0.len() == k => {
            let mut w = w0.to_vec();
            project_onto_simplex(&mut w);
            w
        }
        _ => {
            let mut w = vec![0.0; k];
            let best = (0..k).fold(0, |b, i| if sp.b[i] > sp.b[b] { i } else { b });
            w[best] = 1.0;
            w
        }
    };

    let lip = sp.gradient_lipschitz();
    if lip == 0.0 {
        // All slopes vanish: the dual is linear, put all mass on the top cut.
        let mut w = vec![0.0; k];
        let best = (0..k).fold(0, |b, i| if sp.b[i] > sp.b[b] { i } else { b });
        w[best] = 1.0;
        return Ok(finish(&sp, w, 0));
    }
    let mut step = 1.0 / lip;

    let converged = |gap: f64, model: f64| gap <= TARGET_GAP * (1.0 + model.abs());

    let mut best = w.clone();
    let (_, model, gap) = sp.evaluate(&w);
    let mut best_gap = gap;
    if converged(gap, model) {
        return Ok(finish(&sp, w, 0));
    }

    let mut momentum_point = w.clone();
    let mut t = 1.0_f64;
    let mut dual = sp.dual_objective(&w);
    let mut grad = vec![0.0; k];
    let mut last_support: Vec<usize> = Vec::new();

    for it in 1..=MAX_ITERATIONS {
        sp.gradient(&momentum_point, &mut grad);
        let mut next: Vec<f64> = momentum_point
            .iter()
            .zip(&grad)
            .map(|(v, g)| v + step * g)
            .collect();
        project_onto_simplex(&mut next);
        let next_dual = sp.dual_objective(&next);

        if next_dual < dual {
            if t == 1.0 {
                // A plain step failed to ascend, so the Lipschitz estimate was low.
                step *= 0.5;
            }
            // Restart from the last iterate with a plain projected step.
            t = 1.0;
            momentum_point.clone_from(&w);
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        momentum_point = next
            .iter()
            .zip(&w)
            .map(|(n, o)| n + beta * (n - o))
            .collect();
        t = t_next;
        w = next;
        dual = next_dual;

        if it % POLISH_EVERY == 0 || it == 1 {
            let (_, model, gap) = sp.evaluate(&w);
            if gap < best_gap {
                best_gap = gap;
                best.clone_from(&w);
            }
            if converged(gap, model) {
                return Ok(finish(&sp, w, it));
            }
            let support = support_of(&w);
            if support != last_support {
                last_support = support.clone();
                let (u, _, _) = sp.evaluate(&w);
                let vals = sp.cut_values(&u);
                for cand in [support, near_active(&vals)] {
                    if let Some(pw) = sp.polish(&cand) {
                        let (_, pm, pg) = sp.evaluate(&pw);
                        if converged(pg, pm) {
                            return Ok(finish(&sp, pw, it));
                        }
                    }
                }
            }
        }
    }

    let (_, model, _) = sp.evaluate(&best);
    if best_gap <= ACCEPT_GAP * (1.0 + model.abs()) {
        return Ok(finish(&sp, best, MAX_ITERATIONS));
    }
    Err(Error::QpNotConverged {
        iterations: MAX_ITERATIONS,
        gap: best_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut(anchor: f64, value: f64, slope: f64) -> Cut {
        Cut {
            anchor: vec![anchor],
            value,
            slope: vec![slope],
        }
    }

    #[test]
    fn single_zero_cut_returns_center() {
        let sol = solve_model_subproblem(&[cut(0.7, 0.0, 0.0)], &[0.7], &[0.0], 1.0, 0.0).unwrap();
        assert_eq!(sol.x, vec![0.7]);
        assert_eq!(sol.model_value, 0.0);
    }

    #[test]
    fn single_linear_cut() {
        // l(u) = u from |x| at y = 0.5
        let sol = solve_model_subproblem(&[cut(0.5, 0.5, 1.0)], &[0.5], &[0.0], 1.0, 0.0).unwrap();
        assert!((sol.x[0] + 0.5).abs() < 1e-15);
        assert!(sol.model_value.abs() < 1e-15);
    }

    #[test]
    fn symmetric_kink() {
        let cuts = [cut(0.5, 0.5, 1.0), cut(-0.5, 0.5, -1.0)];
        let sol = solve_model_subproblem(&cuts, &[0.5], &[0.0], 1.0, 0.0).unwrap();
        assert!(sol.x[0].abs() < 1e-12, "x = {}", sol.x[0]);
        assert!((sol.model_value - 0.125).abs() < 1e-12);
        assert!((sol.weights[0] - 0.75).abs() < 1e-12);
        assert!(sol.dual_gap <= 1e-10 * (1.0 + sol.model_value.abs()));
    }

    #[test]
    fn duplicate_slopes_still_converge() {
        let cuts = [
            cut(1.0, 1.0, 1.0),
            cut(2.0, 2.0, 1.0),
            cut(-1.0, 1.0, -1.0),
            cut(-3.0, 3.0, -1.0),
        ];
        let sol = solve_model_subproblem(&cuts, &[0.2], &[1.0], 0.5, 2.0).unwrap();
        // Brute-force minimize |u| + (u - 1)^2 + (u - 0.2)^2 on a fine grid.
        let obj = |u: f64| u.abs() + (u - 1.0).powi(2) + (u - 0.2).powi(2);
        let mut best = (0.0, f64::INFINITY);
        for i in -200_000..=200_000 {
            let u = i as f64 * 1e-5;
            if obj(u) < best.1 {
                best = (u, obj(u));
            }
        }
        assert!((sol.x[0] - best.0).abs() < 2e-5);
        assert!((sol.model_value - best.1).abs() < 1e-9);
    }
}
