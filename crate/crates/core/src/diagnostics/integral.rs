//! Radial quadrature for `∫_{R^d} exp(-|x|^2/(2 lam) - 2a|x|) dx` and the
//! Gaussian integrals it is checked against.

use serde::Serialize;

use super::quadrature::integrate;
use crate::error::{Error, Result};

/// `Gamma(d/2)` for integer `d >= 1` from `Gamma(k) = (k-1)!` and
/// `Gamma(k + 1/2) = (k - 1/2)(k - 3/2)...(1/2) sqrt(pi)`.
pub fn gamma_half_integer(d: usize) -> f64 {
    assert!(d >= 1);
    if d.is_multiple_of(2) {
        (1..d / 2).map(|i| i as f64).product()
    } else {
        let k = d / 2;
        (0..k).map(|i| i as f64 + 0.5).product::<f64>() * std::f64::consts::PI.sqrt()
    }
}

/// Surface area of the unit sphere in `R^d`: `2 pi^{d/2} / Gamma(d/2)`.
pub fn unit_sphere_area(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half_integer(d)
}

/// `∫_0^∞ exp(-r^2/(2 lam) - 2 a r) r^n dr`, integrand truncated where it
/// falls below `1e-14` of its peak.
pub fn radial_moment(n: usize, a: f64, lam: f64) -> f64 {
    let log_f = |r: f64| -r * r / (2.0 * lam) - 2.0 * a * r + if n == 0 { 0.0 } else { n as f64 * r.ln() };
    // Peak of the log integrand: r^2/lam + 2 a r - n = 0.
    let peak = if n == 0 {
        0.0
    } else {
        lam * (-a + (a * a + n as f64 / lam).sqrt())
    };
    let log_peak = if n == 0 { 0.0 } else { log_f(peak) };
    let cutoff = log_peak - (1e-14f64).ln().abs();
    let mut r_max = peak.max(lam.sqrt());
    while log_f(r_max) > cutoff {
        r_max *= 1.5;
    }
    let f = |r: f64| if r <= 0.0 { if n == 0 { 1.0 } else { 0.0 } } else { log_f(r).exp() };
    let scale = log_peak.exp() * r_max;
    // Split at the peak so each piece is unimodal.
    let tol = 1e-16 * scale;
    if peak > 0.0 {
        integrate(f, 0.0, peak, tol) + integrate(f, peak, r_max, tol)
    } else {
        integrate(f, 0.0, r_max, tol)
    }
}

/// Radial-quadrature value of `∫_{R^d} exp(-|x|^2/(2 lam) - 2a|x|) dx`.
pub fn radial_integral(d: usize, a: f64, lam: f64) -> f64 {
    unit_sphere_area(d) * radial_moment(d - 1, a, lam)
}

/// `∫_0^∞ exp(-c x^2) x^n dx` in closed form.
pub fn gaussian_moment_closed_form(c: f64, n: usize) -> f64 {
    if n.is_multiple_of(2) {
        let double_fact: f64 = (1..n).step_by(2).map(|i| i as f64).product();
        double_fact / (2f64.powf(n as f64 / 2.0 + 1.0) * c.powf(n as f64 / 2.0)) * (std::f64::consts::PI / c).sqrt()
    } else {
        let fact: f64 = (1..=(n - 1) / 2).map(|i| i as f64).product();
        fact / (2.0 * c.powf((n as f64 + 1.0) / 2.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralBound {
    pub dim: usize,
    pub a: f64,
    pub lam: f64,
    pub lhs: f64,
    /// `(2 pi lam)^{d/2} / 2`
    pub rhs: f64,
    pub pass: bool,
}

/// Checks `∫ exp(-|x|^2/(2 lam) - 2a|x|) dx >= (2 pi lam)^{d/2} / 2` for
/// `lam <= 1/(16 a^2 d)`.
pub fn check_integral_bound(d: usize, a: f64, lam: f64) -> Result<IntegralBound> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if !(a.is_finite() && a >= 0.0) || !(lam.is_finite() && lam > 0.0) {
        return Err(Error::InvalidArgument(format!("need a >= 0 and lam > 0, got a = {a}, lam = {lam}")));
    }
    if a > 0.0 && lam > (1.0 + 1e-12) / (16.0 * a * a * d as f64) {
        return Err(Error::InvalidArgument(format!(
            "lam = {lam:e} exceeds 1/(16 a^2 d) = {:e}",
            1.0 / (16.0 * a * a * d as f64)
        )));
    }
    let lhs = radial_integral(d, a, lam);
    let rhs = 0.5 * (2.0 * std::f64::consts::PI * lam).powf(d as f64 / 2.0);
    Ok(IntegralBound {
        dim: d,
        a,
        lam,
        lhs,
        rhs,
        pass: lhs >= rhs * (1.0 - 1e-6),
    })
}
