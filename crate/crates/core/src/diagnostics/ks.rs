use serde::Serialize;

use super::quadrature::QuadratureDensity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n: usize,
    pub threshold: f64,
    pub pass: bool,
}

/// Two-sided sup distance between the empirical CDF and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        acc.max(above).max(below)
    })
}

/// KS test against the quadrature oracle. Panics on empty input.
pub fn ks_test(samples: &[f64], reference: &QuadratureDensity, threshold: f64) -> KsReport {
    assert!(!samples.is_empty(), "ks_test needs at least one sample");
    let statistic = ks_statistic(samples, |x| reference.cdf(x));
    KsReport {
        statistic,
        n: samples.len(),
        threshold,
        pass: statistic <= threshold,
    }
}
