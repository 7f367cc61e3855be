//! Verification harness: quadrature oracles, KS tests, rejection audits,
//! envelope fuzzing and the radial integral bound.

mod audit;
mod fuzz;
mod integral;
mod ks;
mod quadrature;

pub use audit::{audit_rejections, expected_trials_bound, RejectionAudit, AUDIT_SLACK, MIN_AUDIT_CALLS};
pub use fuzz::{fuzz_envelopes, FuzzOptions, FuzzReport};
pub use integral::{
    check_integral_bound, gamma_half_integer, gaussian_moment_closed_form, radial_integral, radial_moment,
    unit_sphere_area, IntegralBound,
};
pub use ks::{ks_statistic, ks_test, KsReport};
pub use quadrature::{exact_cdf_1d, gauss_legendre, integrate, QuadratureDensity};
