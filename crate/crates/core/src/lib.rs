//! Proximal sampling for log-concave densities `pi(x) ∝ exp(-f(x))`.
//!
//! The sampler alternates a Gaussian step `y ~ N(x, eta I)` with a
//! restricted Gaussian oracle (RGO) draw `x ~ exp(-g(x) - |x - y|^2/(2 eta))`
//! for `g = f + (mu/2)|x - x0|^2`. The RGO is exact: it rejection-samples
//! from a Gaussian centered at the minimizer of the subproblem, found either
//! by one proximal map of `f` or by a proximal bundle method that only needs
//! function values and subgradients.
//!
//! Modules:
//! - [`potential`], [`problem`], [`rng`]: domain types and the random stream.
//! - [`bundle`]: cutting-plane solver for the RGO subproblem.
//! - [`rgo`]: the oracle and its envelope functions.
//! - [`asf`]: the outer chain, parameter schedules, initialization.
//! - [`diagnostics`]: quadrature oracles, KS tests and audits.

pub mod asf;
pub mod bundle;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod potential;
pub mod problem;
pub mod rgo;
pub mod rng;

pub use asf::{ChainReport, Schedule};
pub use bundle::{BundleResult, Cut};
pub use error::{Error, Result};
pub use potential::{builtin_potential, BuiltinPotential, Potential};
pub use problem::{eta_mu, eta_mu_l, CutPolicy, RegularizedProblem, RgoParams};
pub use rgo::{Envelope, Regime, RgoOutcome, RgoStats};
pub use rng::RngStream;
