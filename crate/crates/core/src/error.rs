use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("max-affine potential needs at least one affine piece")]
    EmptyAffineFamily,

    #[error("potential has no Lipschitz constant; the bundle path needs `M`")]
    MissingLipschitz,

    #[error("potential has no proximal map")]
    MissingProx,

    #[error("no RGO path applies: {0}")]
    NoRgoPath(String),

    #[error("cutting-plane QP did not converge after {iterations} iterations (dual gap {gap:e})")]
    QpNotConverged { iterations: usize, gap: f64 },

    #[error("bundle method hit its iteration cap {cap} with gap {gap:e} > delta {delta:e}")]
    BundleCapExceeded { cap: usize, gap: f64, delta: f64 },

    #[error("rejection sampler drew {proposals} proposals without acceptance (acceptance rate {acceptance_rate:e})")]
    RejectionCapExceeded { proposals: usize, acceptance_rate: f64 },

    #[error("stepsize window violated: {0}")]
    InfeasibleWindow(String),

    #[error("could not certify |x - x_opt|^2 <= d/mu within {iterations} proximal steps (bound {bound:e})")]
    CertificationFailed { iterations: usize, bound: f64 },

    #[error("need at least {required} samples, got {got}")]
    InsufficientSamples { required: usize, got: usize },

    #[error("operation requires d = 1, got d = {0}")]
    NotOneDimensional(usize),
}
