use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix has odd dimension {0}; a symplectic structure needs 2n")]
    OddDimension(usize),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("singular matrix: pivot {pivot:e} below tolerance {tolerance:e}")]
    SingularMatrix { pivot: f64, tolerance: f64 },

    #[error("Padé denominator is numerically singular (step size too large for this order)")]
    SingularDenominator,

    #[error("matrix exponential overflow: norm {norm:e} needs more than {max_squarings} squarings")]
    Overflow { norm: f64, max_squarings: u32 },

    #[error("invalid Padé pair ({r},{s}): r + s must be at least 1")]
    InvalidPadePair { r: usize, s: usize },

    #[error("step size {0} must lie in (0, 1) for truncated increments")]
    DegenerateStep(f64),

    #[error("generator A^{0} is not infinitesimal symplectic")]
    NotInfinitesimalSymplectic(usize),

    #[error("drift Hamiltonian matrix is not symmetric")]
    NotSymmetric,

    #[error("generators do not commute; closed-form solution unavailable")]
    NonCommutingGenerators,

    #[error("covariance quadrature failed at node {node}")]
    QuadratureFailure { node: usize },

    #[error("noise block does not match the scheme: {0}")]
    SpecMismatch(String),

    #[error("T / h = {ratio} is not an integer")]
    NonIntegralStepCount { ratio: f64 },

    #[error("degenerate error series: {0}")]
    DegenerateSeries(String),

    #[error("trajectory has no recorded {0}")]
    MissingDiagnostics(&'static str),

    #[error("all {paths} Monte-Carlo paths failed")]
    AllPathsFailed { paths: usize },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
