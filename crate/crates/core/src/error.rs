use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid flow: {0}")]
    InvalidFlow(String),

    #[error("flow is not steady: bracket residual {residual:.3e} exceeds {limit:.1e}")]
    NotSteady { residual: f64, limit: f64 },

    #[error("integrator failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("jacobian is not trace-free (trace = {0:.3e})")]
    NotTraceFree(f64),

    #[error("stagnation point is not hyperbolic")]
    NotHyperbolic,

    #[error("no hyperbolic stagnation point: the maximal exponent vanishes")]
    NoHyperbolicPoint,

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("prime period {period:.6} does not exceed required {required:.6}")]
    PeriodTooShort { period: f64, required: f64 },

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("mean-zero partner overlaps the primary support in {0} cells")]
    OverlappingSupports(usize),

    #[error("denominator {0:.3e} is numerically zero")]
    EmptyDenominator(f64),

    #[error("insufficient sampling: {0}")]
    InsufficientSampling(String),

    #[error("integral does not converge: {0}")]
    DivergentIntegral(String),

    #[error("stream support |k|∞ = {support} exceeds truncation order {n_max}")]
    SupportExceedsTruncation { support: i32, n_max: i32 },

    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: usize, limit: usize },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
