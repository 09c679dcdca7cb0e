use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("multi-index {0:?} listed more than once (same symmetry orbit)")]
    DuplicateOrbit(Vec<usize>),

    #[error("multi-index has length {got}, expected {expected}")]
    IndexLength { got: usize, expected: usize },

    #[error("cannot contract {requested} momenta from a tensor of order {order}")]
    ArityExceeded { requested: usize, order: usize },

    #[error("tensor order {order} outside the supported range {min}..={max}")]
    OrderOutOfRange { order: usize, min: usize, max: usize },

    #[error("unsupported metric shape: {0}")]
    InvalidSpec(String),

    #[error("radicand {radicand:e} is not positive: point lies outside the metric's domain")]
    NonPositiveRadicand { radicand: f64 },

    #[error("momentum must be nonzero")]
    ZeroMomentum,

    #[error("a^{{ij}} is singular or ill-conditioned (condition number {condition:e})")]
    SingularMetric { condition: f64 },

    #[error("reference volume sigma(x) = {value:e} is not positive")]
    NonPositiveVolume { value: f64 },

    #[error("level-{level} linear solve residual {residual:e} exceeds {bound:e}")]
    ResidualTooLarge { level: usize, residual: f64, bound: f64 },

    #[error("least-squares basis is degenerate for the {0} ansatz")]
    DegenerateFit(String),

    #[error("too few samples: {got} < {min}")]
    TooFewSamples { got: usize, min: usize },

    #[error("integration failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("{location}: {message}")]
    Parse { location: String, message: String },
}

impl Error {
    /// Errors caused by the evaluation point rather than by malformed input.
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveRadicand { .. }
                | Error::ZeroMomentum
                | Error::SingularMetric { .. }
                | Error::NonPositiveVolume { .. }
                | Error::ResidualTooLarge { .. }
                | Error::StepFailure { .. }
        )
    }
}
