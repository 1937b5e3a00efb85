use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{op} of non-positive value {value} in `{subexpr}`")]
    Domain {
        op: &'static str,
        subexpr: String,
        value: f64,
    },

    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },

    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),

    #[error("point (r = {r}, s = {s}) lies outside the domain of {metric}: {constraint}")]
    OutsideDomain {
        metric: String,
        r: f64,
        s: f64,
        constraint: &'static str,
    },

    #[error("phi jet has order {have}, {need} required")]
    InsufficientOrder { have: usize, need: usize },

    #[error("singular metric: {0} vanishes")]
    SingularMetric(&'static str),

    #[error("zero vector: {0}")]
    ZeroVector(&'static str),

    #[error("dimension mismatch: x has {x} components, y has {y}")]
    DimensionMismatch { x: usize, y: usize },

    #[error("dimension {0} outside supported range 2..=6")]
    DimensionOutOfRange(usize),

    #[error("dimension {0} too small, n >= 3 required")]
    DimensionTooSmall(usize),

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("degenerate point: {0}")]
    DegeneratePoint(&'static str),

    #[error("mean Cartan scalar {0:e} is below the zero threshold")]
    ZeroMeanCartan(f64),

    #[error("every grid point was excluded")]
    EmptyGrid,

    #[error("metric is Riemannian at r = {0} (sigma2 vanishes at every sample)")]
    RiemannianAtRadius(f64),

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("metric `{metric}` requires parameter `{param}`")]
    MissingParam { metric: String, param: &'static str },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: String,
        value: f64,
        reason: &'static str,
    },

    #[error("could not draw {wanted} admissible points for {metric} after {tries} attempts")]
    SamplingExhausted {
        metric: String,
        wanted: usize,
        tries: usize,
    },
}

impl Error {
    /// Errors that come from where the metric was evaluated rather than how
    /// it was requested.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::DivisionByZero { .. }
                | Error::OutsideDomain { .. }
                | Error::SingularMetric(_)
                | Error::ZeroVector(_)
                | Error::DegeneratePoint(_)
                | Error::ZeroMeanCartan(_)
                | Error::EmptyGrid
                | Error::RiemannianAtRadius(_)
                | Error::SamplingExhausted { .. }
        )
    }
}
