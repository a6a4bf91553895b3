use thiserror::Error;

/// Errors raised by parameter validation and the evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid probability: {0}")]
    InvalidProbability(String),

    #[error("spread must be positive, got {0}")]
    NonpositiveSpread(f64),

    #[error("horizon must be nonnegative, got {0}")]
    NegativeHorizon(i64),

    #[error("horizon {got} exceeds the lattice cap of {max}")]
    HorizonTooLarge { got: u64, max: u64 },

    #[error("invalid boundary pair (b={b}, a={a}); only MO (1, 1/2) and MP (1/2, 0) exist")]
    InvalidBoundary { b: f64, a: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("alpha model required but not configured")]
    MissingAlphaModel,

    #[error("curves are sampled on different q grids")]
    GridMismatch,

    #[error("invalid parameter distribution: {0}")]
    InvalidAtomCombination(String),

    #[error("no fill pairs supplied")]
    EmptyPairs,

    #[error("exponential kernel with d*rho = 0 has no closed form")]
    DegenerateExponent,

    #[error("infeasible problem: {0}")]
    InfeasibleProblem(String),

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
