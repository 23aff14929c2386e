use thiserror::Error;

/// Errors raised by the liquidation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error in {context}: {detail}")]
    Domain {
        context: &'static str,
        detail: String,
    },

    /// A model parameter set violates a structural requirement.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The exponential-Levy tail condition `D - C > 2` fails.
    #[error("variance-gamma parameters are not admissible: D - C = {gap} must exceed 2")]
    Admissibility { gap: f64 },

    /// The initial position is not strictly below the exponential-moment bound.
    #[error("initial position {y0} violates the admissibility bound y0 < {bound} (exponential moment of -A*y0*L_1 is infinite)")]
    PositionBound { y0: f64, bound: f64 },

    /// Models with a positive drift admit no optimal liquidation strategy.
    #[error("drift {drift} is positive: the value function is degenerate and no optimal strategy exists")]
    PositiveDrift { drift: f64 },

    /// Moment matching produced a non-positive variance.
    #[error("moment matching is degenerate: matched variance {variance} is not positive")]
    Degenerate { variance: f64 },

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure in {context}: {detail}")]
    Numerical {
        context: &'static str,
        detail: String,
    },

    /// An internal consistency check failed.
    #[error("invariant breach: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn domain(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            context,
            detail: detail.into(),
        }
    }

    pub(crate) fn numerical(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            context,
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
