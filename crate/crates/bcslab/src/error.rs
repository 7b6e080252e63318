//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain a function is defined on.
    #[error("domain error in {context}: {message}")]
    Domain { context: &'static str, message: String },

    /// Physical or solver parameters are inconsistent (e.g. the energy
    /// cutoff is too large for the requested coupling).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An integrand returned a non-finite value.
    #[error("integrand returned a non-finite value at x = {abscissa}")]
    NonFiniteIntegrand { abscissa: f64 },

    /// Fixed-point iteration failed to reach the requested residual.
    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {last_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        last_residual: f64,
        residual_history: Vec<f64>,
    },

    /// The Lipschitz ratio is undefined for identical inputs.
    #[error("Lipschitz ratio undefined: the two inputs coincide")]
    UndefinedRatio,

    /// Bisection for the critical temperature observed contradictory
    /// classifications at the bracket endpoints.
    #[error("critical-temperature predicate inconsistent on bracket: {message}")]
    BracketDiagnostic {
        message: String,
        history: Vec<(f64, bool)>,
    },

    /// A finite-difference stencil could not be placed.
    #[error("stencil error: {0}")]
    Stencil(String),

    /// A computed quantity violated one of the model's invariants.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// Configuration file could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(context: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            context,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
