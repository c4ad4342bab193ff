use thiserror::Error;

/// Errors raised by the q-statistics toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A denominator or bracket vanished (e.g. the pole of the q-negation).
    #[error("pole: {0}")]
    Pole(String),

    /// An integral or iteration failed to converge to the requested tolerance.
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    /// A root-finding bracket does not straddle a sign change.
    #[error("invalid bracket: f({lo}) and f({hi}) have the same sign")]
    Bracket { lo: f64, hi: f64 },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("mismatched deformation parameters: q1 = {0}, q2 = {1}")]
    MismatchedQ(f64, f64),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence(_) | Error::Bracket { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
