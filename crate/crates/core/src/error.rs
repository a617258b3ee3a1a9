use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or out-of-range input data.
    #[error("invalid input: {0}")]
    Input(String),

    /// Evaluation requested outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The target of an inversion of `G` is never reached in finite time.
    #[error("target {target} is not reached in finite time (G_infinity = {limit})")]
    NoFiniteTime { target: f64, limit: f64 },

    /// The representation-formula denominator is at or below the singular threshold.
    #[error("near-singular point at alpha = {alpha}, t = {t} (denominator {denominator:e})")]
    NearSingular { alpha: f64, t: f64, denominator: f64 },

    /// `psi_0` is nowhere positive, so the singular set is empty.
    #[error("singular curve is empty: psi_0 has no positive values")]
    EmptyCurve,

    /// A result exists only under hypotheses that the data violate.
    #[error("hypotheses not satisfied: {0}")]
    Hypothesis(String),

    /// Time integration failed (lost positivity or produced non-finite values).
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },
}

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
