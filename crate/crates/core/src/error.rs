//! Error taxonomy. Validation failures (bad arguments, mismatched grids or
//! forms) are distinguished from legitimate numerical outcomes (bisection
//! bracket failure, ODE blowup, rejected steps, NaN during evolution) so that
//! callers can map them onto distinct exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on user-supplied data failed.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A state was passed to an operation expecting a different field form.
    #[error("form mismatch: expected {expected}, got {got}")]
    FormMismatch { expected: String, got: String },

    /// Two objects were built on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Static ODE integration left the admissible region before reaching the
    /// requested endpoint (legitimate for prescribed-tail solutions that only
    /// exist near infinity).
    #[error("static ODE integration failed: solution left the admissible region at x = {exit_x:.6}")]
    IntegrationFailure { exit_x: f64 },

    /// The shooting bracket [b_lo, b_hi] did not enclose a sign change.
    #[error("shooting bracket failure: lo classified {lo}, hi classified {hi}")]
    BracketFailure { lo: String, hi: String },

    /// A shot could not be classified by the configured endpoint.
    #[error("inconclusive shot at x_end = {x_end}: |Q - nπ| = {distance:.3e} inside the margin band")]
    InconclusiveShot { x_end: f64, distance: f64 },

    /// The far-field plateau of the tail coefficient has not converged.
    #[error("tail too short: plateau drift {drift:.3e} exceeds {tol:.3e}; increase x_end")]
    TailTooShort { drift: f64, tol: f64 },

    /// Time step rejected by the CFL bound.
    #[error("rejected step: dt = {dt:.3e} exceeds CFL bound {max_dt:.3e}")]
    RejectedStep { dt: f64, max_dt: f64 },

    /// Non-finite values appeared during evolution.
    #[error("blowup detected at t = {time:.6}: non-finite field values (last good sample at t = {last_good:.6})")]
    Blowup { time: f64, last_good: f64 },

    /// The spatial domain cannot contain the requested causal cone.
    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    /// I/O or serialization failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed serialized artifact.
    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl Error {
    /// True for failures of input validation (as opposed to numerical
    /// outcomes discovered mid-computation).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::FormMismatch { .. }
                | Error::GridMismatch(_)
                | Error::Serde(_)
        )
    }
}
