use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The caller violated a precondition (shapes, ordering, empty input).
    #[error("usage error: {0}")]
    Usage(String),
    /// A model configuration violates a structural assumption.
    #[error("configuration error: {0}")]
    Config(String),
    /// A numerical procedure (quadrature, root finding) failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The time stepper produced a non-finite value.
    #[error("numeric blow-up at step {step} (last good time {last_good_time})")]
    BlowUp { step: u64, last_good_time: f64 },
    /// A construction that cannot fail by design did fail.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = core::result::Result<T, Error>;
