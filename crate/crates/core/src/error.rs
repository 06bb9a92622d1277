use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("eta = {eta} lies outside the background domain [{min}, {max}]")]
    OutOfDomain { eta: f64, min: f64, max: f64 },

    #[error("invalid background: {0}")]
    InvalidBackground(String),

    #[error("tolerance {0} outside the admissible range [1e-13, 1e-6]")]
    InvalidTolerance(f64),

    #[error("step size underflow at eta = {eta}: background too ill-conditioned for the requested tolerance")]
    StepUnderflow { eta: f64 },

    #[error("integration exceeded {steps} steps before reaching eta = {eta}")]
    TooManySteps { steps: usize, eta: f64 },

    #[error("state time {state} does not match propagator start time {propagator}")]
    TimeMismatch { state: f64, propagator: f64 },

    #[error("mode mismatch: {left} vs {right}")]
    ModeMismatch { left: u64, right: u64 },

    #[error("invalid structure family `{family}`: {reason}")]
    InvalidFamily { family: String, reason: String },

    #[error("sequence `{label}` has too few terms for a tail analysis ({terms} terms spanning {decades:.2} decades)")]
    TooFewTerms { label: String, terms: usize, decades: f64 },

    #[error("invalid sequence `{label}`: {reason}")]
    InvalidSequence { label: String, reason: String },

    #[error("uniqueness verdict needs at least 3 time pairs with distinct eta - eta0, got {0}")]
    TooFewTimePairs(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature failed to converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("bounded sum violated at M = {m}: partial sum {partial} exceeds bound {bound}")]
    BoundViolation { m: u64, partial: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
