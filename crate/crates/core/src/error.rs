use alloc::string::String;

/// Errors raised by the analysis kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{name} is out of domain: {value}")]
    Domain { name: &'static str, value: f64 },

    #[error("series did not converge within {0} terms")]
    NonConvergence(usize),

    #[error("length mismatch: expected {expected} channels, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("main channel cannot sustain target rate")]
    InfeasibleTarget,

    #[error("no sampled allocation had a positive denominator")]
    OracleInconclusive,

    #[error("every outer instance was in main-channel outage")]
    NoData,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { name, value })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { name, value })
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape { expected, actual })
    }
}
