use alloc::string::String;

/// Errors raised by the precoder-design library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// The candidate point carries (numerically) zero power at an active base station.
    #[error("degenerate retraction at base station {bs}: candidate power {power:e}")]
    DegenerateRetraction { bs: usize, power: f64 },
    #[error("numerical domain error: {0}")]
    Numerical(String),
    #[error("{kind} precoder infeasible: {reason}")]
    BaselineInfeasible { kind: &'static str, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;
