use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum LcmaError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unsupported modulus {0}: must be a power of two or a prime")]
    Modulus(u64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration of {size} candidates exceeds the cap of {cap}; use the list sphere decoder")]
    EnumerationCap { size: u128, cap: u128 },

    #[error("stream {stream} has {support} non-zero coefficients, above the support cap {cap}")]
    SupportCap { stream: usize, support: usize, cap: usize },

    #[error("code construction failed: {0}")]
    Construction(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LcmaError>;
