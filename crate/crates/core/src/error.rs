use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid modulus {0}: must be at least {1}")]
    InvalidModulus(String, u64),

    #[error("enumeration of {size} elements exceeds the cap of {cap}")]
    EnumerationTooLarge { size: BigUint, cap: u64 },

    #[error("modulus mismatch: expected {expected}, found {found}")]
    ModulusMismatch { expected: String, found: String },

    #[error("matrix {0} is not invertible")]
    NotInvertible(String),

    #[error("{m} does not divide {n}")]
    NotADivisor { m: String, n: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular input: {0}")]
    Singular(String),

    #[error("generator #{index} ({generator}) does not stabilize the lattice")]
    NotInvariant { index: usize, generator: String },

    #[error("enumeration ceiling {ceiling} exceeds the budget of {budget}")]
    CeilingTooLarge { ceiling: BigUint, budget: u64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate label {label:?}")]
    DuplicateLabel { line: usize, label: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
