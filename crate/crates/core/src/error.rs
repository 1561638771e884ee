use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is out of range (need an odd prime 3 <= p <= 2^31 - 1)")]
    ModulusOutOfRange(u64),
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },
    #[error("residue {value} is out of range for p = {p}")]
    ResidueOutOfRange { value: u64, p: u64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("empty operand: {0}")]
    EmptySet(&'static str),
    #[error("{d} does not divide p - 1 = {order}")]
    NotDivisor { d: u64, order: u64 },
    #[error("duplicate element {0}")]
    Duplicate(String),
    #[error("arrangement of size {requested} exceeds the budget of {budget}")]
    BudgetExceeded { requested: usize, budget: usize },
    #[error("set is not invariant under the subgroup: {0}")]
    NotInvariant(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("checker {checker} cannot run with generator {generator}: {reason}")]
    Incompatible {
        checker: String,
        generator: String,
        reason: String,
    },
    #[error("geometry invariant violated: {0}")]
    Geometry(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
