use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("polynomial is not symmetric")]
    NotSymmetric,
    #[error("polynomial is not invariant under signed permutations")]
    NotInvariant,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("enumeration budget of {0} canonical forms exceeded")]
    Budget(u64),
    #[error("lattice error: {0}")]
    Lattice(String),
    #[error("lattice leaves the working window of radius {0}")]
    OutOfRange(u32),
    #[error("orbit is not normalized: v(c) = {0}")]
    NotNormalized(i64),
    #[error("support criteria disagree: {0}")]
    CriteriaDisagree(String),
    #[error("unimplemented regime: {0}")]
    UnimplementedRegime(String),
    #[error("identity check failed: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Budget(_) | Error::Precision(_) | Error::OutOfRange(_) => 3,
            Error::InvalidConfig(_)
            | Error::InvalidInput(_)
            | Error::Range(_)
            | Error::Parse(_)
            | Error::UnimplementedRegime(_)
            | Error::DimensionMismatch { .. }
            | Error::RankMismatch(..) => 2,
            _ => 1,
        }
    }
}
