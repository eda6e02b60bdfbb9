use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative probability {prob} at atom {index}")]
    NegativeProb { index: usize, prob: f64 },
    #[error("total probability mass is {mass}, expected 1")]
    MassNotOne { mass: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("distribution has no atoms")]
    Empty,
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("invalid permutation of length {0}")]
    BadPermutation(usize),
    #[error("bad probability vector: {0}")]
    BadProbabilityVector(String),
    #[error("evaluation grid has {size} points, cap is {cap}")]
    GridTooLarge { size: u128, cap: u128 },
    #[error("enumeration exceeded cap {cap}")]
    EnumerationTooLarge { cap: usize },
    #[error("linear program failed: {0}")]
    LpFailure(String),
    #[error("linear program is infeasible")]
    LpInfeasible,
    #[error("numeric breakdown in simplex: {0}")]
    NumericBreakdown(String),
    #[error("problem size {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("wrong distribution family: {0}")]
    WrongFamily(String),
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eig})")]
    NotPsd { min_eig: f64 },
    #[error("distribution is not a joint mix")]
    NotJointMix,
    #[error("distribution is not exchangeable")]
    NotExchangeable,
    #[error("inconsistent decomposition components: {0}")]
    InconsistentComponents(String),
    #[error("bad subset: {0}")]
    BadSubset(String),
    #[error("uncertainty set is not permutation-closed")]
    NotSymmetricUncertainty,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
