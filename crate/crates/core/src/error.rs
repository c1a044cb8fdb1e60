use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("level k = {0} is out of range (need k >= {1})")]
    InvalidLevel(u32, u32),

    #[error("{m} is not a class of [3^{k}] (need 0 <= m < 3^{k} and m = 2 mod 3)")]
    InvalidClass { k: u32, m: u64 },

    #[error("target a = {0} must be positive and not divisible by 3")]
    InvalidTarget(u64),

    #[error("trajectory of n = {n} did not resolve within {budget} steps")]
    BudgetExceeded { n: u64, budget: u64 },

    #[error("integer overflow while iterating from n = {0}")]
    Overflow(u64),

    #[error("node {0} cannot be split: {1}")]
    NotSplittable(usize, &'static str),

    #[error("deletion removed every child of m-node {0}")]
    EmptyMinimum(usize),

    #[error("elimination exceeded {0} splits")]
    IterationLimit(u64),

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("lambda = {0} is outside [1, 2]")]
    LambdaOutOfRange(String),

    #[error("certificate is missing a value for {0}")]
    MissingVariable(String),

    #[error("certificate is for k = {cert}, program is for k = {lp}")]
    LevelMismatch { cert: u32, lp: u32 },

    #[error("certificate family {cert} does not match program family {lp}")]
    FamilyMismatch { cert: String, lp: String },

    #[error("certification failed at the maximum precision of {0} bits")]
    PrecisionExhausted(u32),

    #[error("constraint {id} fails with slack {slack:e}")]
    ConstraintViolated { id: usize, slack: f64 },

    #[error("target a = {0} lies on the cycle {{1, 2}}")]
    CycleTarget(u64),

    #[error("certificate is not marked verified")]
    UnverifiedCertificate,
}

pub type Result<T> = std::result::Result<T, Error>;
