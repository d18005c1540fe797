use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty probability vector")]
    Empty,
    #[error("negative probability {value} at symbol {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1 within 1e-12")]
    SumNotOne { sum: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("no channel satisfies the constraints (min max violation {violation:e})")]
    Infeasible { violation: f64 },
    #[error("solver hit its iteration cap")]
    MaxIterations,
    #[error("reconstruction symbol {symbol} has Q > 0 for input {input} but zero marginal mass")]
    AbsoluteContinuityViolated { input: usize, symbol: usize },
    #[error("candidate budget of {budget} exhausted before the stopping rule fired")]
    BudgetExhausted { budget: u64 },
    #[error("Elias-delta cannot encode zero")]
    ZeroIndex,
    #[error("bitstream truncated")]
    Truncated,
    #[error("malformed bitstream: {0}")]
    Malformed(String),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),
}
