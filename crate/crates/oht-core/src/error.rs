use thiserror::Error;

use crate::hypothesis::OutlierSet;

/// Errors across distribution handling, hypothesis enumeration, scoring,
/// theory quantities and the exponent solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alphabet mismatch: size {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("alphabet must have at least 2 symbols (got {0})")]
    AlphabetTooSmall(usize),
    #[error("support violation: p[{index}] = {p} > 0 but q[{index}] = 0")]
    SupportViolation { index: usize, p: f64 },
    #[error("negative mass {mass} at index {index}")]
    NegativeMass { index: usize, mass: f64 },
    #[error("mass vector sums to {0}, outside the 1e-12 normalization tolerance")]
    NotNormalized(f64),
    #[error("mass vector has length {got}, alphabet has {expected} symbols")]
    MassLength { expected: usize, got: usize },
    #[error("unknown symbol {0} for alphabet of size {1}")]
    UnknownSymbol(usize, usize),
    #[error("unknown symbol character {0:?}")]
    UnknownChar(char),
    #[error("empty sequence")]
    EmptySequence,
    #[error("weights sum to {0}, expected 1 within 1e-12")]
    WeightSumViolation(f64),
    #[error("weight/component count mismatch: {weights} weights, {components} components")]
    MixtureArity { weights: usize, components: usize },
    #[error("empty mixture")]
    EmptyMixture,

    #[error("panel size M must be at least 3 (got {0})")]
    MTooSmall(usize),
    #[error("panel size M = {0} exceeds the enumeration guard {1}")]
    MTooLarge(usize, usize),
    #[error("outlier set must be nonempty")]
    EmptyOutlierSet,
    #[error("index {index} out of range for M = {m}")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("outlier set of size {got} exceeds the maximum {max} for M = {m}")]
    TooManyOutliers { got: usize, max: usize, m: usize },
    #[error("index {0} not in set")]
    IndexNotInSet(usize),
    #[error("set {0} not in hypothesis space")]
    SetNotInSpace(OutlierSet),

    #[error("panel length mismatch: expected {expected} entries, got {got}")]
    PanelLength { expected: usize, got: usize },
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("threshold must be positive (got {0})")]
    NonPositiveThreshold(f64),

    #[error("scenario requires {expected} anomalous distributions, got {got}")]
    AnomalyCount { expected: usize, got: usize },
    #[error("distribution must be strictly positive (zero mass at symbol {0})")]
    NotStrictlyPositive(usize),
    #[error("non-positive mass at symbol {0} in a log-ratio")]
    NonPositiveMass(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not positive semidefinite: min eigenvalue {0}")]
    NotPsd(f64),

    #[error("solver did not converge: best value {best}, constraint gap {gap}")]
    SolverNonConvergence { best: f64, gap: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
