use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("generator must be a non-empty square matrix (got {rows} rows, row {bad_row} has {cols} columns)")]
    NotSquare {
        rows: usize,
        bad_row: usize,
        cols: usize,
    },
    #[error("generator entry q[{row}][{col}] = {value} is not finite")]
    NonFiniteRate { row: usize, col: usize, value: f64 },
    #[error("off-diagonal generator entry q[{row}][{col}] = {value} is negative")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("generator row {row} sums to {sum}, expected 0")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("transition matrix entry P[{row}][{col}] = {value} is negative beyond roundoff")]
    NegativeProbability { row: usize, col: usize, value: f64 },
    #[error("time span {0} must be finite and nonnegative")]
    InvalidTimeSpan(f64),
    #[error("generator is reducible: {0}")]
    Reducible(String),
    #[error("regime index {index} out of range for {n_regimes} regimes")]
    InvalidRegime { index: usize, n_regimes: usize },

    #[error("horizon T = {0} must be finite and positive")]
    InvalidHorizon(f64),
    #[error("step Δ = {delta} invalid for horizon T = {horizon} (need 0 < Δ ≤ T)")]
    InvalidStep { delta: f64, horizon: f64 },
    #[error("jump times not strictly increasing at position {index}")]
    UnsortedJumps { index: usize },
    #[error("jump time {time} outside (0, {horizon}]")]
    JumpOutOfRange { time: f64, horizon: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite state{}", match .step { Some(k) => format!(" at step {k}"), None => String::new() })]
    NonFinite { step: Option<usize> },

    #[error("ruin is not certain (η = {eta}, ρ = {rho}); closed-form expected ruin time needs ρ < 0")]
    NotRuinCertain { eta: f64, rho: f64 },
    #[error("expected exactly one negative real root, found {count}")]
    RootCountViolation { count: usize },
    #[error("denominator vanishes in {0}")]
    DenominatorZero(&'static str),
    #[error("linear system is singular (pivot {pivot:e} at column {column})")]
    SingularSystem { column: usize, pivot: f64 },

    #[error("cannot aggregate an empty sample")]
    Empty,
}
