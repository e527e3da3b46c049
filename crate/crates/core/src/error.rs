use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid signal specification: {0}")]
    InvalidSignal(String),

    #[error("invalid sampling scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row}, threshold {threshold:.3e})")]
    NotPositiveDefinite { row: usize, pivot: f64, threshold: f64 },

    #[error("eigen/singular value iteration did not converge (order {order}, max |a_ij| = {max_abs:.3e})")]
    ConvergenceFailure { order: usize, max_abs: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rate regime violated: {0}")]
    RateRegime(String),

    #[error("divisibility requirement violated: N = {n} does not divide 2*N1 - 1 = {value}")]
    Divisibility { n: usize, value: usize },

    #[error("sampling instants collide after reduction mod T (indices {first} and {second})")]
    SchemeCollision { first: usize, second: usize },

    #[error("construction too large: |K| = {size} exceeds cap {cap}")]
    SizeOverflow { size: usize, cap: usize },

    #[error("noise variance sigma^2 must be positive for MMSE estimation")]
    NoiseRequired,

    #[error("filter violates passivity: |H|^2 = {gain_sq:.6} at harmonic {harmonic}")]
    FilterViolation { harmonic: usize, gain_sq: f64 },

    #[error("operation requires equal coefficient variances p_l = p")]
    UniformVarianceRequired,

    #[error("scheme is not optimal for the requested regime: {0}")]
    RegimeMismatch(String),

    #[error("search space too large: C({t}, {m}) = {count} exceeds {limit}")]
    SearchSpaceTooLarge { t: usize, m: usize, count: u128, limit: u128 },
}

impl Error {
    /// Numerical breakdowns as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. } | Error::ConvergenceFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
