use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension n = {n} (need n >= {min})")]
    InvalidDimension { n: usize, min: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{what} violates its invariant (residual {residual:e})")]
    InvariantViolation { what: &'static str, residual: f64 },

    #[error("parameter {name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("point is not on the slice |v_1| = sqrt(c) (off by {offset:e})")]
    NotOnSlice { offset: f64 },

    #[error("chart {chart} is degenerate at this point (|v_k| = {modulus})")]
    DegenerateChart { chart: usize, modulus: f64 },

    #[error("matrix is not antisymmetric (residual {residual:e})")]
    NotAntisymmetric { residual: f64 },

    #[error("unknown subalgebra kind `{0}` (expected u, su-bottom or su-top)")]
    InvalidKind(String),
}

pub type Result<T> = std::result::Result<T, Error>;
