use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("series did not reach its truncation tolerance within {max_terms} terms")]
    Truncation { max_terms: usize },

    #[error("root equation shows no sign change on the scan grid (n = {n})")]
    NoSignChange { n: u64 },

    #[error(
        "root equation shows {count} sign changes on the scan grid (n = {n}); root is not unique"
    )]
    AmbiguousRoot { n: u64, count: usize },

    #[error("fundamental spline system is numerically singular (pivot {pivot} of {size})")]
    SplineNotUnique { pivot: usize, size: usize },

    #[error("sin(n*y0 - beta*pi/2) = {value:e} is too close to zero to fix the sign s")]
    DegenerateSign { value: f64 },

    #[error("n*ln(1/q) = {scale:.3} exceeds the supported envelope {limit}")]
    RangeUnsupported { scale: f64, limit: f64 },

    #[error("q^n underflows binary64 (n*ln(1/q) = {scale:.3})")]
    Underflow { scale: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("vector has no nonzero entries")]
    AllZeros,
}

impl Error {
    /// Short stable identifier, used in machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Truncation { .. } => "truncation",
            Error::NoSignChange { .. } => "no_sign_change",
            Error::AmbiguousRoot { .. } => "ambiguous_root",
            Error::SplineNotUnique { .. } => "spline_not_unique",
            Error::DegenerateSign { .. } => "degenerate_sign",
            Error::RangeUnsupported { .. } => "range_unsupported",
            Error::Underflow { .. } => "underflow",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::AllZeros => "all_zeros",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
