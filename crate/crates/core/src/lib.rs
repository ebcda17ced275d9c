//! Kolmogorov widths of Poisson-kernel convolution classes: kernels, the
//! phase root, best-approximation values, certification thresholds, the
//! fundamental SK-spline, the error terms of its derivative, and cyclic
//! determinant checks.

pub mod cvd;
pub mod error;
pub mod gammacert;
pub mod kernels;
pub mod linalg;
pub mod numeric;
pub mod rootfind;
pub mod skspline;
pub mod thresholds;
pub mod widths;

pub use error::{Error, Result};
pub use kernels::{KernelParams, SeriesPolicy};
