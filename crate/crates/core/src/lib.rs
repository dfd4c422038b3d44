//! Numerical engine for bounding the Kolmogorov distance between binomial
//! and normal distributions, and for certifying suprema of the normalized
//! discrepancy `T_n(p) = sqrt(n) * Delta_n(p) / rho(p)` over continuous
//! parameter ranges.
//!
//! The crate is organized around five subsystems:
//!
//! * [`numerics`] — stable binomial pmf/cdf kernels and the normal cdf/pdf,
//!   with explicit precision targets;
//! * [`discrepancy`] — the pointwise and maximal discrepancies `Delta_{n,i}`,
//!   `Delta_n`, the normalized quantity `T_n(p)`, and the restricted
//!   evaluation window for large `n`;
//! * [`certify`] — the Lipschitz modulus `L(p)` and the machinery that turns
//!   finite-grid maxima into certified bounds over whole `p`-intervals;
//! * [`tailbounds`] — closed-form majorants valid for all `n` above a
//!   threshold, plus the small-`p` bounds that close the parameter range;
//! * [`scan`] — the parallel, checkpointable sweep over `(n, p)` and the
//!   assembly of global certificates.

pub mod certify;
pub mod discrepancy;
pub mod numerics;
pub mod scan;
pub mod tailbounds;

pub use numerics::{BinomialPoint, PrecisionPolicy};

/// Errors shared by all subsystems.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A scan specification is internally inconsistent.
    #[error("invalid scan spec: {0}")]
    Spec(String),
    /// A certificate was requested over a range the inputs do not cover.
    #[error("coverage gap: {0}")]
    CoverageGap(String),
    /// A checkpoint file failed its content digest or framing checks.
    #[error("checkpoint corrupted: {0}")]
    CheckpointCorrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
