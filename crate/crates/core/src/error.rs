use thiserror::Error;

use crate::algebra::AlgebraKind;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("algebra kind mismatch: {0:?} vs {1:?}")]
    KindMismatch(AlgebraKind, AlgebraKind),
    #[error("element is singular (pivot {pivot:e} below threshold)")]
    Singular { pivot: f64 },
    #[error("logarithm undefined: |x - I| = {0} >= 1")]
    OutOfDomain(f64),
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("invalid well-ordered set: {0}")]
    InvalidSet(String),
    #[error("point is not a limit element")]
    NotLimit,
    #[error("no successor above the top element")]
    NoSuccessor,
    #[error("t = {t} lies outside [{a}, {b}]")]
    OutOfInterval { t: f64, a: f64, b: f64 },
    #[error("ordinal coordinates exceed floating-point resolution")]
    Precision,
    #[error("left-limit mismatch at a limit element (distance {0:e})")]
    LimitMismatch(f64),
    #[error("jump factor is not invertible")]
    NotInvertibleJump,
    #[error("value is not idempotent (|z z - z| = {0:e})")]
    NotIdempotent(f64),
    #[error("value is not an orthogonal projection (defect {0:e})")]
    NotProjection(f64),
    #[error("primitive mismatch at t = {t}: |F(t) - F(a) - integral| = {gap:e}")]
    PrimitiveMismatch { t: f64, gap: f64 },
    #[error("point is off the surface (distance {0:e})")]
    OffSurface(f64),
    #[error("unknown catalog entry: {0}")]
    UnknownCatalog(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
