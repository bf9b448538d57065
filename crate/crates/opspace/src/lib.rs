//! Matrix norms over finite-dimensional Schatten classes.
//!
//! This crate computes the matrix-level norms that operator-space theory
//! attaches to block matrices `[x_ij]` whose entries live in a Schatten
//! class `S_p^m`:
//!
//! - exact values where closed forms exist (`p = ∞` via the operator norm
//!   of the flattened matrix, `p = 2` via the Gram-arrangement formula of
//!   the operator Hilbert space),
//! - certified lower bounds elsewhere, produced by seeded alternating
//!   ascent over the compression `a·x·b` and always accompanied by a
//!   re-checkable witness,
//! - independent upper bounds from complex interpolation between the
//!   computable endpoints.
//!
//! On top of the norm machinery sit verification campaigns ([`crplab`])
//! that measure how badly the entrywise transpose `[x_ij] ↦ [x_ji]` can
//! inflate these norms — the column-row growth `n^{|p-2|/(2p)}` — plus a
//! command-line front end ([`cli`]) with reproducible seeding and
//! machine-readable output.
//!
//! Entry points:
//!
//! - [`ComplexMatrix`], [`PExponent`] — dense complex matrices and
//!   Schatten exponents ([`matcore`]);
//! - [`BlockMatrix`] — elements of `M_{n,q}(E)` with matrix entries
//!   ([`opmatrix`]);
//! - [`ohnorm::oh_matrix_norm`] — exact norms over `S_2` / OH;
//! - [`pnorm::mn_schatten_norm`] — the general-`p` estimator;
//! - [`witnesses`] — the explicit matrix families driving every bound;
//! - [`crplab`] — lemma checks, ratio campaigns, property trials.

pub mod cli;
pub mod crplab;
pub mod matcore;
pub mod ohnorm;
pub mod opmatrix;
pub mod pnorm;
pub(crate) mod stream;
pub mod witnesses;

pub use matcore::{ComplexMatrix, PExponent};
pub use opmatrix::BlockMatrix;
pub use pnorm::{Method, NormEstimate, OptimizerConfig, Witness};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("unsupported exponent: {0}")]
    UnsupportedExponent(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("missing endpoint bound: {0}")]
    MissingEndpoint(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
