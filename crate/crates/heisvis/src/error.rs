//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by algebra, structure extraction, metric evaluation and
/// classification. Spec-file parsing has its own error type in [`crate::report`].
#[derive(Debug, Clone, Error)]
pub enum HeisError {
    /// Operands live on Heisenberg groups of different dimension, or a
    /// coordinate vector has the wrong length.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Coordinates contain NaN or infinities.
    #[error("non-finite coordinate: {0}")]
    NonFinite(String),

    /// The Leibniz identity fails beyond tolerance; the matrix is not a
    /// derivation of the Heisenberg algebra.
    #[error("not a derivation: max Leibniz defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotDerivation { defect: f64, tol: f64 },

    /// The eigenvector matrix does not span (defective matrix), or the QR
    /// iteration failed to converge within its iteration cap.
    #[error("matrix is not diagonalizable: {0}")]
    NonDiagonalizable(String),

    /// The spectrum is not real.
    #[error("complex eigenvalues detected: {0}")]
    ComplexSpectrum(String),

    /// All eigenvalues must be strictly positive.
    #[error("non-positive eigenvalue {0}")]
    NonPositiveEigenvalue(f64),

    /// The top eigenspace is not the center line of the algebra.
    #[error("top eigenspace is not the center: {0}")]
    CenterMismatch(String),

    /// A pairing matrix between complementary blocks (or the middle skew
    /// pairing) is numerically singular, so no adapted basis exists.
    #[error("degenerate eigenspace pairing: {0}")]
    DegeneratePairing(String),

    /// Input point does not lie in the required subspace/subgroup.
    #[error("element not in required subgroup: {0}")]
    NotInSubgroup(String),

    /// The two structures fail the quasiisometry criterion, so no boundary
    /// isometry exists between them.
    #[error("structures are not equivalent: {0}")]
    NotEquivalent(String),

    /// A stated hypothesis of the algorithm is violated (for the chain metric:
    /// smallest effective exponent below 1).
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    /// A query point lies outside the sampling box of a net.
    #[error("point outside sampling box: {0}")]
    OutOfBox(String),

    /// Catch-all for invalid arguments (empty radius lists, zero sample
    /// counts, non-positive scale ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, HeisError>;
