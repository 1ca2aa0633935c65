//! Error types shared across the crate.

use thiserror::Error;

/// Errors from state construction and entanglement computations.
#[derive(Debug, Clone, Error)]
pub enum FcsError {
    /// The fixed-point nullspace has dimension greater than one: the
    /// invariant auxiliary state is not unique.
    #[error("fixed-point nullspace is degenerate (dimension {dim})")]
    NullspaceDegenerate { dim: usize },

    /// No singular value of the fixed-point map fell below the nullspace
    /// tolerance; the solve failed numerically.
    #[error("fixed-point nullspace is empty (smallest relative singular value {smallest:e})")]
    NullspaceEmpty { smallest: f64 },

    /// The normalized fixed-point candidate has a genuinely negative
    /// eigenvalue and is not a density matrix.
    #[error("invariant state is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPositive { min_eig: f64 },

    /// Requested window length exceeds the configured cap.
    #[error("window of {n} sites exceeds the cap of {cap}")]
    CapExceeded { n: usize, cap: usize },

    /// Invalid site subset passed to a partial trace.
    #[error("bad site subset: {reason}")]
    BadSubset { reason: String },

    /// A matrix did not have the expected dimensions.
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    BadShape {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    /// Bloch component decomposition is only available for b in {2, 3}.
    #[error("Bloch components are unsupported for dimension b={b}")]
    UnsupportedDimension { b: usize },

    /// A parameter fell outside its admissible range.
    #[error("value {value} is outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    /// Angle vectors of the wrong length for the auxiliary dimension.
    #[error("parameter vector for b={b} needs {expected_alpha} alpha and {expected_phi} phi angles, got {got_alpha} and {got_phi}")]
    BadParameterCount {
        b: usize,
        expected_alpha: usize,
        expected_phi: usize,
        got_alpha: usize,
        got_phi: usize,
    },

    /// Kraus completion failed for a non-nilpotent probe pair.
    #[error("no unitality-completing v2 exists: 1 - v1 v1^dag has eigenvalue {min_eig:e}")]
    InvalidCompletion { min_eig: f64 },
}

/// Errors from the optimization layer.
#[derive(Debug, Clone, Error)]
pub enum OptimizerError {
    /// The objective could not be evaluated at the requested point.
    #[error("objective evaluation failed: {0}")]
    SolveFailed(#[from] FcsError),

    /// Every start of a multi-start run failed.
    #[error("all {n_starts} optimization starts failed")]
    AllStartsFailed { n_starts: usize },

    /// An annealing configuration field is out of range.
    #[error("invalid annealing config: {reason}")]
    BadConfig { reason: String },
}
