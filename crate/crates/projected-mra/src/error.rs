//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("signal length {0} is not an odd integer >= 7")]
    InvalidLength(usize),

    #[error("{context} contains a non-finite value")]
    NonFinite { context: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("moment set has kind {got}, expected {expected}")]
    KindMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("first moment is not constant across coordinates (relative spread {spread:.3e})")]
    NonUniformFirstMoment { spread: f64 },

    #[error("frequency {k} has magnitude {value:.3e} below the floor {floor:.3e}")]
    VanishingMagnitude { k: usize, value: f64, floor: f64 },

    #[error("second cosine moment diagonal entry {k} is strongly negative ({value:.3e})")]
    NegativeSecondMoment { k: usize, value: f64 },

    #[error("matrix inverse verification failed (max residual {residual:.3e})")]
    SingularMatrix { residual: f64 },

    #[error("residual function returned a non-finite value at the initial point")]
    NonFiniteResidual,

    #[error("reconstructed signal has relative imaginary residue {residue:.3e}")]
    ImaginaryResidue { residue: f64 },

    #[error("need at least {needed} noise levels in range, found {got}")]
    TooFewSigmaLevels { needed: usize, got: usize },

    #[error("no records match the requested selection")]
    EmptySelection,

    #[error("CSV parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
