use num_bigint::BigInt;
use thiserror::Error;

/// Errors for construction, linear algebra, and experiment plumbing.
///
/// Step-level conditions that end an expansion (ties, zero weights,
/// coinciding end labels) are not errors; they live in
/// [`crate::induction::StepError`] and are recorded as termination states.
#[derive(Debug, Error)]
pub enum Error {
    #[error("label `{label}` occurs {count} time(s); every label must occur exactly twice")]
    LabelCount { label: String, count: usize },

    #[error("both rows of an exchange must be nonempty")]
    EmptyRow,

    #[error("weight vector does not match the exchange alphabet: {detail}")]
    AlphabetMismatch { detail: String },

    #[error("carried polytope is empty: only the zero cone satisfies the constraints")]
    EmptyPolytope,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not unimodular: determinant {det} (expected 1)")]
    Unimodularity { det: BigInt },

    #[error("negative entry at ({row}, {col}); transition matrices are nonnegative")]
    NegativeEntry { row: usize, col: usize },

    #[error("projective image is zero; zero columns on the support: {columns:?}")]
    ZeroImage { columns: Vec<String> },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("stage range {lo}..{hi} invalid for a trace of length {len}")]
    Range { lo: usize, hi: usize, len: usize },

    #[error("standard error {se:.3e} exceeds 10% of the tested gap {gap:.3e}")]
    InsufficientSamples { se: f64, gap: f64 },

    #[error("stage budget exhausted after level {level}")]
    BudgetExhausted {
        level: usize,
        partial: Box<crate::experiments::DecayExperiment>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
