//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Self-tuning bandwidth collapsed to zero (coincident points).
    #[error("degenerate self-tuning scale: vertex {vertex} has zero distance to its {m}-th nearest neighbor")]
    DegenerateScale { vertex: usize, m: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("negative weight {weight} on edge ({i}, {j})")]
    NegativeWeight { i: usize, j: usize, weight: f64 },

    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),

    #[error("conflicting weights for edge ({i}, {j}): {first} vs {second}")]
    ConflictingWeights {
        i: usize,
        j: usize,
        first: f64,
        second: f64,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// The energy T/B is undefined for constant signals (B = 0).
    #[error("energy is undefined for constant signals")]
    UndefinedEnergy,

    #[error("graph is disconnected ({components} connected components)")]
    Disconnected { components: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("graph too large for exhaustive enumeration: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The inner prox solver hit its iteration budget above tolerance.
    #[error("prox solver stopped at gap {gap:.3e} > tol {tol:.3e} after {iterations} iterations")]
    ProxNotConverged {
        gap: f64,
        tol: f64,
        iterations: usize,
    },

    /// A runtime check of one of the descent estimates failed.
    #[error("lemma check failed: {0}")]
    LemmaViolation(String),

    #[error("eigenvector iteration did not converge within {0} iterations")]
    EigenNotConverged(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 1 usage/IO, 2 numerical failure,
    /// 3 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::DegenerateScale { .. }
            | Error::Parse { .. }
            | Error::NegativeWeight { .. }
            | Error::SelfLoop(_)
            | Error::ConflictingWeights { .. }
            | Error::LengthMismatch { .. }
            | Error::Disconnected { .. }
            | Error::InvalidPartition(_)
            | Error::TooLarge { .. }
            | Error::Io(_) => 1,
            Error::UndefinedEnergy
            | Error::Numerical(_)
            | Error::LemmaViolation(_)
            | Error::EigenNotConverged(_)
            | Error::ProxNotConverged { .. } => 2,
        }
    }
}
