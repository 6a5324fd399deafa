//! Compressive sensing with block-diagonal measurement operators.
//!
//! A length-JN signal is split into J blocks of length N and each block is
//! measured by an M x N matrix: either every block gets an independent draw
//! (distinct block diagonal, DBD) or a single draw is repeated (repeated
//! block diagonal, RBD). How well such an operator preserves the geometry of
//! signals that are sparse in a basis U depends on how the energy of U's
//! columns spreads across blocks. This crate provides the basis
//! constructions, the coherence statistics that quantify that spreading,
//! exact small-scale restricted-isometry computations, an ADMM basis-pursuit
//! solver, and the Monte Carlo experiment harness behind the `blockrip` CLI.

pub mod bases;
pub mod chaos;
pub mod coherence;
pub mod harness;
pub mod operators;
pub mod recovery;
pub mod ric;
pub mod streams;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("basis is not orthonormal: max |U*U - I| = {defect:.3e} exceeds {tol:.1e}")]
    NotOrthonormal { defect: f64, tol: f64 },
    #[error(
        "enumerating {needed} supports exceeds the cap of {cap}; \
         use monte_carlo_ric for a sampled lower bound"
    )]
    EnumerationCap { needed: u128, cap: u128 },
    #[error("measure/adjoint are not mutual adjoints: relative defect {defect:.3e}")]
    AdjointMismatch { defect: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
