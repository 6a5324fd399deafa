//! Deterministic random streams derived from a master seed.
//!
//! Every random draw in the crate comes from a ChaCha generator keyed by a
//! master seed plus an integer path, so independent pieces of an experiment
//! (each block of an operator, each trial of a grid cell) get statistically
//! independent streams that do not depend on execution order or thread
//! count. Paths are hashed with SHA-256 over fixed-width words, which keeps
//! distinct paths collision-free and the mapping stable across builds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Top-level branch labels for the seed tree.
pub mod tag {
    /// The master measurement matrix of a phase-transition run.
    pub const MASTER: u64 = 1;
    /// One block of a block-diagonal operator.
    pub const BLOCK: u64 = 2;
    /// A randomly drawn orthobasis.
    pub const BASIS: u64 = 3;
    /// A sparse test signal.
    pub const SIGNAL: u64 = 4;
    /// A sampled sparsity support.
    pub const SUPPORT: u64 = 5;
    /// A sampled measurement operator outside the phase harness.
    pub const OPERATOR: u64 = 6;
}

/// Generator for the stream `(master_seed, path...)`.
pub fn stream_rng(master_seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    for word in path {
        hasher.update(word.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Collapses a stream to a single `u64`, for APIs that take a plain seed.
pub fn derive_seed(master_seed: u64, path: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    for word in path {
        hasher.update(word.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
