//! Coherence statistics of a basis relative to a block partition.
//!
//! Two numbers control how many block-diagonal measurements a basis needs.
//! Entry coherence mu scales the largest entry magnitude to [1, sqrt(JN)]
//! and is what distinct-block operators care about; block coherence gamma
//! measures how unevenly a column's energy spreads across blocks via the
//! spectral norm of its N x J reshape and is the repeated-block analogue.
//! Flat bases (Fourier, Haar-random) sit near the bottom of these ranges
//! and need proportionally fewer measurements.

use crate::bases::Orthobasis;
use crate::{C64, Error, Result};
use nalgebra::{DMatrix, DVector};

/// Coherence summary of a basis.
#[derive(Clone, Copy, Debug)]
pub struct CoherenceReport {
    /// sqrt(n_total) times the largest entry magnitude; in [1, sqrt(n_total)].
    pub mu: f64,
    /// sqrt(n_blocks) times the largest reshaped-column spectral norm;
    /// in [1, sqrt(n_blocks)].
    pub gamma: f64,
    /// min(sqrt(n_blocks), mu), the sharper of the two entry-based factors.
    pub mu_tilde: f64,
    /// Row and column of the largest-magnitude entry (lexicographically
    /// first on ties).
    pub argmax_entry: (usize, usize),
    /// Column with the largest reshaped spectral norm (lowest index on ties).
    pub argmax_column: usize,
}

/// Largest singular value, computed by full SVD.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn max_entry(basis: &Orthobasis) -> (f64, (usize, usize)) {
    let entries = basis.entries();
    let mut best = f64::NEG_INFINITY;
    let mut arg = (0, 0);
    for p in 0..entries.nrows() {
        for q in 0..entries.ncols() {
            let mag = entries[(p, q)].norm();
            if mag > best {
                best = mag;
                arg = (p, q);
            }
        }
    }
    (best, arg)
}

fn max_reshaped_norm(basis: &Orthobasis) -> (f64, usize) {
    let part = basis.partition();
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    let mut reshaped = DMatrix::<C64>::zeros(part.block_len, part.n_blocks);
    for col in 0..part.n_total {
        for j in 0..part.n_blocks {
            for row in 0..part.block_len {
                reshaped[(row, j)] = basis.entries()[(j * part.block_len + row, col)];
            }
        }
        let norm = spectral_norm(&reshaped);
        if norm > best {
            best = norm;
            arg = col;
        }
    }
    (best, arg)
}

/// Entry coherence mu(U) = sqrt(n_total) * max |U(p, q)|.
pub fn coherence(basis: &Orthobasis) -> f64 {
    let (mag, _) = max_entry(basis);
    (basis.n_total() as f64).sqrt() * mag
}

/// The signal U * alpha arranged block by block: an N x J matrix whose
/// column j is U_j * alpha.
pub fn block_reshape(alpha: &DVector<C64>, basis: &Orthobasis) -> DMatrix<C64> {
    let part = basis.partition();
    assert_eq!(alpha.len(), part.n_total, "coefficient length mismatch");
    let mut out = DMatrix::<C64>::zeros(part.block_len, part.n_blocks);
    for j in 0..part.n_blocks {
        out.column_mut(j).copy_from(&basis.apply_block(j, alpha));
    }
    out
}

/// Block coherence gamma(U) = sqrt(n_blocks) * max over columns of the
/// spectral norm of the column's N x J reshape.
pub fn block_coherence(basis: &Orthobasis) -> f64 {
    let (norm, _) = max_reshaped_norm(basis);
    (basis.partition().n_blocks as f64).sqrt() * norm
}

/// Full coherence summary; see [`CoherenceReport`].
pub fn coherence_report(basis: &Orthobasis) -> CoherenceReport {
    let part = basis.partition();
    let (mag, argmax_entry) = max_entry(basis);
    let (norm, argmax_column) = max_reshaped_norm(basis);
    let mu = (part.n_total as f64).sqrt() * mag;
    let gamma = (part.n_blocks as f64).sqrt() * norm;
    CoherenceReport {
        mu,
        gamma,
        mu_tilde: mu.min((part.n_blocks as f64).sqrt()),
        argmax_entry,
        argmax_column,
    }
}

/// Measurement count sufficient for a restricted isometry of level `delta`
/// at sparsity `sparsity` in dimension `n_total`, given a coherence factor
/// (mu_tilde for distinct blocks, gamma for repeated blocks):
/// delta^-2 * factor^2 * S * ln(S)^2 * ln(n)^2, leading constant one.
///
/// `sparsity` and `n_total` enter through logarithms and are accepted as
/// reals; both must be at least 2 so the formula stays positive.
pub fn required_measurements(
    delta: f64,
    sparsity: f64,
    n_total: f64,
    coherence_factor: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1]; got {delta}"
        )));
    }
    if !(sparsity >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "sparsity must be at least 2; got {sparsity}"
        )));
    }
    if !(n_total >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "n_total must be at least 2; got {n_total}"
        )));
    }
    if !(coherence_factor > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coherence factor must be positive; got {coherence_factor}"
        )));
    }
    let log_s = sparsity.ln();
    let log_n = n_total.ln();
    Ok(delta.powi(-2) * coherence_factor.powi(2) * sparsity * log_s * log_s * log_n * log_n)
}
