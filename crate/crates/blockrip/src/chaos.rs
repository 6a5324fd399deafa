//! Measurement energy as a linear image of the operator's random entries.
//!
//! For a fixed coefficient vector alpha, the energy ||Phi U alpha||^2 is a
//! quadratic form in the random block entries: stacking those entries into
//! one long vector, the energy becomes the squared norm of a fixed matrix
//! (built from alpha and U) times that vector. The spectral and Frobenius
//! norms of that matrix, maximized over unit S-sparse alpha, are exactly
//! what concentration arguments for the restricted isometry constant need,
//! and both have closed forms evaluated here without materializing anything
//! of size meas_total x (J M N).

use crate::bases::Orthobasis;
use crate::coherence;
use crate::operators::{BlockOperator, OperatorKind};
use crate::streams::{self, tag};
use crate::{C64, Error, Result};
use nalgebra::DVector;
use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// A unit-norm vector supported on `sparsity` coordinates.
#[derive(Clone, Debug)]
pub struct SparseUnitVector {
    support: Vec<usize>,
    vector: DVector<C64>,
}

impl SparseUnitVector {
    /// Sorted support indices.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    /// The full-length coefficient vector (zeros off the support).
    pub fn vector(&self) -> &DVector<C64> {
        &self.vector
    }

    pub fn into_vector(self) -> DVector<C64> {
        self.vector
    }
}

/// Distribution of the nonzero coefficients before normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffDistribution {
    /// Independent standard normal real and imaginary parts.
    ComplexGaussian,
    /// Real standard normal (imaginary parts zero).
    RealGaussian,
}

/// Uniform random size-`sparsity` support with normalized random
/// coefficients, drawn from the given generator.
pub fn sample_sparse_unit_rng(
    n_total: usize,
    sparsity: usize,
    rng: &mut ChaCha8Rng,
    dist: CoeffDistribution,
) -> Result<SparseUnitVector> {
    if sparsity == 0 || sparsity > n_total {
        return Err(Error::InvalidParameter(format!(
            "sparsity must lie in [1, {n_total}]; got {sparsity}"
        )));
    }
    let mut support = index::sample(rng, n_total, sparsity).into_vec();
    support.sort_unstable();
    loop {
        let mut vector = DVector::<C64>::zeros(n_total);
        for &idx in &support {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = match dist {
                CoeffDistribution::ComplexGaussian => StandardNormal.sample(rng),
                CoeffDistribution::RealGaussian => 0.0,
            };
            vector[idx] = C64::new(re, im);
        }
        let norm = vector.norm();
        // A zero draw has probability zero; guard anyway.
        if norm > 0.0 {
            vector /= C64::new(norm, 0.0);
            return Ok(SparseUnitVector { support, vector });
        }
    }
}

/// Seeded wrapper around [`sample_sparse_unit_rng`].
pub fn sample_sparse_unit(
    n_total: usize,
    sparsity: usize,
    seed: u64,
    dist: CoeffDistribution,
) -> Result<SparseUnitVector> {
    let mut rng = streams::stream_rng(seed, &[tag::SIGNAL]);
    sample_sparse_unit_rng(n_total, sparsity, &mut rng, dist)
}

/// Spectral norm of the distinct-block energy matrix:
/// max over blocks of ||U_j alpha||_2 / sqrt(meas_per_block).
pub fn dbd_chaos_norm(alpha: &DVector<C64>, basis: &Orthobasis) -> f64 {
    let part = basis.partition();
    let mut worst: f64 = 0.0;
    for j in 0..part.n_blocks {
        worst = worst.max(basis.apply_block(j, alpha).norm());
    }
    worst / (part.meas_per_block as f64).sqrt()
}

/// Spectral norm of the repeated-block energy matrix: the largest singular
/// value of the N x J reshape of U alpha, over sqrt(meas_per_block).
pub fn rbd_chaos_norm(alpha: &DVector<C64>, basis: &Orthobasis) -> f64 {
    let part = basis.partition();
    let reshaped = coherence::block_reshape(alpha, basis);
    coherence::spectral_norm(&reshaped) / (part.meas_per_block as f64).sqrt()
}

/// Frobenius norm of either energy matrix; equals ||U alpha||_2, so it is 1
/// on every unit coefficient vector.
pub fn chaos_frobenius(alpha: &DVector<C64>, basis: &Orthobasis) -> f64 {
    basis.apply(alpha).norm()
}

fn check_same_partition(op: &BlockOperator, basis: &Orthobasis) -> Result<()> {
    if op.partition() != basis.partition() {
        return Err(Error::DimensionMismatch(format!(
            "operator partition {:?} differs from basis partition {:?}",
            op.partition(),
            basis.partition()
        )));
    }
    Ok(())
}

/// Measurement energy of U alpha under a distinct-block operator, computed
/// two ways: directly as ||Phi (U alpha)||^2, and through the chaos form
/// sum_j ||(I (x) x_j^*) vec(Phi_j^*)||^2 evaluated entry by entry.
/// The two values agree exactly in exact arithmetic.
pub fn dbd_energy_pair(
    op: &BlockOperator,
    alpha: &DVector<C64>,
    basis: &Orthobasis,
) -> Result<(f64, f64)> {
    if op.kind() != OperatorKind::Dbd {
        return Err(Error::InvalidParameter(
            "dbd_energy_pair needs a distinct-block operator".into(),
        ));
    }
    check_same_partition(op, basis)?;
    let part = basis.partition();
    let direct = op.apply(&basis.apply(alpha))?.norm_squared();

    let mut chaos = 0.0;
    for j in 0..part.n_blocks {
        let x_j = basis.apply_block(j, alpha);
        let block = op.block(j);
        // Entry m of (I (x) x_j^*) vec(Phi_j^*) is <row m of Phi_j, x_j>
        // conjugated; its squared magnitude is what accumulates.
        for m in 0..part.meas_per_block {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..part.block_len {
                acc += x_j[n].conj() * block[(m, n)];
            }
            chaos += acc.norm_sqr();
        }
    }
    Ok((direct, chaos))
}

/// Measurement energy of U alpha under a repeated-block operator, computed
/// directly and as the Frobenius norm of X_R(alpha)^H Phi^H.
pub fn rbd_energy_pair(
    op: &BlockOperator,
    alpha: &DVector<C64>,
    basis: &Orthobasis,
) -> Result<(f64, f64)> {
    if op.kind() != OperatorKind::Rbd {
        return Err(Error::InvalidParameter(
            "rbd_energy_pair needs a repeated-block operator".into(),
        ));
    }
    check_same_partition(op, basis)?;
    let part = basis.partition();
    let direct = op.apply(&basis.apply(alpha))?.norm_squared();

    let reshaped = coherence::block_reshape(alpha, basis);
    let block = op.block(0);
    // Row j, column m of X_R^H Phi^H is <row m of Phi, x_j> conjugated.
    let mut chaos = 0.0;
    for j in 0..part.n_blocks {
        for m in 0..part.meas_per_block {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..part.block_len {
                acc += reshaped[(n, j)].conj() * block[(m, n)];
            }
            chaos += acc.norm_sqr();
        }
    }
    Ok((direct, chaos))
}

/// Sampled extremes of the chaos norms over unit `sparsity`-sparse vectors,
/// next to the coherence-based ceiling for the spectral norm.
#[derive(Clone, Copy, Debug)]
pub struct RadiiEstimate {
    /// Largest sampled Frobenius norm; exactly 1 for an orthobasis.
    pub frobenius_max: f64,
    /// Largest sampled spectral norm of the energy matrix.
    pub spectral_max: f64,
    /// mu_tilde * sqrt(S / meas_total) for distinct blocks,
    /// gamma * sqrt(S / meas_total) for repeated blocks; an upper bound
    /// that no sample may exceed.
    pub spectral_bound: f64,
}

/// Monte Carlo estimate of the chaos-norm radii at a given sparsity.
pub fn empirical_radii(
    kind: OperatorKind,
    basis: &Orthobasis,
    sparsity: usize,
    n_samples: usize,
    seed: u64,
) -> Result<RadiiEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let part = basis.partition();
    let report = coherence::coherence_report(basis);
    let factor = match kind {
        OperatorKind::Dbd => report.mu_tilde,
        OperatorKind::Rbd => report.gamma,
    };
    let spectral_bound = factor * (sparsity as f64 / part.meas_total as f64).sqrt();

    let mut rng = streams::stream_rng(seed, &[tag::SIGNAL]);
    let mut frobenius_max: f64 = 0.0;
    let mut spectral_max: f64 = 0.0;
    for _ in 0..n_samples {
        let alpha = sample_sparse_unit_rng(
            part.n_total,
            sparsity,
            &mut rng,
            CoeffDistribution::ComplexGaussian,
        )?;
        frobenius_max = frobenius_max.max(chaos_frobenius(alpha.vector(), basis));
        let spectral = match kind {
            OperatorKind::Dbd => dbd_chaos_norm(alpha.vector(), basis),
            OperatorKind::Rbd => rbd_chaos_norm(alpha.vector(), basis),
        };
        spectral_max = spectral_max.max(spectral);
    }
    Ok(RadiiEstimate {
        frobenius_max,
        spectral_max,
        spectral_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{canonical_basis, fourier_basis, generic_basis, BlockPartition};
    use crate::operators::EnsembleKind;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn partition(j: usize, n: usize, m: usize) -> BlockPartition {
        BlockPartition::new(j, n, m).unwrap()
    }

    #[test]
    fn sparse_sampler_invariants() {
        let drawn = sample_sparse_unit(30, 7, 4, CoeffDistribution::ComplexGaussian).unwrap();
        assert_eq!(drawn.sparsity(), 7);
        assert!(drawn.support().windows(2).all(|w| w[0] < w[1]));
        assert!(drawn.support().iter().all(|&i| i < 30));
        assert_relative_eq!(drawn.vector().norm(), 1.0, epsilon = 1e-12);
        let on_support: f64 = drawn
            .support()
            .iter()
            .map(|&i| drawn.vector()[i].norm_sqr())
            .sum();
        assert_relative_eq!(on_support, 1.0, epsilon = 1e-12);

        let again = sample_sparse_unit(30, 7, 4, CoeffDistribution::ComplexGaussian).unwrap();
        assert_eq!(drawn.vector(), again.vector(), "seed determinism");

        let real = sample_sparse_unit(30, 7, 4, CoeffDistribution::RealGaussian).unwrap();
        assert!(real.vector().iter().all(|v| v.im == 0.0));

        let dense = sample_sparse_unit(5, 5, 1, CoeffDistribution::ComplexGaussian).unwrap();
        assert_eq!(dense.support(), &[0, 1, 2, 3, 4]);

        assert!(sample_sparse_unit(5, 0, 1, CoeffDistribution::ComplexGaussian).is_err());
        assert!(sample_sparse_unit(5, 6, 1, CoeffDistribution::ComplexGaussian).is_err());
    }

    #[test]
    fn one_sparse_dbd_norm_is_exact() {
        // For a unit 1-sparse alpha in the canonical basis, exactly one
        // block sees all the energy: the norm is 1/sqrt(M) regardless of
        // the draw.
        let part = partition(3, 4, 2);
        let basis = canonical_basis(part);
        for seed in 0..10 {
            let alpha = sample_sparse_unit(12, 1, seed, CoeffDistribution::ComplexGaussian)
                .unwrap()
                .into_vector();
            assert_relative_eq!(
                dbd_chaos_norm(&alpha, &basis),
                1.0 / 2.0_f64.sqrt(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn chaos_norm_bounds_hold() {
        // max_j ||U_j a|| <= ||U a|| and the coherence ceilings from the
        // l1 norm; checked on random bases and sparse vectors.
        for seed in 0..30u64 {
            let j = 2 + (seed as usize) % 3;
            let n = 4 + (seed as usize) % 3;
            let m = 1 + (seed as usize) % 2;
            let part = partition(j, n, m);
            let basis = generic_basis(part, seed);
            let report = coherence::coherence_report(&basis);
            let s = 1 + (seed as usize) % 5;
            let alpha = sample_sparse_unit(
                part.n_total,
                s,
                seed.wrapping_add(99),
                CoeffDistribution::ComplexGaussian,
            )
            .unwrap()
            .into_vector();

            let l1: f64 = alpha.iter().map(|v| v.norm()).sum();
            let m_total = part.meas_total as f64;
            let m_block = part.meas_per_block as f64;

            let d_norm = dbd_chaos_norm(&alpha, &basis);
            assert!(d_norm <= alpha.norm() / m_block.sqrt() + 1e-12);
            assert!(d_norm <= report.mu_tilde * l1 / m_total.sqrt() + 1e-12);

            let r_norm = rbd_chaos_norm(&alpha, &basis);
            // Triangle inequality through the per-column reshapes.
            let mut term_sum = 0.0;
            for idx in 0..part.n_total {
                if alpha[idx].norm() == 0.0 {
                    continue;
                }
                let mut e = DVector::<C64>::zeros(part.n_total);
                e[idx] = C64::new(1.0, 0.0);
                let reshaped = coherence::block_reshape(&e, &basis);
                term_sum += alpha[idx].norm() * coherence::spectral_norm(&reshaped);
            }
            term_sum /= m_block.sqrt();
            assert!(r_norm <= term_sum + 1e-12);
            assert!(term_sum <= report.gamma * l1 / m_total.sqrt() + 1e-12);

            assert_relative_eq!(chaos_frobenius(&alpha, &basis), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rbd_norm_of_worst_column_matches_gamma() {
        let part = partition(4, 5, 1);
        let basis = fourier_basis(part);
        let report = coherence::coherence_report(&basis);
        let mut e = DVector::<C64>::zeros(part.n_total);
        e[report.argmax_column] = C64::new(1.0, 0.0);
        // With one measurement row per block, the norm at the worst column
        // is exactly gamma / sqrt(J).
        assert_relative_eq!(
            rbd_chaos_norm(&e, &basis),
            report.gamma / (part.n_blocks as f64).sqrt(),
            epsilon = 1e-12
        );
    }

    /// Materialized I_M (x) x_j^* applied to vec(Phi_j^*), for tiny sizes.
    fn dense_chaos_energy_dbd(
        op: &BlockOperator,
        alpha: &DVector<C64>,
        basis: &crate::bases::Orthobasis,
    ) -> f64 {
        let part = basis.partition();
        let (m, n) = (part.meas_per_block, part.block_len);
        let mut total = 0.0;
        for j in 0..part.n_blocks {
            let x_j = basis.apply_block(j, alpha);
            // rows m, cols m*n: row r has x_j^H in the r-th length-n slot.
            let mut kron = DMatrix::<C64>::zeros(m, m * n);
            for r in 0..m {
                for c in 0..n {
                    kron[(r, r * n + c)] = x_j[c].conj();
                }
            }
            // vec of Phi_j^H: stack its m columns, each of length n.
            let mut vec_phi = DVector::<C64>::zeros(m * n);
            for col in 0..m {
                for row in 0..n {
                    vec_phi[col * n + row] = C64::new(op.block(j)[(col, row)], 0.0);
                }
            }
            total += (kron * vec_phi).norm_squared();
        }
        total
    }

    #[test]
    fn dbd_energy_identity_with_dense_oracle() {
        for seed in 0..25u64 {
            let j = 1 + (seed as usize) % 3;
            let n = 2 + (seed as usize) % 3;
            let m = 1 + (seed as usize) % n.min(3);
            let part = partition(j, n, m);
            let basis = generic_basis(part, seed);
            let op = BlockOperator::sample_dbd(EnsembleKind::Gaussian, part, seed).unwrap();
            let alpha = if seed % 5 == 0 {
                // Dense coefficients exercise the identity beyond sparse ones.
                sample_sparse_unit(part.n_total, part.n_total, seed, CoeffDistribution::ComplexGaussian)
            } else {
                sample_sparse_unit(part.n_total, 1 + (seed as usize) % part.n_total, seed, CoeffDistribution::ComplexGaussian)
            }
            .unwrap()
            .into_vector();

            let (direct, chaos) = dbd_energy_pair(&op, &alpha, &basis).unwrap();
            let oracle = dense_chaos_energy_dbd(&op, &alpha, &basis);
            assert_relative_eq!(direct, chaos, max_relative = 1e-12);
            assert_relative_eq!(chaos, oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn rbd_energy_identity_with_dense_oracle() {
        for seed in 0..25u64 {
            let j = 1 + (seed as usize) % 3;
            let n = 2 + (seed as usize) % 3;
            let m = 1 + (seed as usize) % n.min(3);
            let part = partition(j, n, m);
            let basis = generic_basis(part, seed.wrapping_add(7));
            let op = BlockOperator::sample_rbd(EnsembleKind::Gaussian, part, seed).unwrap();
            let alpha = sample_sparse_unit(
                part.n_total,
                1 + (seed as usize) % part.n_total,
                seed,
                CoeffDistribution::ComplexGaussian,
            )
            .unwrap()
            .into_vector();

            let (direct, chaos) = rbd_energy_pair(&op, &alpha, &basis).unwrap();
            assert_relative_eq!(direct, chaos, max_relative = 1e-12);

            // Frobenius-norm route: blkdiag of M copies of X_R^H applied to
            // the stacked columns of Phi^H.
            let reshaped = coherence::block_reshape(&alpha, &basis);
            let adjoint = reshaped.adjoint();
            let mut oracle = 0.0;
            for col in 0..m {
                let phi_col = DVector::<C64>::from_fn(n, |row, _| {
                    C64::new(op.block(0)[(col, row)], 0.0)
                });
                oracle += (&adjoint * phi_col).norm_squared();
            }
            assert_relative_eq!(chaos, oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn energy_pair_rejects_mismatched_inputs() {
        let part = partition(2, 3, 2);
        let basis = canonical_basis(part);
        let alpha = DVector::<C64>::zeros(6);
        let rbd = BlockOperator::sample_rbd(EnsembleKind::Gaussian, part, 1).unwrap();
        assert!(dbd_energy_pair(&rbd, &alpha, &basis).is_err());
        let dbd = BlockOperator::sample_dbd(EnsembleKind::Gaussian, part, 1).unwrap();
        assert!(rbd_energy_pair(&dbd, &alpha, &basis).is_err());
        let other = BlockOperator::sample_dbd(
            EnsembleKind::Gaussian,
            partition(2, 3, 1),
            1,
        )
        .unwrap();
        assert!(dbd_energy_pair(&other, &alpha, &basis).is_err(), "partition mismatch");
    }

    #[test]
    fn radii_are_bounded_and_exact_for_one_sparse_canonical() {
        let part = partition(3, 5, 2);
        let basis = canonical_basis(part);
        let radii = empirical_radii(OperatorKind::Dbd, &basis, 1, 50, 5).unwrap();
        assert_relative_eq!(radii.frobenius_max, 1.0, epsilon = 1e-12);
        assert_relative_eq!(radii.spectral_max, 1.0 / 2.0_f64.sqrt(), epsilon = 1e-12);
        assert!(radii.spectral_max <= radii.spectral_bound + 1e-12);

        for kind in [OperatorKind::Dbd, OperatorKind::Rbd] {
            for seed in 0..5 {
                let basis = generic_basis(part, seed);
                let radii = empirical_radii(kind, &basis, 4, 100, seed).unwrap();
                assert!(radii.spectral_max <= radii.spectral_bound + 1e-12);
                assert_relative_eq!(radii.frobenius_max, 1.0, epsilon = 1e-12);
            }
        }
    }
}
