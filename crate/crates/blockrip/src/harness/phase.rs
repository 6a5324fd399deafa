//! Sparsity-versus-measurements success grids.
//!
//! One square master operator is drawn per experiment. Each grid cell
//! (S, M) truncates the master to M rows per block, draws fresh S-sparse
//! coefficient vectors, measures them through the composite map, and
//! records the fraction recovered by l1 minimization. Cells are
//! independent and all randomness is derived from per-cell streams, so a
//! worker pool may run them in any order without changing a single output
//! byte.

use crate::bases::{canonical_basis, fourier_basis, generic_basis, BasisLabel, Orthobasis};
use crate::chaos::{sample_sparse_unit, CoeffDistribution};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::operators::{BlockOperator, EnsembleKind, OperatorKind};
use crate::recovery::{BasisPursuit, BpSettings};
use crate::recovery;
use crate::streams::{self, tag};
use crate::{C64, Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// One grid cell's outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCell {
    pub sparsity: usize,
    pub meas_per_block: usize,
    pub n_success: usize,
    pub success_fraction: f64,
}

/// A completed grid with the config that produced it.
#[derive(Clone, Debug)]
pub struct PhaseGrid {
    pub config: ExperimentConfig,
    /// Sorted by (sparsity, meas_per_block); every configured cell present.
    pub cells: Vec<PhaseCell>,
}

impl PhaseGrid {
    pub fn cell(&self, sparsity: usize, meas_per_block: usize) -> Option<&PhaseCell> {
        self.cells
            .iter()
            .find(|c| c.sparsity == sparsity && c.meas_per_block == meas_per_block)
    }

    /// Sum of success fractions over the whole grid; the coarse statistic
    /// used to compare bases.
    pub fn total_success_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.success_fraction).sum()
    }
}

/// Dense matrix of the composite map: measurement operator after synthesis
/// from basis coefficients. Built block row by block row.
pub fn dense_composite(op: &BlockOperator, basis: &Orthobasis) -> Result<DMatrix<C64>> {
    let part = op.partition();
    if part != basis.partition() {
        return Err(Error::DimensionMismatch(format!(
            "operator partition {:?} differs from basis partition {:?}",
            part,
            basis.partition()
        )));
    }
    let mut out = DMatrix::<C64>::zeros(part.meas_total, part.n_total);
    for j in 0..part.n_blocks {
        let block = op.block(j).map(|v| C64::new(v, 0.0));
        let rows = basis
            .entries()
            .rows(j * part.block_len, part.block_len);
        out.rows_mut(j * part.meas_per_block, part.meas_per_block)
            .copy_from(&(block * rows));
    }
    Ok(out)
}

fn fixed_cell_basis(config: &ExperimentConfig, partition: crate::bases::BlockPartition) -> Option<Orthobasis> {
    match config.basis_label {
        BasisLabel::Canonical => Some(canonical_basis(partition)),
        BasisLabel::Fourier => Some(fourier_basis(partition)),
        _ => None,
    }
}

fn run_cell(
    config: &ExperimentConfig,
    master: &BlockOperator,
    sparsity: usize,
    meas_per_block: usize,
) -> Result<PhaseCell> {
    let truncated = master.truncate(meas_per_block)?;
    let cell_partition = truncated.partition();
    let settings = BpSettings::default();
    let fixed = fixed_cell_basis(config, cell_partition);
    let fixed_solver = match &fixed {
        Some(basis) => {
            let a = dense_composite(&truncated, basis)?;
            Some((a.clone(), BasisPursuit::from_dense(&a, settings)?))
        }
        None => None,
    };

    let n_total = cell_partition.n_total;
    let mut n_success = 0;
    for t in 0..config.n_trials {
        let path = [sparsity as u64, meas_per_block as u64, t as u64];
        let (a, solver_storage);
        let solver = match &fixed_solver {
            Some((matrix, solver)) => {
                a = matrix.clone();
                solver
            }
            None => {
                // A fresh random orthobasis for every trial.
                let basis_seed = streams::derive_seed(
                    config.master_seed,
                    &[tag::BASIS, path[0], path[1], path[2]],
                );
                let basis = generic_basis(cell_partition, basis_seed);
                a = dense_composite(&truncated, &basis)?;
                solver_storage = BasisPursuit::from_dense(&a, settings)?;
                &solver_storage
            }
        };

        let signal_seed = streams::derive_seed(
            config.master_seed,
            &[tag::SIGNAL, path[0], path[1], path[2]],
        );
        let beta = sample_sparse_unit(
            n_total,
            sparsity,
            signal_seed,
            CoeffDistribution::ComplexGaussian,
        )?
        .into_vector();
        let y = &a * &beta;
        let solution = solver.solve(&y)?;
        // Success is a statement about the estimate, not the solver: a
        // capped solve whose iterate already sits inside the threshold
        // still counts.
        let (_, close) =
            recovery::recovery_success(&beta, &solution.beta_hat, config.success_threshold)?;
        if close {
            n_success += 1;
        }
    }

    Ok(PhaseCell {
        sparsity,
        meas_per_block,
        n_success,
        success_fraction: n_success as f64 / config.n_trials as f64,
    })
}

/// Run the full grid described by `config`.
pub fn run_phase_transition(config: &ExperimentConfig) -> Result<PhaseGrid> {
    config.validate()?;
    if config.kind != ExperimentKind::PhaseTransition {
        return Err(Error::Config(format!(
            "run_phase_transition needs kind = phase_transition; got {:?}",
            config.kind
        )));
    }
    let part = config.partition;
    let master_seed = streams::derive_seed(config.master_seed, &[tag::MASTER]);
    let master = match config.operator_kind {
        OperatorKind::Dbd => BlockOperator::sample_dbd_master(
            EnsembleKind::Gaussian,
            part.n_blocks,
            part.block_len,
            master_seed,
        )?,
        OperatorKind::Rbd => BlockOperator::sample_rbd_master(
            EnsembleKind::Gaussian,
            part.n_blocks,
            part.block_len,
            master_seed,
        )?,
    };

    let mut points: Vec<(usize, usize)> = Vec::new();
    for s in config.s_range.values() {
        for m in config.m_range.values() {
            points.push((s, m));
        }
    }
    // Cell results are collected in grid order regardless of which worker
    // finishes first, keeping the output deterministic.
    let cells: Result<Vec<PhaseCell>> = points
        .par_iter()
        .map(|&(s, m)| run_cell(config, &master, s, m))
        .collect();

    Ok(PhaseGrid {
        config: config.clone(),
        cells: cells?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::BlockPartition;
    use crate::harness::config::GridRange;
    use approx::assert_relative_eq;

    fn tiny_config(
        operator_kind: OperatorKind,
        basis_label: BasisLabel,
        s_range: GridRange,
        m_range: GridRange,
    ) -> ExperimentConfig {
        ExperimentConfig {
            kind: ExperimentKind::PhaseTransition,
            partition: BlockPartition::new(2, 8, 8).unwrap(),
            basis_label,
            operator_kind,
            n_trials: 5,
            success_threshold: 1e-2,
            master_seed: 31,
            s_range,
            m_range,
            output_path: None,
        }
    }

    #[test]
    fn composite_matches_operator_then_basis() {
        let part = BlockPartition::new(3, 4, 2).unwrap();
        let basis = generic_basis(part, 5);
        let op = BlockOperator::sample_dbd(EnsembleKind::Gaussian, part, 5).unwrap();
        let a = dense_composite(&op, &basis).unwrap();
        assert_eq!(a.nrows(), 6);
        assert_eq!(a.ncols(), 12);
        let beta = sample_sparse_unit(12, 12, 2, CoeffDistribution::ComplexGaussian)
            .unwrap()
            .into_vector();
        let via_matrix = &a * &beta;
        let via_ops = op.apply(&basis.apply(&beta)).unwrap();
        assert_relative_eq!((via_matrix - via_ops).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn full_rank_square_blocks_always_recover() {
        // All rows kept and an invertible composite: every trial succeeds
        // at every sparsity.
        let config = tiny_config(
            OperatorKind::Dbd,
            BasisLabel::Canonical,
            GridRange::new(1, 3, 2).unwrap(),
            GridRange::new(8, 8, 1).unwrap(),
        );
        let grid = run_phase_transition(&config).unwrap();
        assert_eq!(grid.cells.len(), 2);
        for cell in &grid.cells {
            assert_eq!(cell.success_fraction, 1.0, "cell {:?}", cell);
        }
    }

    #[test]
    fn grossly_underdetermined_cells_fail() {
        // One row per block and near-saturated sparsity: recovery of a
        // 7-sparse vector from 2 measurements never happens.
        let config = tiny_config(
            OperatorKind::Dbd,
            BasisLabel::Fourier,
            GridRange::new(7, 7, 1).unwrap(),
            GridRange::new(1, 1, 1).unwrap(),
        );
        let grid = run_phase_transition(&config).unwrap();
        assert_eq!(grid.cells.len(), 1);
        assert_eq!(grid.cells[0].success_fraction, 0.0);
    }

    #[test]
    fn cells_are_sorted_and_fractions_quantized() {
        let config = tiny_config(
            OperatorKind::Rbd,
            BasisLabel::Generic,
            GridRange::new(1, 3, 1).unwrap(),
            GridRange::new(2, 6, 2).unwrap(),
        );
        let grid = run_phase_transition(&config).unwrap();
        assert_eq!(grid.cells.len(), 9);
        let keys: Vec<(usize, usize)> = grid
            .cells
            .iter()
            .map(|c| (c.sparsity, c.meas_per_block))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);
        for cell in &grid.cells {
            let scaled = cell.success_fraction * config.n_trials as f64;
            assert_relative_eq!(scaled, scaled.round(), epsilon = 1e-12);
            assert_eq!(cell.n_success as f64, scaled);
        }
        assert!(grid.cell(2, 4).is_some());
        assert!(grid.cell(2, 5).is_none());
    }

    #[test]
    fn reruns_are_identical() {
        let config = tiny_config(
            OperatorKind::Rbd,
            BasisLabel::Generic,
            GridRange::new(2, 2, 1).unwrap(),
            GridRange::new(2, 4, 2).unwrap(),
        );
        let first = run_phase_transition(&config).unwrap();
        let second = run_phase_transition(&config).unwrap();
        assert_eq!(first.cells, second.cells);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let mut config = tiny_config(
            OperatorKind::Dbd,
            BasisLabel::Canonical,
            GridRange::new(1, 1, 1).unwrap(),
            GridRange::new(2, 2, 1).unwrap(),
        );
        config.kind = ExperimentKind::CoherenceMc;
        assert!(run_phase_transition(&config).is_err());
    }
}
