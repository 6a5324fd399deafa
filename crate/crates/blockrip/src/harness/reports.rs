//! Monte Carlo summaries: coherence tails, exact-constant comparisons
//! across bases, and the circulant end-to-end demonstration.

use crate::bases::{
    canonical_basis, fourier_basis, generic_basis, BasisLabel, BlockPartition,
    CirculantTransform,
};
use crate::chaos::{sample_sparse_unit, CoeffDistribution};
use crate::coherence;
use crate::operators::{extend_signal, BlockOperator, EnsembleKind, OperatorKind, PartialCirculant};
use crate::recovery::{BasisPursuit, BpSettings};
use crate::ric;
use crate::streams::{self, tag};
use crate::{C64, Error, Result};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty() && (0.0..=1.0).contains(&q));
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean and standard error of the pairwise differences a[i] - b[i].
pub fn paired_gap(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    assert!(a.len() >= 2);
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&diffs);
    let var = diffs.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (diffs.len() - 1) as f64;
    (m, (var / diffs.len() as f64).sqrt())
}

/// Tail behavior of the coherence measures over random orthobases.
#[derive(Clone, Debug)]
pub struct CoherenceMcReport {
    pub n_total: usize,
    pub n_blocks: usize,
    pub block_len: usize,
    pub n_draws: usize,
    /// Threshold multiplier for the flat-coherence check.
    pub beta_mu: f64,
    /// Additive slack for the block-coherence check.
    pub beta_gamma: f64,
    /// beta_mu * sqrt(ln n_total).
    pub mu_bound: f64,
    /// 1 + sqrt(n_blocks / block_len) + beta_gamma.
    pub gamma_bound: f64,
    /// Per-draw values, in draw order.
    pub mu_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub mu_exceed: usize,
    pub gamma_exceed: usize,
}

impl CoherenceMcReport {
    pub fn mu_quantile(&self, q: f64) -> f64 {
        quantile(&self.mu_values, q)
    }

    pub fn gamma_quantile(&self, q: f64) -> f64 {
        quantile(&self.gamma_values, q)
    }

    pub fn mu_exceed_fraction(&self) -> f64 {
        self.mu_exceed as f64 / self.n_draws as f64
    }

    pub fn gamma_exceed_fraction(&self) -> f64 {
        self.gamma_exceed as f64 / self.n_draws as f64
    }
}

/// Draw Haar-random orthobases and tally how often the coherence measures
/// exceed their theoretical envelopes.
pub fn run_coherence_mc(
    n_blocks: usize,
    block_len: usize,
    n_draws: usize,
    beta_mu: f64,
    beta_gamma: f64,
    seed: u64,
) -> Result<CoherenceMcReport> {
    if n_draws == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    if n_blocks > block_len {
        // The block-coherence envelope is only claimed for blocks at least
        // as long as their count.
        return Err(Error::InvalidParameter(format!(
            "the block-coherence envelope needs n_blocks <= block_len; \
             got {n_blocks} > {block_len}"
        )));
    }
    let partition = BlockPartition::new(n_blocks, block_len, 1)?;
    let n_total = partition.n_total;
    let mu_bound = beta_mu * (n_total as f64).ln().sqrt();
    let gamma_bound = 1.0 + (n_blocks as f64 / block_len as f64).sqrt() + beta_gamma;

    let reports: Vec<(f64, f64)> = (0..n_draws)
        .into_par_iter()
        .map(|i| {
            let basis = generic_basis(partition, streams::derive_seed(seed, &[tag::BASIS, i as u64]));
            let report = coherence::coherence_report(&basis);
            (report.mu, report.gamma)
        })
        .collect();

    let mu_values: Vec<f64> = reports.iter().map(|r| r.0).collect();
    let gamma_values: Vec<f64> = reports.iter().map(|r| r.1).collect();
    let mu_exceed = mu_values.iter().filter(|&&v| v > mu_bound).count();
    let gamma_exceed = gamma_values.iter().filter(|&&v| v > gamma_bound).count();

    Ok(CoherenceMcReport {
        n_total,
        n_blocks,
        block_len,
        n_draws,
        beta_mu,
        beta_gamma,
        mu_bound,
        gamma_bound,
        mu_values,
        gamma_values,
        mu_exceed,
        gamma_exceed,
    })
}

/// Exact isometry constants for one operator kind under one basis.
#[derive(Clone, Debug)]
pub struct RicComboStats {
    pub operator_kind: OperatorKind,
    pub basis: BasisLabel,
    /// One constant per operator draw, in draw order.
    pub deltas: Vec<f64>,
    pub mean_delta: f64,
}

/// Exact constants across operator draws for all kind-basis combinations.
#[derive(Clone, Debug)]
pub struct RicCompareReport {
    pub partition: BlockPartition,
    pub sparsity: usize,
    pub n_ops: usize,
    /// Six entries: each operator kind under canonical, fourier, generic.
    pub combos: Vec<RicComboStats>,
}

impl RicCompareReport {
    pub fn combo(&self, kind: OperatorKind, basis: BasisLabel) -> &RicComboStats {
        self.combos
            .iter()
            .find(|c| c.operator_kind == kind && c.basis == basis)
            .expect("all six combinations are always populated")
    }
}

/// For each operator draw, compute the exact sparsity-S constant under the
/// canonical, Fourier, and a fresh generic basis, for both block layouts.
pub fn run_ric_compare(
    n_blocks: usize,
    block_len: usize,
    meas_per_block: usize,
    sparsity: usize,
    n_ops: usize,
    seed: u64,
) -> Result<RicCompareReport> {
    if n_ops == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    let partition = BlockPartition::new(n_blocks, block_len, meas_per_block)?;
    let canonical = canonical_basis(partition);
    let fourier = fourier_basis(partition);

    struct DrawDeltas {
        dbd: [f64; 3],
        rbd: [f64; 3],
    }

    let draws: Result<Vec<DrawDeltas>> = (0..n_ops)
        .into_par_iter()
        .map(|i| {
            let i = i as u64;
            let dbd_op = BlockOperator::sample_dbd(
                EnsembleKind::Gaussian,
                partition,
                streams::derive_seed(seed, &[tag::OPERATOR, 0, i]),
            )?;
            let rbd_op = BlockOperator::sample_rbd(
                EnsembleKind::Gaussian,
                partition,
                streams::derive_seed(seed, &[tag::OPERATOR, 1, i]),
            )?;
            let generic = generic_basis(partition, streams::derive_seed(seed, &[tag::BASIS, i]));
            let mut dbd = [0.0; 3];
            let mut rbd = [0.0; 3];
            for (slot, basis) in [&canonical, &fourier, &generic].into_iter().enumerate() {
                dbd[slot] = ric::exact_ric(&dbd_op, basis, sparsity, None)?.delta;
                rbd[slot] = ric::exact_ric(&rbd_op, basis, sparsity, None)?.delta;
            }
            Ok(DrawDeltas { dbd, rbd })
        })
        .collect();
    let draws = draws?;

    let labels = [BasisLabel::Canonical, BasisLabel::Fourier, BasisLabel::Generic];
    let mut combos = Vec::with_capacity(6);
    for kind in [OperatorKind::Dbd, OperatorKind::Rbd] {
        for (slot, &basis) in labels.iter().enumerate() {
            let deltas: Vec<f64> = draws
                .iter()
                .map(|d| match kind {
                    OperatorKind::Dbd => d.dbd[slot],
                    OperatorKind::Rbd => d.rbd[slot],
                })
                .collect();
            let mean_delta = mean(&deltas);
            combos.push(RicComboStats {
                operator_kind: kind,
                basis,
                deltas,
                mean_delta,
            });
        }
    }

    Ok(RicCompareReport {
        partition,
        sparsity,
        n_ops,
        combos,
    })
}

/// One trial of the circulant demonstration.
#[derive(Clone, Debug)]
pub struct CirculantTrial {
    /// Largest entry gap between the direct circulant measurement and the
    /// block-diagonal route through the extended signal.
    pub operator_gap: f64,
    /// Largest entry gap between the scaled extended signal and its
    /// synthesis from shifted-spectrum coefficients.
    pub basis_gap: f64,
    /// Relative error of the recovered coefficients (0 when the reference
    /// is zero and recovery is exact).
    pub rel_error: f64,
    pub success: bool,
    pub iters: usize,
}

/// Outcome of the circulant end-to-end demonstration.
#[derive(Clone, Debug)]
pub struct CirculantDemoReport {
    pub signal_len: usize,
    pub n_rows: usize,
    pub sparsity: usize,
    pub n_trials: usize,
    pub success_threshold: f64,
    pub trials: Vec<CirculantTrial>,
    pub max_operator_gap: f64,
    pub max_basis_gap: f64,
    pub n_success: usize,
}

impl CirculantDemoReport {
    pub fn success_fraction(&self) -> f64 {
        self.n_success as f64 / self.n_trials as f64
    }
}

fn circulant_trial(
    signal_len: usize,
    n_rows: usize,
    sparsity: usize,
    success_threshold: f64,
    seed: u64,
    trial: u64,
) -> Result<CirculantTrial> {
    let p = signal_len;
    let j = n_rows;
    let scale = 1.0 / (j as f64).sqrt();

    let x = if sparsity == 0 {
        DVector::<C64>::zeros(p)
    } else {
        sample_sparse_unit(
            p,
            sparsity,
            streams::derive_seed(seed, &[tag::SIGNAL, trial]),
            CoeffDistribution::ComplexGaussian,
        )?
        .into_vector()
    };
    let circulant = PartialCirculant::sample(
        p,
        j,
        streams::derive_seed(seed, &[tag::OPERATOR, trial]),
    )?;

    // Route one: measure x directly with the circulant rows.
    let y = circulant.apply(&x)?;

    // Route two: replicate the signal, rescale, and measure with a
    // repeated single-row block operator.
    let row = DMatrix::<f64>::from_fn(1, p, |_, col| circulant.symbol()[col]);
    let repeated = BlockOperator::rbd(row, j)?;
    let extended = extend_signal(&x, j);
    let via_blocks = repeated.apply(&(&extended * C64::new(scale, 0.0)))?;
    let operator_gap = (&y - via_blocks)
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);

    // The extended signal is synthesized exactly by the shifted-spectrum
    // basis from coefficients supported on the first block.
    let transform = CirculantTransform::new(p, j)?;
    let mut beta_true = DVector::<C64>::zeros(p * j);
    for idx in 0..p {
        beta_true[idx] = x[idx];
    }
    let synthesized = transform.apply(&beta_true);
    let basis_gap = (&extended * C64::new(scale, 0.0) - synthesized)
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);

    // Recover the coefficients from y by l1 minimization through the
    // matrix-free composite of the two maps above.
    let symbol = circulant.symbol().clone();
    let fwd_transform = CirculantTransform::new(p, j)?;
    let adj_transform = CirculantTransform::new(p, j)?;
    let fwd_repeated = repeated;
    let measure = move |v: &DVector<C64>| {
        fwd_repeated
            .apply(&fwd_transform.apply(v))
            .expect("composite dimensions are fixed at construction")
    };
    let adjoint = move |w: &DVector<C64>| {
        let mut lifted = DVector::<C64>::zeros(p * j);
        for k in 0..j {
            for q in 0..p {
                lifted[k * p + q] = w[k] * symbol[q];
            }
        }
        adj_transform.adjoint(&lifted)
    };
    // The lifted problem is much taller than the dense maps the default
    // penalty is tuned for (p * j unknowns against j equations); a stiffer
    // penalty roughly halves the iteration count here.
    let settings = BpSettings {
        penalty: 10.0,
        ..BpSettings::default()
    };
    let solver = BasisPursuit::new(Box::new(measure), Box::new(adjoint), j, p * j, settings)?;
    let solution = solver.solve(&y)?;

    let (rel_error, success) = if sparsity == 0 {
        let norm = solution.beta_hat.norm();
        (norm, norm <= 1e-10)
    } else {
        crate::recovery::recovery_success(&beta_true, &solution.beta_hat, success_threshold)?
    };

    Ok(CirculantTrial {
        operator_gap,
        basis_gap,
        rel_error,
        success,
        iters: solution.iters,
    })
}

/// Verify the circulant-to-block-diagonal reduction and recover sparse
/// signals through it.
pub fn run_circulant_demo(
    signal_len: usize,
    n_rows: usize,
    sparsity: usize,
    n_trials: usize,
    success_threshold: f64,
    seed: u64,
) -> Result<CirculantDemoReport> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if n_rows > signal_len {
        return Err(Error::InvalidParameter(format!(
            "a circulant with period {signal_len} has at most {signal_len} \
             distinct rows; asked for {n_rows}"
        )));
    }
    if sparsity > signal_len {
        return Err(Error::InvalidParameter(format!(
            "sparsity {sparsity} exceeds signal length {signal_len}"
        )));
    }
    let trials: Result<Vec<CirculantTrial>> = (0..n_trials)
        .into_par_iter()
        .map(|t| circulant_trial(signal_len, n_rows, sparsity, success_threshold, seed, t as u64))
        .collect();
    let trials = trials?;

    let max_operator_gap = trials.iter().map(|t| t.operator_gap).fold(0.0, f64::max);
    let max_basis_gap = trials.iter().map(|t| t.basis_gap).fold(0.0, f64::max);
    let n_success = trials.iter().filter(|t| t.success).count();
    Ok(CirculantDemoReport {
        signal_len,
        n_rows,
        sparsity,
        n_trials,
        success_threshold,
        trials,
        max_operator_gap,
        max_basis_gap,
        n_success,
    })
}
