//! Block-diagonal measurement operators and partial circulant matrices.
//!
//! A block operator measures each length-N block of a signal with an M x N
//! matrix. The two flavors differ only in who draws the blocks: distinct
//! block diagonal (DBD) operators draw J independent blocks, repeated block
//! diagonal (RBD) operators draw one and reuse it. Blocks are real; applying
//! them to complex signals acts on real and imaginary parts separately.
//! Partial circulant matrices show up because J rows of a P x P circulant
//! acting on a signal equal an RBD operator acting on the signal's stacked
//! cyclic shifts.

use crate::bases::BlockPartition;
use crate::streams::{self, tag};
use crate::{C64, Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Entry distribution of a random block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Gaussian,
    Rademacher,
}

/// A random matrix family: i.i.d. zero-mean entries with a common scale.
#[derive(Clone, Copy, Debug)]
pub struct Ensemble {
    pub kind: EnsembleKind,
    pub rows: usize,
    pub cols: usize,
    /// Entry standard deviation (exact magnitude for Rademacher).
    pub scale: f64,
}

impl Ensemble {
    /// Entries scaled to std 1/sqrt(rows), making a draw an isometry in
    /// expectation: E ||Phi x||^2 = ||x||^2.
    pub fn normalized(kind: EnsembleKind, rows: usize, cols: usize) -> Result<Self> {
        Ensemble::with_scale(kind, rows, cols, 1.0 / (rows as f64).sqrt())
    }

    /// Explicit entry scale; scale 1 gives the unit-variance master blocks
    /// that [`BlockOperator::truncate`] carves cell operators from.
    pub fn with_scale(kind: EnsembleKind, rows: usize, cols: usize, scale: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(
                "ensemble needs positive dimensions".into(),
            ));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ensemble scale must be positive and finite; got {scale}"
            )));
        }
        Ok(Ensemble {
            kind,
            rows,
            cols,
            scale,
        })
    }
}

/// One block drawn from the ensemble, deterministic per seed.
pub fn sample_block(ensemble: &Ensemble, seed: u64) -> DMatrix<f64> {
    let mut rng = streams::stream_rng(seed, &[tag::BLOCK]);
    match ensemble.kind {
        EnsembleKind::Gaussian => DMatrix::from_fn(ensemble.rows, ensemble.cols, |_, _| {
            let g: f64 = StandardNormal.sample(&mut rng);
            ensemble.scale * g
        }),
        EnsembleKind::Rademacher => DMatrix::from_fn(ensemble.rows, ensemble.cols, |_, _| {
            if rng.gen::<bool>() {
                ensemble.scale
            } else {
                -ensemble.scale
            }
        }),
    }
}

/// Which block-diagonal flavor an operator is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Dbd,
    Rbd,
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OperatorKind::Dbd => "dbd",
            OperatorKind::Rbd => "rbd",
        })
    }
}

/// Block-diagonal measurement operator, applied matrix-free.
///
/// DBD operators store all `n_blocks` blocks; RBD operators store the one
/// shared block. The dense matrix is never materialized.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    kind: OperatorKind,
    blocks: Vec<DMatrix<f64>>,
    partition: BlockPartition,
}

impl BlockOperator {
    /// Distinct-block operator from explicit blocks, all of one shape.
    pub fn dbd(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("need at least one block".into()));
        }
        let (m, n) = (blocks[0].nrows(), blocks[0].ncols());
        for (j, block) in blocks.iter().enumerate() {
            if block.nrows() != m || block.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "block {j} is {}x{}, expected {m}x{n}",
                    block.nrows(),
                    block.ncols()
                )));
            }
        }
        let partition = BlockPartition::new(blocks.len(), n, m)?;
        Ok(BlockOperator {
            kind: OperatorKind::Dbd,
            blocks,
            partition,
        })
    }

    /// Repeated-block operator: one block reused across `n_blocks` slots.
    pub fn rbd(block: DMatrix<f64>, n_blocks: usize) -> Result<Self> {
        if n_blocks == 0 {
            return Err(Error::InvalidParameter("need at least one block".into()));
        }
        let partition = BlockPartition::new(n_blocks, block.ncols(), block.nrows())?;
        Ok(BlockOperator {
            kind: OperatorKind::Rbd,
            blocks: vec![block],
            partition,
        })
    }

    /// DBD draw with the measurement normalization (entry std 1/sqrt(M)).
    /// Block j comes from the substream (seed, j).
    pub fn sample_dbd(kind: EnsembleKind, partition: BlockPartition, seed: u64) -> Result<Self> {
        partition.validate()?;
        let ensemble =
            Ensemble::normalized(kind, partition.meas_per_block, partition.block_len)?;
        let blocks = (0..partition.n_blocks)
            .map(|j| sample_block(&ensemble, streams::derive_seed(seed, &[tag::BLOCK, j as u64])))
            .collect();
        Ok(BlockOperator {
            kind: OperatorKind::Dbd,
            blocks,
            partition,
        })
    }

    /// RBD draw with the measurement normalization.
    pub fn sample_rbd(kind: EnsembleKind, partition: BlockPartition, seed: u64) -> Result<Self> {
        partition.validate()?;
        let ensemble =
            Ensemble::normalized(kind, partition.meas_per_block, partition.block_len)?;
        let block = sample_block(&ensemble, streams::derive_seed(seed, &[tag::BLOCK, 0]));
        Ok(BlockOperator {
            kind: OperatorKind::Rbd,
            blocks: vec![block],
            partition,
        })
    }

    /// Square unit-variance DBD master, the parent that [`Self::truncate`]
    /// slices cell operators from.
    pub fn sample_dbd_master(
        kind: EnsembleKind,
        n_blocks: usize,
        block_len: usize,
        seed: u64,
    ) -> Result<Self> {
        let partition = BlockPartition::new(n_blocks, block_len, block_len)?;
        let ensemble = Ensemble::with_scale(kind, block_len, block_len, 1.0)?;
        let blocks = (0..n_blocks)
            .map(|j| sample_block(&ensemble, streams::derive_seed(seed, &[tag::BLOCK, j as u64])))
            .collect();
        Ok(BlockOperator {
            kind: OperatorKind::Dbd,
            blocks,
            partition,
        })
    }

    /// Square unit-variance RBD master.
    pub fn sample_rbd_master(
        kind: EnsembleKind,
        n_blocks: usize,
        block_len: usize,
        seed: u64,
    ) -> Result<Self> {
        let partition = BlockPartition::new(n_blocks, block_len, block_len)?;
        let ensemble = Ensemble::with_scale(kind, block_len, block_len, 1.0)?;
        let block = sample_block(&ensemble, streams::derive_seed(seed, &[tag::BLOCK, 0]));
        Ok(BlockOperator {
            kind: OperatorKind::Rbd,
            blocks: vec![block],
            partition,
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn partition(&self) -> BlockPartition {
        self.partition
    }

    /// The block applied to slot j (the same matrix for every j when RBD).
    pub fn block(&self, j: usize) -> &DMatrix<f64> {
        match self.kind {
            OperatorKind::Dbd => &self.blocks[j],
            OperatorKind::Rbd => &self.blocks[0],
        }
    }

    /// y_j = Phi_j x_j for each block, real and imaginary parts separately.
    pub fn apply(&self, x: &DVector<C64>) -> Result<DVector<C64>> {
        let part = self.partition;
        if x.len() != part.n_total {
            return Err(Error::DimensionMismatch(format!(
                "operator takes length {}, signal has length {}",
                part.n_total,
                x.len()
            )));
        }
        let n = part.block_len;
        let m = part.meas_per_block;
        let mut out = DVector::<C64>::zeros(part.meas_total);
        let mut re = DVector::<f64>::zeros(n);
        let mut im = DVector::<f64>::zeros(n);
        for j in 0..part.n_blocks {
            for i in 0..n {
                let v = x[j * n + i];
                re[i] = v.re;
                im[i] = v.im;
            }
            let block = self.block(j);
            let out_re = block * &re;
            let out_im = block * &im;
            for i in 0..m {
                out[j * m + i] = C64::new(out_re[i], out_im[i]);
            }
        }
        Ok(out)
    }

    /// Keeps the first `meas_per_block` rows of every block, rescaled by
    /// 1/sqrt(meas_per_block). Slicing a square unit-variance master this
    /// way yields the measurement-normalized operator for that row count.
    pub fn truncate(&self, meas_per_block: usize) -> Result<BlockOperator> {
        let part = self.partition;
        if part.meas_per_block != part.block_len {
            return Err(Error::InvalidParameter(format!(
                "can only truncate a square master; blocks are {}x{}",
                part.meas_per_block, part.block_len
            )));
        }
        if meas_per_block == 0 || meas_per_block > part.block_len {
            return Err(Error::InvalidParameter(format!(
                "row count must lie in [1, {}]; got {meas_per_block}",
                part.block_len
            )));
        }
        let scale = 1.0 / (meas_per_block as f64).sqrt();
        let blocks = self
            .blocks
            .iter()
            .map(|block| block.rows(0, meas_per_block) * scale)
            .collect();
        Ok(BlockOperator {
            kind: self.kind,
            blocks,
            partition: part.with_meas_per_block(meas_per_block)?,
        })
    }
}

/// J rows of a P x P circulant generated by `symbol`, scaled by 1/sqrt(J).
///
/// Row k (0-based) holds symbol[(p - k) mod P] / sqrt(J) in column p:
///
/// ```text
///          [ r0   r1   r2   ...  ]
/// 1/sqrt(J)[ rP-1 r0   r1   ...  ]
///          [ rP-2 rP-1 r0   ...  ]
/// ```
#[derive(Clone, Debug)]
pub struct PartialCirculant {
    symbol: DVector<f64>,
    n_rows: usize,
}

impl PartialCirculant {
    pub fn new(symbol: DVector<f64>, n_rows: usize) -> Result<Self> {
        if symbol.is_empty() {
            return Err(Error::InvalidParameter("symbol must be nonempty".into()));
        }
        if n_rows == 0 || n_rows > symbol.len() {
            return Err(Error::InvalidParameter(format!(
                "row count must lie in [1, {}]; got {n_rows}",
                symbol.len()
            )));
        }
        Ok(PartialCirculant { symbol, n_rows })
    }

    /// Unit-variance Gaussian symbol of length `signal_len`.
    pub fn sample(signal_len: usize, n_rows: usize, seed: u64) -> Result<Self> {
        let mut rng = streams::stream_rng(seed, &[tag::OPERATOR]);
        let symbol = DVector::from_fn(signal_len, |_, _| StandardNormal.sample(&mut rng));
        PartialCirculant::new(symbol, n_rows)
    }

    pub fn symbol(&self) -> &DVector<f64> {
        &self.symbol
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn signal_len(&self) -> usize {
        self.symbol.len()
    }

    pub fn scale(&self) -> f64 {
        1.0 / (self.n_rows as f64).sqrt()
    }

    /// The J x P matrix, entry (k, p) = symbol[(p - k) mod P] / sqrt(J).
    pub fn dense(&self) -> DMatrix<f64> {
        let p = self.signal_len() as i64;
        let scale = self.scale();
        DMatrix::from_fn(self.n_rows, self.signal_len(), |k, col| {
            let idx = (col as i64 - k as i64).rem_euclid(p) as usize;
            self.symbol[idx] * scale
        })
    }

    pub fn apply(&self, x: &DVector<C64>) -> Result<DVector<C64>> {
        let p = self.signal_len();
        if x.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "circulant takes length {p}, signal has length {}",
                x.len()
            )));
        }
        let scale = self.scale();
        let mut out = DVector::<C64>::zeros(self.n_rows);
        for k in 0..self.n_rows {
            let mut acc = C64::new(0.0, 0.0);
            for col in 0..p {
                let idx = (col as i64 - k as i64).rem_euclid(p as i64) as usize;
                acc += x[col] * self.symbol[idx];
            }
            out[k] = acc * scale;
        }
        Ok(out)
    }
}

/// Stacks the first `n_copies` cyclic upward shifts of x:
/// block j holds x advanced by j positions, entry p = x[(p + j) mod P].
pub fn extend_signal(x: &DVector<C64>, n_copies: usize) -> DVector<C64> {
    let p = x.len();
    DVector::from_fn(p * n_copies, |i, _| {
        let j = i / p;
        let row = i % p;
        x[(row + j) % p]
    })
}

/// Anything that can act as a measurement matrix on complex signals.
pub trait MeasurementOp {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    fn apply(&self, x: &DVector<C64>) -> Result<DVector<C64>>;
}

impl MeasurementOp for BlockOperator {
    fn n_rows(&self) -> usize {
        self.partition.meas_total
    }
    fn n_cols(&self) -> usize {
        self.partition.n_total
    }
    fn apply(&self, x: &DVector<C64>) -> Result<DVector<C64>> {
        BlockOperator::apply(self, x)
    }
}

impl MeasurementOp for PartialCirculant {
    fn n_rows(&self) -> usize {
        self.n_rows
    }
    fn n_cols(&self) -> usize {
        self.signal_len()
    }
    fn apply(&self, x: &DVector<C64>) -> Result<DVector<C64>> {
        PartialCirculant::apply(self, x)
    }
}

impl MeasurementOp for DMatrix<f64> {
    fn n_rows(&self) -> usize {
        self.nrows()
    }
    fn n_cols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &DVector<C64>) -> Result<DVector<C64>> {
        if x.len() != self.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix takes length {}, signal has length {}",
                self.ncols(),
                x.len()
            )));
        }
        let re = self * x.map(|v| v.re);
        let im = self * x.map(|v| v.im);
        Ok(DVector::from_fn(self.nrows(), |i, _| {
            C64::new(re[i], im[i])
        }))
    }
}

impl MeasurementOp for DMatrix<C64> {
    fn n_rows(&self) -> usize {
        self.nrows()
    }
    fn n_cols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &DVector<C64>) -> Result<DVector<C64>> {
        if x.len() != self.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix takes length {}, signal has length {}",
                self.ncols(),
                x.len()
            )));
        }
        Ok(self * x)
    }
}
