//! Restricted isometry constants by exhaustive or sampled support search.
//!
//! For a measurement map A and orthobasis U, the constant at sparsity S is
//! the smallest delta with (1-delta)||b||^2 <= ||A U b||^2 <= (1+delta)||b||^2
//! over all S-sparse b. Restricted to one support T it is governed by the
//! extreme eigenvalues of the Gram matrix of A U_T, so the exact constant
//! is a max over all binomial(n, S) supports. That count explodes quickly;
//! enumeration is capped and a Monte Carlo variant samples supports instead,
//! giving a lower bound on the true constant.

use crate::bases::Orthobasis;
use crate::operators::MeasurementOp;
use crate::streams::{self, tag};
use crate::{C64, Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::seq::index;

/// Refuse to enumerate more supports than this.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Isometry defect over a family of supports.
#[derive(Clone, Debug)]
pub struct RicEstimate {
    /// max(lambda_max - 1, 1 - lambda_min) over the supports examined.
    pub delta: f64,
    /// The support achieving `delta` (lexicographically first on ties).
    pub worst_support: Vec<usize>,
    /// Smallest Gram eigenvalue seen anywhere in the family.
    pub lambda_min: f64,
    /// Largest Gram eigenvalue seen anywhere in the family.
    pub lambda_max: f64,
    /// Whether every support of the requested size was examined.
    pub exact: bool,
}

fn validate_support(support: &[usize], n_total: usize) -> Result<()> {
    if support.is_empty() {
        return Err(Error::InvalidParameter("support must be nonempty".into()));
    }
    for w in support.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidParameter(format!(
                "support must be strictly increasing; got {:?}",
                support
            )));
        }
    }
    let last = *support.last().unwrap();
    if last >= n_total {
        return Err(Error::InvalidParameter(format!(
            "support index {last} out of range for {n_total} coefficients"
        )));
    }
    Ok(())
}

/// Extreme eigenvalues of (A U_T)^H (A U_T) for one support T.
///
/// The composite columns are measured one basis column at a time, so `op`
/// only needs a forward apply. Eigenvalues of the hermitized Gram matrix
/// are clamped below at zero, where they are in exact arithmetic.
pub fn support_extremes(
    op: &impl MeasurementOp,
    basis: &Orthobasis,
    support: &[usize],
) -> Result<(f64, f64)> {
    validate_support(support, basis.n_total())?;
    if op.n_cols() != basis.n_total() {
        return Err(Error::DimensionMismatch(format!(
            "operator takes length-{} inputs but the basis has {} columns",
            op.n_cols(),
            basis.n_total()
        )));
    }
    let s = support.len();
    let mut composite = DMatrix::<C64>::zeros(op.n_rows(), s);
    for (slot, &idx) in support.iter().enumerate() {
        let col = DVector::<C64>::from_column_slice(basis.entries().column(idx).as_slice());
        composite.set_column(slot, &op.apply(&col)?);
    }
    let gram = composite.adjoint() * &composite;
    // Roundoff can leave a tiny skew part; hermitize before the eigensolve.
    let gram = (&gram + gram.adjoint()) * C64::new(0.5, 0.0);
    let eigen = gram.symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &lambda in eigen.eigenvalues.iter() {
        lo = lo.min(lambda);
        hi = hi.max(lambda);
    }
    Ok((lo.max(0.0), hi))
}

fn binomial_capped(n: usize, k: usize, cap: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
        if acc > cap {
            return None;
        }
    }
    Some(acc)
}

struct RicAccumulator {
    lambda_min: f64,
    lambda_max: f64,
    min_support: Vec<usize>,
    max_support: Vec<usize>,
}

impl RicAccumulator {
    fn new() -> Self {
        RicAccumulator {
            lambda_min: f64::INFINITY,
            lambda_max: f64::NEG_INFINITY,
            min_support: Vec::new(),
            max_support: Vec::new(),
        }
    }

    fn absorb(&mut self, support: &[usize], lo: f64, hi: f64) {
        if lo < self.lambda_min {
            self.lambda_min = lo;
            self.min_support = support.to_vec();
        }
        if hi > self.lambda_max {
            self.lambda_max = hi;
            self.max_support = support.to_vec();
        }
    }

    fn finish(self, exact: bool) -> RicEstimate {
        let upper = self.lambda_max - 1.0;
        let lower = 1.0 - self.lambda_min;
        let (delta, worst_support) = if upper > lower {
            (upper, self.max_support)
        } else if lower > upper {
            (lower, self.min_support)
        } else {
            // Exact tie: report the lexicographically smaller support.
            let worst = if self.min_support <= self.max_support {
                self.min_support
            } else {
                self.max_support
            };
            (upper, worst)
        };
        RicEstimate {
            delta,
            worst_support,
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
            exact,
        }
    }
}

/// Advance `support` to the next size-k combination of {0..n-1} in
/// lexicographic order; false once the last combination has been seen.
fn next_combination(support: &mut [usize], n: usize) -> bool {
    let k = support.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if support[i] < n - k + i {
            support[i] += 1;
            for j in i + 1..k {
                support[j] = support[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exact restricted isometry constant by full support enumeration.
///
/// Fails with [`Error::EnumerationCap`] when binomial(n_total, sparsity)
/// exceeds `cap` (or [`DEFAULT_ENUMERATION_CAP`] if `cap` is `None`).
pub fn exact_ric(
    op: &impl MeasurementOp,
    basis: &Orthobasis,
    sparsity: usize,
    cap: Option<u128>,
) -> Result<RicEstimate> {
    let n = basis.n_total();
    if sparsity == 0 || sparsity > n {
        return Err(Error::InvalidParameter(format!(
            "sparsity must lie in [1, {n}]; got {sparsity}"
        )));
    }
    let cap = cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    if binomial_capped(n, sparsity, cap).is_none() {
        // Exhausting the cap leaves the count known only as "more than cap".
        return Err(Error::EnumerationCap {
            needed: cap.saturating_add(1),
            cap,
        });
    }

    let mut acc = RicAccumulator::new();
    let mut support: Vec<usize> = (0..sparsity).collect();
    loop {
        let (lo, hi) = support_extremes(op, basis, &support)?;
        acc.absorb(&support, lo, hi);
        if !next_combination(&mut support, n) {
            break;
        }
    }
    Ok(acc.finish(true))
}

/// Sampled lower bound on the restricted isometry constant.
///
/// Draws `n_supports` uniform supports from a stream seeded by `seed`; the
/// draws are sequential, so a longer run revisits every support a shorter
/// run with the same seed saw.
pub fn monte_carlo_ric(
    op: &impl MeasurementOp,
    basis: &Orthobasis,
    sparsity: usize,
    n_supports: usize,
    seed: u64,
) -> Result<RicEstimate> {
    let n = basis.n_total();
    if sparsity == 0 || sparsity > n {
        return Err(Error::InvalidParameter(format!(
            "sparsity must lie in [1, {n}]; got {sparsity}"
        )));
    }
    if n_supports == 0 {
        return Err(Error::InvalidParameter("need at least one support".into()));
    }
    let mut rng = streams::stream_rng(seed, &[tag::SUPPORT]);
    let mut acc = RicAccumulator::new();
    for _ in 0..n_supports {
        let mut support = index::sample(&mut rng, n, sparsity).into_vec();
        support.sort_unstable();
        let (lo, hi) = support_extremes(op, basis, &support)?;
        acc.absorb(&support, lo, hi);
    }
    Ok(acc.finish(false))
}

/// Convenience: isometry defect of the composite A U restricted to the
/// single given support.
pub fn support_delta(
    op: &impl MeasurementOp,
    basis: &Orthobasis,
    support: &[usize],
) -> Result<f64> {
    let (lo, hi) = support_extremes(op, basis, support)?;
    Ok((hi - 1.0).max(1.0 - lo))
}
