//! CSV persistence with byte-stable formatting.
//!
//! Every float is printed as `{:.16e}` (17 significant digits), which
//! round-trips f64 exactly, so a file can be read back into the numbers
//! that produced it and identical runs produce identical bytes.

use crate::harness::phase::PhaseGrid;
use crate::harness::reports::{CirculantDemoReport, CoherenceMcReport, RicCompareReport};
use crate::{Error, Result};
use std::path::Path;
use std::str::FromStr;

/// Lossless float rendering used in every CSV cell.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// One row of a phase-transition CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseRow {
    pub sparsity: usize,
    pub meas_per_block: usize,
    pub n_blocks: usize,
    pub block_len: usize,
    pub operator_kind: String,
    pub basis: String,
    pub n_trials: usize,
    pub success_fraction: f64,
    pub master_seed: u64,
}

pub const PHASE_HEADER: [&str; 9] = [
    "S",
    "M",
    "J",
    "N",
    "operator_kind",
    "basis",
    "n_trials",
    "success_fraction",
    "master_seed",
];

/// Flatten a grid into CSV rows (grid order).
pub fn phase_rows(grid: &PhaseGrid) -> Vec<PhaseRow> {
    let config = &grid.config;
    grid.cells
        .iter()
        .map(|cell| PhaseRow {
            sparsity: cell.sparsity,
            meas_per_block: cell.meas_per_block,
            n_blocks: config.partition.n_blocks,
            block_len: config.partition.block_len,
            operator_kind: config.operator_kind.to_string(),
            basis: config.basis_label.to_string(),
            n_trials: config.n_trials,
            success_fraction: cell.success_fraction,
            master_seed: config.master_seed,
        })
        .collect()
}

/// Write a phase grid; an empty grid produces a header-only file.
pub fn write_phase_csv(grid: &PhaseGrid, path: &Path) -> Result<()> {
    let mut writer = open_writer(path)?;
    writer.write_record(PHASE_HEADER)?;
    for row in phase_rows(grid) {
        writer.write_record([
            row.sparsity.to_string(),
            row.meas_per_block.to_string(),
            row.n_blocks.to_string(),
            row.block_len.to_string(),
            row.operator_kind,
            row.basis,
            row.n_trials.to_string(),
            format_float(row.success_fraction),
            row.master_seed.to_string(),
        ])?;
    }
    writer.flush().map_err(|e| Error::Io(e))?;
    Ok(())
}

fn parse_field<T: FromStr>(record: &csv::StringRecord, idx: usize, path: &Path) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = record.get(idx).ok_or_else(|| {
        Error::Config(format!(
            "{}: row {:?} is missing column {idx}",
            path.display(),
            record.position().map(|p| p.line())
        ))
    })?;
    raw.parse().map_err(|e| {
        Error::Config(format!(
            "{}: cannot parse {raw:?} in column {idx}: {e}",
            path.display()
        ))
    })
}

/// Read back a phase CSV written by [`write_phase_csv`].
pub fn read_phase_csv(path: &Path) -> Result<Vec<PhaseRow>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let header = reader.headers()?.clone();
    let expected: Vec<&str> = PHASE_HEADER.to_vec();
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Config(format!(
            "{}: unexpected header {:?}",
            path.display(),
            got
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(PhaseRow {
            sparsity: parse_field(&record, 0, path)?,
            meas_per_block: parse_field(&record, 1, path)?,
            n_blocks: parse_field(&record, 2, path)?,
            block_len: parse_field(&record, 3, path)?,
            operator_kind: record.get(4).unwrap_or_default().to_string(),
            basis: record.get(5).unwrap_or_default().to_string(),
            n_trials: parse_field(&record, 6, path)?,
            success_fraction: parse_field(&record, 7, path)?,
            master_seed: parse_field(&record, 8, path)?,
        });
    }
    Ok(rows)
}

/// Write a gnuplot `splot ... nonuniform matrix` file: first row holds the
/// per-block measurement counts, each later row a sparsity level followed
/// by its success fractions.
pub fn write_gnuplot_matrix(rows: &[PhaseRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Config("no rows to export".into()));
    }
    let mut s_values: Vec<usize> = rows.iter().map(|r| r.sparsity).collect();
    s_values.sort_unstable();
    s_values.dedup();
    let mut m_values: Vec<usize> = rows.iter().map(|r| r.meas_per_block).collect();
    m_values.sort_unstable();
    m_values.dedup();

    let find = |s: usize, m: usize| -> Result<f64> {
        rows.iter()
            .find(|r| r.sparsity == s && r.meas_per_block == m)
            .map(|r| r.success_fraction)
            .ok_or_else(|| {
                Error::Config(format!(
                    "grid is not rectangular: no cell at S={s}, M={m}"
                ))
            })
    };

    let mut text = String::new();
    text.push_str(&m_values.len().to_string());
    for m in &m_values {
        text.push(' ');
        text.push_str(&m.to_string());
    }
    text.push('\n');
    for &s in &s_values {
        text.push_str(&s.to_string());
        for &m in &m_values {
            text.push(' ');
            text.push_str(&format_float(find(s, m)?));
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(Error::Io)?;
    Ok(())
}

/// Per-draw coherence values: `draw,mu,gamma`.
pub fn write_coherence_csv(report: &CoherenceMcReport, path: &Path) -> Result<()> {
    let mut writer = open_writer(path)?;
    writer.write_record(["draw", "mu", "gamma"])?;
    for (i, (mu, gamma)) in report
        .mu_values
        .iter()
        .zip(&report.gamma_values)
        .enumerate()
    {
        writer.write_record([
            i.to_string(),
            format_float(*mu),
            format_float(*gamma),
        ])?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

/// Per-draw exact constants: `draw,operator_kind,basis,delta`.
pub fn write_ric_csv(report: &RicCompareReport, path: &Path) -> Result<()> {
    let mut writer = open_writer(path)?;
    writer.write_record(["draw", "operator_kind", "basis", "delta"])?;
    for combo in &report.combos {
        for (i, delta) in combo.deltas.iter().enumerate() {
            writer.write_record([
                i.to_string(),
                combo.operator_kind.to_string(),
                combo.basis.to_string(),
                format_float(*delta),
            ])?;
        }
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

/// Per-trial demo outcomes:
/// `trial,operator_gap,basis_gap,rel_error,success,iters`.
pub fn write_circulant_csv(report: &CirculantDemoReport, path: &Path) -> Result<()> {
    let mut writer = open_writer(path)?;
    writer.write_record([
        "trial",
        "operator_gap",
        "basis_gap",
        "rel_error",
        "success",
        "iters",
    ])?;
    for (i, trial) in report.trials.iter().enumerate() {
        writer.write_record([
            i.to_string(),
            format_float(trial.operator_gap),
            format_float(trial.basis_gap),
            format_float(trial.rel_error),
            (trial.success as u8).to_string(),
            trial.iters.to_string(),
        ])?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}
