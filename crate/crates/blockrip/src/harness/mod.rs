//! Experiment drivers: reproducible Monte Carlo runs with CSV output.
//!
//! Experiments are configured by value (or JSON), seeded through named
//! streams, and parallelized over independent work items whose randomness
//! never depends on scheduling, so a run's output is a pure function of
//! its config.

pub mod config;
pub mod csv_io;
pub mod phase;
pub mod reports;

pub use config::{ExperimentConfig, ExperimentKind, GridRange};
pub use csv_io::{
    format_float, phase_rows, read_phase_csv, write_circulant_csv, write_coherence_csv,
    write_gnuplot_matrix, write_phase_csv, write_ric_csv, PhaseRow, PHASE_HEADER,
};
pub use phase::{dense_composite, run_phase_transition, PhaseCell, PhaseGrid};
pub use reports::{
    paired_gap, quantile, run_circulant_demo, run_coherence_mc, run_ric_compare,
    CirculantDemoReport, CirculantTrial, CoherenceMcReport, RicCompareReport, RicComboStats,
};
