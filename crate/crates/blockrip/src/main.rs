use anyhow::{bail, Context};
use blockrip::harness::{self, ExperimentKind};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "blockrip",
    version,
    about = "Block-diagonal compressive sensing experiments",
    propagate_version = true
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Override the experiment seed (for `phase`, overrides the config's
    /// master_seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (for `phase`, overrides the config's output_path).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sparsity-versus-measurements success grid from a JSON config.
    Phase {
        /// Path to the experiment config.
        #[arg(long)]
        config: PathBuf,
    },
    /// Sample random orthobases and tally coherence-envelope exceedances.
    CoherenceMc {
        /// Number of signal blocks.
        #[arg(long, default_value_t = 16)]
        blocks: usize,
        /// Length of each block.
        #[arg(long, default_value_t = 16)]
        block_len: usize,
        /// Number of basis draws.
        #[arg(long, default_value_t = 200)]
        draws: usize,
        /// Multiplier on sqrt(ln n) for the flat-coherence envelope.
        #[arg(long, default_value_t = 3.5)]
        beta_mu: f64,
        /// Additive slack for the block-coherence envelope.
        #[arg(long, default_value_t = 1.0)]
        beta_gamma: f64,
    },
    /// Compare exact restricted-isometry constants across bases at a scale
    /// where full support enumeration is feasible.
    RicCompare {
        /// Number of signal blocks.
        #[arg(long, default_value_t = 4)]
        blocks: usize,
        /// Length of each block.
        #[arg(long, default_value_t = 4)]
        block_len: usize,
        /// Measurement rows kept per block.
        #[arg(long, default_value_t = 2)]
        meas: usize,
        /// Sparsity of the constants being compared.
        #[arg(long, default_value_t = 2)]
        sparsity: usize,
        /// Number of operator draws.
        #[arg(long, default_value_t = 100)]
        ops: usize,
    },
    /// Verify the circulant-to-block-diagonal reduction and recover sparse
    /// signals through it.
    CirculantDemo {
        /// Circulant period (signal length).
        #[arg(long, default_value_t = 128)]
        signal_len: usize,
        /// Circulant rows kept (also the block count of the reduction).
        #[arg(long, default_value_t = 64)]
        rows: usize,
        /// Nonzeros in the test signals.
        #[arg(long, default_value_t = 4)]
        sparsity: usize,
        /// Number of trials.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Relative-error threshold counted as success.
        #[arg(long, default_value_t = 1e-2)]
        threshold: f64,
    },
    /// Convert a phase CSV into a gnuplot nonuniform-matrix file.
    ExportGnuplot {
        /// Phase CSV produced by the `phase` subcommand.
        csv: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }

    match cli.command {
        Command::Phase { config } => {
            let mut config = harness::ExperimentConfig::from_json_file(&config)?;
            if config.kind != ExperimentKind::PhaseTransition {
                bail!("the phase subcommand needs kind = phase_transition");
            }
            if let Some(seed) = cli.global.seed {
                config.master_seed = seed;
            }
            if let Some(out) = cli.global.out {
                config.output_path = Some(out);
            }
            let Some(out) = config.output_path.clone() else {
                bail!("no output path: set output_path in the config or pass --out");
            };
            let grid = harness::run_phase_transition(&config)?;
            harness::write_phase_csv(&grid, &out)?;
            println!(
                "phase grid: {} cells, total success mass {:.3}, written to {}",
                grid.cells.len(),
                grid.total_success_mass(),
                out.display()
            );
        }
        Command::CoherenceMc {
            blocks,
            block_len,
            draws,
            beta_mu,
            beta_gamma,
        } => {
            let seed = cli.global.seed.unwrap_or(0);
            let report =
                harness::run_coherence_mc(blocks, block_len, draws, beta_mu, beta_gamma, seed)?;
            println!(
                "{} draws at n = {} (J = {}, N = {}), seed {}",
                report.n_draws, report.n_total, report.n_blocks, report.block_len, seed
            );
            println!(
                "flat coherence:  median {:.4}, max {:.4}, envelope {:.4}, exceeded {}x ({:.2}%)",
                report.mu_quantile(0.5),
                report.mu_quantile(1.0),
                report.mu_bound,
                report.mu_exceed,
                100.0 * report.mu_exceed_fraction()
            );
            println!(
                "block coherence: median {:.4}, max {:.4}, envelope {:.4}, exceeded {}x ({:.2}%)",
                report.gamma_quantile(0.5),
                report.gamma_quantile(1.0),
                report.gamma_bound,
                report.gamma_exceed,
                100.0 * report.gamma_exceed_fraction()
            );
            if let Some(out) = cli.global.out {
                harness::write_coherence_csv(&report, &out)?;
                println!("per-draw values written to {}", out.display());
            }
        }
        Command::RicCompare {
            blocks,
            block_len,
            meas,
            sparsity,
            ops,
        } => {
            let seed = cli.global.seed.unwrap_or(0);
            let report =
                harness::run_ric_compare(blocks, block_len, meas, sparsity, ops, seed)?;
            println!(
                "{} operator draws, sparsity {}, J = {}, N = {}, M = {}, seed {}",
                report.n_ops,
                report.sparsity,
                report.partition.n_blocks,
                report.partition.block_len,
                report.partition.meas_per_block,
                seed
            );
            for combo in &report.combos {
                println!(
                    "  {} under {:<9} mean delta {:.4}",
                    combo.operator_kind, combo.basis, combo.mean_delta
                );
            }
            if let Some(out) = cli.global.out {
                harness::write_ric_csv(&report, &out)?;
                println!("per-draw constants written to {}", out.display());
            }
        }
        Command::CirculantDemo {
            signal_len,
            rows,
            sparsity,
            trials,
            threshold,
        } => {
            let seed = cli.global.seed.unwrap_or(0);
            let report = harness::run_circulant_demo(
                signal_len, rows, sparsity, trials, threshold, seed,
            )?;
            println!(
                "{} trials at period {}, {} rows, sparsity {}, seed {}",
                report.n_trials, report.signal_len, report.n_rows, report.sparsity, seed
            );
            println!(
                "identity gaps: operator {:.3e}, basis {:.3e}",
                report.max_operator_gap, report.max_basis_gap
            );
            println!(
                "recoveries: {}/{} within {:.0e} relative error",
                report.n_success, report.n_trials, report.success_threshold
            );
            if let Some(out) = cli.global.out {
                harness::write_circulant_csv(&report, &out)?;
                println!("per-trial outcomes written to {}", out.display());
            }
        }
        Command::ExportGnuplot { csv } => {
            let rows = harness::read_phase_csv(&csv)?;
            let out = cli
                .global
                .out
                .unwrap_or_else(|| csv.with_extension("dat"));
            harness::write_gnuplot_matrix(&rows, &out)?;
            println!("gnuplot matrix written to {}", out.display());
        }
    }
    Ok(())
}
