//! `renn`: stream descriptors through the identity-memory engine from the
//! command line.
//!
//! Exit codes: 0 success, 1 usage error (flags, config bounds, missing
//! labels), 2 data error (malformed files, stream-order violations,
//! snapshot mismatches, I/O).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod error;
mod eval;
mod inspect;
mod run;
mod simulate;
mod stream;

use error::CliError;
use renn_core::Config;

#[derive(Parser)]
#[command(
    name = "renn",
    version,
    about = "Streaming identity memory: reverse nearest neighbour matching with eligibility forgetting",
    propagate_version = true
)]
struct Cli {
    /// Search worker threads. Outputs never depend on this.
    #[arg(long, global = true, env = "RENN_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream frames from a file through the engine, one report line per frame.
    Run(RunArgs),
    /// Generate a synthetic inlier/outlier stream and summarize what the
    /// engine learned from it.
    Simulate(SimulateArgs),
    /// Train over subset A for several passes, scoring precision/recall on
    /// subset B after each pass.
    Eval(EvalArgs),
    /// Print a human-readable summary of a snapshot file.
    Inspect(InspectArgs),
}

/// Engine thresholds, shared by the subcommands. Unset flags fall back to
/// the defaults (or to the snapshot's embedded config when resuming).
#[derive(Args, Clone)]
struct ConfigArgs {
    /// Distance-ratio acceptance threshold, in (0, 1].
    #[arg(long, env = "RENN_RHO_BAR")]
    rho_bar: Option<f64>,

    /// Eligibility removal threshold, in (0, 1).
    #[arg(long, env = "RENN_E_BAR")]
    e_bar: Option<f64>,

    /// Exponent applied to the distance ratio in the decay factor, >= 1.
    #[arg(long, env = "RENN_ALPHA")]
    alpha: Option<f64>,

    /// Frames an element may go unmatched before it is pruned as stale.
    #[arg(long, env = "RENN_MAX_STALE")]
    max_stale: Option<u64>,

    /// Absolute distance gate for single-observation frames (unset:
    /// such frames match nothing).
    #[arg(long, env = "RENN_ABS_GATE")]
    abs_gate: Option<f64>,

    /// L2-normalize every descriptor on ingest.
    #[arg(long, env = "RENN_NORMALIZE")]
    normalize: bool,

    /// Seed recorded in the config; only synthetic tooling draws from it.
    #[arg(long, env = "RENN_SEED")]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn build(&self, dimension: usize) -> Config {
        let mut config = Config::new(dimension);
        if let Some(v) = self.rho_bar {
            config.rho_bar = v;
        }
        if let Some(v) = self.e_bar {
            config.e_bar = v;
        }
        if let Some(v) = self.alpha {
            config.alpha = v;
        }
        if let Some(v) = self.max_stale {
            config.max_stale = v;
        }
        if let Some(v) = self.abs_gate {
            config.abs_gate = Some(v);
        }
        config.normalize = self.normalize;
        if let Some(v) = self.seed {
            config.seed = v;
        }
        config
    }

    /// When resuming from a snapshot the embedded config wins; explicitly
    /// provided flags must agree with it.
    fn check_resume(&self, embedded: &Config) -> Result<(), String> {
        fn conflict<T: PartialEq + std::fmt::Debug>(
            flag: &str,
            given: Option<T>,
            embedded: T,
        ) -> Result<(), String> {
            match given {
                Some(v) if v != embedded => Err(format!(
                    "--{flag} {v:?} conflicts with the snapshot config ({embedded:?})"
                )),
                _ => Ok(()),
            }
        }
        conflict("rho-bar", self.rho_bar, embedded.rho_bar)?;
        conflict("e-bar", self.e_bar, embedded.e_bar)?;
        conflict("alpha", self.alpha, embedded.alpha)?;
        conflict("max-stale", self.max_stale, embedded.max_stale)?;
        if let Some(gate) = self.abs_gate {
            conflict(
                "abs-gate",
                Some(gate),
                embedded.abs_gate.unwrap_or(f64::NAN),
            )?;
        }
        if self.normalize && !embedded.normalize {
            return Err("--normalize conflicts with the snapshot config".into());
        }
        Ok(())
    }
}

#[derive(Args)]
struct RunArgs {
    /// Stream file: a header line then one frame per line.
    stream: PathBuf,

    /// Write per-frame report lines here instead of stdout.
    #[arg(long)]
    report_out: Option<PathBuf>,

    /// Resume from this snapshot; its embedded config takes effect.
    #[arg(long)]
    snapshot_in: Option<PathBuf>,

    /// Write the final memory snapshot here.
    #[arg(long)]
    snapshot_out: Option<PathBuf>,

    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Outliers far from the inliers.
    Separated,
    /// Outliers near the inliers.
    Medium,
    /// Outliers overlapping the inliers.
    Overlap,
}

#[derive(Args)]
struct SimulateArgs {
    /// Directory for summary.json, histogram.jsonl and scatter.jsonl.
    #[arg(long)]
    out_dir: PathBuf,

    /// Separation regime of the standard benchmark.
    #[arg(long, value_enum, default_value = "separated")]
    preset: Preset,

    #[arg(long)]
    inlier_mean: Option<f64>,
    #[arg(long)]
    inlier_std: Option<f64>,
    #[arg(long)]
    outlier_mean: Option<f64>,
    #[arg(long)]
    outlier_std: Option<f64>,
    /// Probability that an observation is an outlier, in [0, 1).
    #[arg(long)]
    outlier_fraction: Option<f64>,
    /// Number of frames to generate.
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    obs_per_frame: Option<usize>,
    #[arg(long)]
    dimension: Option<usize>,

    /// Also write the generated stream here, in `run` input format.
    #[arg(long)]
    stream_out: Option<PathBuf>,

    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Training set (stream format, labels required).
    #[arg(long)]
    subset_a: PathBuf,

    /// Held-out set (stream format, labels required).
    #[arg(long)]
    subset_b: PathBuf,

    /// Training passes over subset A.
    #[arg(long, default_value_t = 3)]
    passes: usize,

    /// Ground-truth label counted as positive.
    #[arg(long, default_value = "target")]
    target_label: String,

    /// Force the predicted-positive identity instead of auto-detecting it
    /// from subset A after each pass.
    #[arg(long)]
    target_id: Option<u64>,

    /// Write precision/recall lines here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct InspectArgs {
    /// Snapshot file to summarize.
    snapshot: PathBuf,
}

fn main() -> ExitCode {
    // Die quietly when the consumer closes the pipe (renn run ... | head).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };

    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("usage error: --workers: {e}");
            return ExitCode::from(1);
        }
    }

    let outcome = match cli.command {
        Command::Run(args) => run::run(&args),
        Command::Simulate(args) => simulate::run(&args),
        Command::Eval(args) => eval::run(&args),
        Command::Inspect(args) => inspect::run(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("data error: {e:#}");
            ExitCode::from(2)
        }
    }
}
