//! `ecmsim` command-line driver.
//!
//! Exit codes: 0 success, 1 validation or data error, 2 usage error. Every
//! failure prints one `error: ...` line to stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ecmsim", version, about = "Intervention-schedule simulation over evolutionary causal matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a config; print conservativeness and schedule expansions.
    Validate { config: PathBuf },
    /// Evolve every schedule of a config and write trajectory CSVs.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write status fractions instead of counts.
        #[arg(long)]
        normalize: bool,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Run a built-in reference simulation (sim1, sim2, sim3, sim4).
    Paper {
        #[arg(value_parser = ["sim1", "sim2", "sim3", "sim4"])]
        sim: String,
        /// Directory for trajectories, report.txt and results.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Bonferroni multiplier for the sim1 t-tests.
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        bonferroni: u32,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Expand a schedule pattern.
    Schedule {
        pattern: String,
        #[arg(long)]
        length: usize,
        /// Comma-separated condition labels the pattern may use.
        #[arg(long, value_delimiter = ',')]
        conditions: Option<Vec<String>>,
    },
    /// Stationary distribution of one condition matrix.
    Stationary {
        config: PathBuf,
        #[arg(long)]
        condition: String,
    },
    /// Agent-level Monte Carlo run of every schedule of a config.
    Montecarlo {
        config: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        agents: u64,
        /// Overrides `options.seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Statistics over a trajectory CSV.
    Stats {
        #[command(subcommand)]
        kind: StatsCommand,
    },
}

#[derive(Debug, Args)]
struct Jobs {
    /// Worker threads for schedule evaluation; output does not depend on it.
    #[arg(long, env = "ECMSIM_JOBS", value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
}

#[derive(Debug, Args)]
struct Input {
    /// Trajectory CSV (header `t,schedule,<statuses>`).
    #[arg(long)]
    input: PathBuf,
    /// First t of the window (default 1).
    #[arg(long)]
    from: Option<usize>,
    /// Last t of the window (default: trajectory length).
    #[arg(long)]
    to: Option<usize>,
    /// Machine-readable result rows (default: `<input stem>.<kind>.csv` beside the input).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Variant {
    Pooled,
    Welch,
    Paired,
}

#[derive(Debug, Subcommand)]
enum StatsCommand {
    /// Two-sample t-test with Cohen's d.
    ///
    /// Compares `--status` against `--other-status` within `--schedule`, or
    /// against the same status in `--against` when that is given.
    Ttest {
        #[command(flatten)]
        input: Input,
        /// Schedule to analyse (default: first in the file).
        #[arg(long)]
        schedule: Option<String>,
        /// Status column (default: first).
        #[arg(long)]
        status: Option<String>,
        /// Second status column within the same schedule (default: second).
        #[arg(long, conflicts_with = "against")]
        other_status: Option<String>,
        /// Second schedule, same status.
        #[arg(long)]
        against: Option<String>,
        #[arg(long, value_enum, default_value_t = Variant::Pooled)]
        variant: Variant,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        bonferroni: u32,
    },
    /// One-way ANOVA across schedules with Scheffe post-hoc letters.
    Anova {
        #[command(flatten)]
        input: Input,
        /// Status column (default: first).
        #[arg(long)]
        status: Option<String>,
        /// Schedules to compare (default: all).
        #[arg(long, value_delimiter = ',')]
        schedules: Option<Vec<String>>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Random-intercept mixed model fitted by maximum likelihood.
    Lmm {
        #[command(flatten)]
        input: Input,
        /// Dependent status column (default: first).
        #[arg(long)]
        y: Option<String>,
        /// Fixed effect: `schedule` (its 1-based position) or a status column.
        #[arg(long, default_value = "schedule")]
        x: String,
        /// Treat `--x schedule` as categorical, dummy coded against `--reference`.
        #[arg(long)]
        categorical: bool,
        /// Reference schedule for `--categorical` (default: last).
        #[arg(long, requires = "categorical")]
        reference: Option<String>,
        /// Cluster for the random intercept: `t` or `schedule`.
        #[arg(long, default_value = "t", value_parser = ["t", "schedule"])]
        cluster: String,
    },
}

/// A failure with its exit code.
pub enum Failure {
    Usage(String),
    Data(String),
    /// Stdout was closed by the reader.
    Closed,
}

impl Failure {
    pub fn data(e: impl std::fmt::Display) -> Self {
        Failure::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: usage: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) | Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: usage: {}", single_line(&msg));
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {}", single_line(&msg));
            ExitCode::from(1)
        }
    }
}

fn single_line(s: &str) -> String {
    s.lines().map(str::trim).collect::<Vec<_>>().join(" ")
}
