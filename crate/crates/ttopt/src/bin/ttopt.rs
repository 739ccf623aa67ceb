//! Command-line benchmark harness.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 when any run in
//! a campaign failed. `TTOPT_MAX_WALL_TIME` (seconds) caps campaign wall
//! time; runs skipped under the guard are reported but are not failures.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use ttopt::harness::{
    emit_report, load_json_report, render_csv, render_json, render_markdown, run_dimension_sweep,
    run_experiment, run_modesize_study, Campaign, ExperimentConfig, Method, ReportFormat,
};

#[derive(Parser)]
#[command(
    name = "ttopt",
    about = "Grid-based gradient-free optimizer benchmark harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Benchmark id (F1..F10), lowercase name, or "all".
    #[arg(long, default_value = "F1")]
    benchmark: String,

    /// Problem dimension (sweep-dims supplies its own list).
    #[arg(long, default_value_t = 10)]
    dim: usize,

    /// Rank cap; omit to derive one from the budget.
    #[arg(long)]
    rank: Option<usize>,

    /// Submode base of the quantized grid.
    #[arg(short = 'p', long, default_value_t = 2)]
    submode_base: usize,

    /// Number of submodes per dimension (mode size is base^submodes).
    #[arg(short = 'q', long, default_value_t = 25)]
    submodes: usize,

    /// Plain mode size; bypasses quantization.
    #[arg(long, conflicts_with = "submodes")]
    mode_size: Option<usize>,

    /// Evaluation budget per run.
    #[arg(long, default_value_t = 100_000)]
    budget: usize,

    /// Seeded runs per configuration.
    #[arg(long, default_value_t = 10)]
    runs: usize,

    /// First seed; runs use seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Planned sweep floor (enters the automatic rank choice).
    #[arg(long, default_value_t = 5)]
    min_sweeps: usize,

    /// Hard sweep cap.
    #[arg(long, default_value_t = 1_000_000)]
    max_sweeps: usize,

    /// Report destination; prints to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Report format (csv, json, markdown); default from the output
    /// extension, falling back to csv.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded campaign on one benchmark (or all).
    Run {
        #[command(flatten)]
        common: CommonOpts,

        /// Solver: the cross-sweep optimizer or uniform random search.
        #[arg(long, default_value = "ttopt")]
        method: String,
    },
    /// One campaign per dimension, budget scaled per dimension.
    SweepDims {
        #[command(flatten)]
        common: CommonOpts,

        /// Comma-separated dimension list.
        #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
        dims: Vec<usize>,

        /// Budget per run is this factor times the dimension.
        #[arg(long, default_value_t = 10_000)]
        budget_per_dim: usize,
    },
    /// Quantized-versus-plain comparison over mode sizes 2^q.
    SweepModes {
        #[command(flatten)]
        common: CommonOpts,

        /// Comma-separated exponent list (mode size 2^q).
        #[arg(long, value_delimiter = ',', default_value = "10,14,20")]
        exponents: Vec<u32>,
    },
    /// Re-emit a stored JSON report in another format.
    Report {
        /// JSON report produced by a campaign command.
        #[arg(long)]
        input: PathBuf,

        #[arg(long, default_value = "markdown")]
        format: String,

        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the benchmark catalog.
    List,
}

fn config_from(common: &CommonOpts, dim: usize, method: Method) -> ExperimentConfig {
    ExperimentConfig {
        benchmark: common.benchmark.clone(),
        dim,
        runs: common.runs,
        method,
        rank: common.rank,
        submode_base: common.submode_base,
        submodes: common.submodes,
        mode_size: common.mode_size,
        budget: common.budget,
        seed_base: common.seed,
        min_sweeps: common.min_sweeps,
        max_sweeps: common.max_sweeps,
        output: common
            .out
            .as_ref()
            .map(|p| p.display().to_string()),
    }
}

fn pick_format(explicit: Option<&str>, out: Option<&PathBuf>) -> Result<ReportFormat, String> {
    if let Some(name) = explicit {
        return ReportFormat::from_name(name).ok_or_else(|| format!("unknown format {name:?}"));
    }
    Ok(out
        .and_then(|p| ReportFormat::from_path(p))
        .unwrap_or(ReportFormat::Csv))
}

fn deliver(campaign: &Campaign, format: ReportFormat, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(path) => emit_report(campaign, format, path).map_err(|e| e.to_string()),
        None => {
            let body = match format {
                ReportFormat::Csv => render_csv(&campaign.records),
                ReportFormat::Json => render_json(campaign),
                ReportFormat::Markdown => render_markdown(campaign),
            };
            print!("{body}");
            Ok(())
        }
    }
}

fn summarize(campaign: &Campaign) {
    for a in &campaign.aggregates {
        eprintln!(
            "{} d={} {}: mean error {:.3e}, mean time {:.2}s over {} runs",
            a.benchmark, a.d, a.method, a.mean_error, a.mean_time_s, a.runs
        );
    }
    for f in &campaign.failures {
        eprintln!("FAILED {} seed {}: {}", f.benchmark, f.seed, f.message);
    }
    if campaign.skipped > 0 {
        eprintln!(
            "skipped {} runs under the {} guard",
            campaign.skipped,
            ttopt::harness::MAX_WALL_TIME_ENV
        );
    }
}

fn real_main() -> Result<bool, String> {
    // clap's own error path would exit with 2; config errors must be 1.
    let cli = Cli::try_parse().map_err(|e| e.to_string())?;
    match cli.command {
        Command::Run { common, method } => {
            let method = match method.to_ascii_lowercase().as_str() {
                "ttopt" => Method::TtOpt,
                "random" => Method::Random,
                other => return Err(format!("unknown method {other:?}")),
            };
            let cfg = config_from(&common, common.dim, method);
            let campaign = run_experiment(&cfg).map_err(|e| e.to_string())?;
            summarize(&campaign);
            let format = pick_format(common.format.as_deref(), common.out.as_ref())?;
            deliver(&campaign, format, common.out.as_ref())?;
            Ok(campaign.failures.is_empty())
        }
        Command::SweepDims {
            common,
            dims,
            budget_per_dim,
        } => {
            let cfg = config_from(&common, dims.first().copied().unwrap_or(10), Method::TtOpt);
            let campaign =
                run_dimension_sweep(&cfg, &dims, budget_per_dim).map_err(|e| e.to_string())?;
            summarize(&campaign);
            let format = pick_format(common.format.as_deref(), common.out.as_ref())?;
            deliver(&campaign, format, common.out.as_ref())?;
            Ok(campaign.failures.is_empty())
        }
        Command::SweepModes { common, exponents } => {
            let cfg = config_from(&common, common.dim, Method::TtOpt);
            let campaign = run_modesize_study(&cfg, &exponents).map_err(|e| e.to_string())?;
            summarize(&campaign);
            let format = pick_format(common.format.as_deref(), common.out.as_ref())?;
            deliver(&campaign, format, common.out.as_ref())?;
            Ok(campaign.failures.is_empty())
        }
        Command::Report { input, format, out } => {
            let campaign = load_json_report(&input).map_err(|e| e.to_string())?;
            let format = pick_format(Some(&format), out.as_ref())?;
            deliver(&campaign, format, out.as_ref())?;
            Ok(true)
        }
        Command::List => {
            for b in ttopt::benchmarks::catalog() {
                println!(
                    "{}  {:<12} box [{}, {}]  min {}",
                    b.id, b.name, b.lower, b.upper, b.known_min
                );
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}
