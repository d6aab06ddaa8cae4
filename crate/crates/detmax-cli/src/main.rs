//! `detmax`: solvers, experiment sweeps, and a verification suite for
//! determinant maximization over point sets.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 verification
//! failure. All randomness is seeded; repeated runs with the same flags
//! write byte-identical report files unless `--timing` is given.

mod experiments;
mod suite;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use detmax::data::{
    derive_seed, load_csv, render_report, sample_gaussian, sample_unit_sphere, write_report,
    DataError, DatasetSource, ExperimentConfig, ReportFormat,
};
use detmax::diagnostics::tightness_instance;
use detmax::solvers::{greedy, local_search, Solution};
use detmax::{LogVolume, PointSet};
use experiments::{run_grid, SweepPlan};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "detmax",
    version,
    about = "Determinant maximization: solvers, sweeps, verification"
)]
struct Cli {
    /// Record wall-clock seconds in report rows; off by default so
    /// repeated runs emit identical bytes
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the selected points
    Solve(SolveArgs),
    /// Sweep k on partitioned data and report max local-optimality ratios
    Fig1(Fig1Args),
    /// Dense k sweep on small parts, k up to the part size
    Fig2(Fig2Args),
    /// Sweep part sizes for several k
    Fig3(Fig3Args),
    /// Run the built-in verification suite
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    Greedy,
    LocalSearch,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> ReportFormat {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Data source: a CSV path or one of sphere | gaussian | tightness
    #[arg(long)]
    dataset: String,
    /// Points to generate (sphere and gaussian sources)
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Ambient dimension (sphere and gaussian sources)
    #[arg(long, default_value_t = 784)]
    d: usize,
    /// Number of points to select
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, value_enum, default_value_t = Algorithm::Greedy)]
    algorithm: Algorithm,
    /// Minimum relative volume gain per swap (local-search; default 0.1)
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GridCommon {
    /// Data source: a CSV path or one of sphere | gaussian
    #[arg(long, default_value = "sphere")]
    dataset: String,
    /// Ambient dimension for generated data
    #[arg(long, default_value_t = 784)]
    d: usize,
    /// Parts per repetition
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Base seed; repetition seeds derive from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeded repetitions averaged into each row
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Report file; omit to print the table
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args)]
struct Fig1Args {
    #[command(flatten)]
    common: GridCommon,
    /// Points per part
    #[arg(long, default_value_t = 3000)]
    part_size: usize,
    /// Comma-separated k values
    #[arg(long, default_value = "1,2,4,6,8,10,12,14,16,18,20")]
    k_grid: String,
}

#[derive(Args)]
struct Fig2Args {
    #[command(flatten)]
    common: GridCommon,
    /// Points per part
    #[arg(long, default_value_t = 300)]
    part_size: usize,
    /// Comma-separated k values
    #[arg(long, default_value = "1,50,100,150,200,250,300")]
    k_grid: String,
}

#[derive(Args)]
struct Fig3Args {
    #[command(flatten)]
    common: GridCommon,
    /// Comma-separated part sizes
    #[arg(long, default_value = "500,1000,1500,2000,2500,3000,3500,4000")]
    size_grid: String,
    /// Comma-separated k values
    #[arg(long, default_value = "5,10,15,20")]
    k_grid: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// fast | full
    #[arg(default_value = "fast")]
    level: String,
}

enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
    Verification,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runtime(err: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(err.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_worker_pool();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Verification) => ExitCode::from(3),
    }
}

/// Sizes the worker pool from DETMAX_WORKERS; unset means one worker per
/// core. Worker count never changes results, only wall time.
fn init_worker_pool() {
    if let Ok(v) = std::env::var("DETMAX_WORKERS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    eprintln!("warning: could not size the worker pool: {e}");
                }
            }
            _ => eprintln!("warning: ignoring invalid DETMAX_WORKERS value {v:?}"),
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Fig1(args) => run_fig(
            "fig1",
            args.common,
            vec![args.part_size],
            &args.k_grid,
            cli.timing,
        ),
        Command::Fig2(args) => run_fig(
            "fig2",
            args.common,
            vec![args.part_size],
            &args.k_grid,
            cli.timing,
        ),
        Command::Fig3(args) => {
            let sizes = parse_grid_list(&args.size_grid, "size grid")?;
            run_fig("fig3", args.common, sizes, &args.k_grid, cli.timing)
        }
        Command::Verify(args) => cmd_verify(args),
    }
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let k = args.k as usize;
    let (points, label) = solve_dataset(&args, k)?;
    if k > points.len() {
        return Err(usage(format!(
            "k = {k} exceeds the {} available points",
            points.len()
        )));
    }
    println!("dataset: {label} ({} points, dim {})", points.len(), points.dim());
    let started = Instant::now();
    match args.algorithm {
        Algorithm::Greedy => {
            println!("algorithm: greedy");
            let sol = greedy(&points, k).map_err(runtime)?;
            print_solution(&points, &sol, None, started);
        }
        Algorithm::LocalSearch => {
            let eps = args.epsilon.unwrap_or(0.1);
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(usage(format!(
                    "epsilon must be a strictly positive real, got {eps}"
                )));
            }
            println!("algorithm: local-search (epsilon = {eps})");
            let (sol, swaps) = local_search(&points, k, eps).map_err(runtime)?;
            print_solution(&points, &sol, Some(swaps), started);
        }
    }
    Ok(())
}

fn solve_dataset(args: &SolveArgs, k: usize) -> Result<(PointSet, String), CliError> {
    match args.dataset.as_str() {
        "sphere" => {
            let p = sample_unit_sphere(args.n, args.d, args.seed)
                .map_err(|e| usage(e.to_string()))?;
            Ok((p, "sphere".into()))
        }
        "gaussian" => {
            let p =
                sample_gaussian(args.n, args.d, args.seed).map_err(|e| usage(e.to_string()))?;
            Ok((p, "gaussian".into()))
        }
        "tightness" => {
            let p = tightness_instance(k).map_err(|e| usage(e.to_string()))?;
            Ok((p, "tightness".into()))
        }
        path => {
            let load = load_csv(Path::new(path)).map_err(runtime)?;
            if load.dropped_rows > 0 {
                eprintln!("note: dropped {} unparseable rows", load.dropped_rows);
            }
            Ok((load.points, format!("csv {path}")))
        }
    }
}

fn print_solution(points: &PointSet, sol: &Solution, swaps: Option<usize>, started: Instant) {
    println!("selected ids: {:?}", sol.selected_ids(points));
    match sol.log_vol() {
        LogVolume::Finite(x) => println!("log volume: {x}"),
        LogVolume::Zero => println!("log volume: -inf (zero volume, rank deficient)"),
    }
    if let Some(s) = swaps {
        println!("swap count: {s}");
    }
    println!("wall time: {:.6} s", started.elapsed().as_secs_f64());
}

// ---------------------------------------------------------------------------
// experiment grids
// ---------------------------------------------------------------------------

fn parse_grid_list(text: &str, what: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| usage(format!("invalid {what} entry: {e}")))
}

fn run_fig(
    experiment: &'static str,
    common: GridCommon,
    sizes: Vec<usize>,
    k_grid: &str,
    timing: bool,
) -> Result<(), CliError> {
    let k_values = parse_grid_list(k_grid, "k grid")?;
    let max_size = *sizes.iter().max().ok_or_else(|| usage("empty size grid"))?;
    let dataset = match common.dataset.as_str() {
        "sphere" => DatasetSource::Sphere {
            n: max_size,
            d: common.d,
        },
        "gaussian" => DatasetSource::Gaussian {
            n: max_size,
            d: common.d,
        },
        "tightness" => {
            return Err(usage(
                "the tightness generator is sized by k; use `solve --dataset tightness`",
            ));
        }
        path => DatasetSource::Csv(PathBuf::from(path)),
    };
    let seeds: Vec<u64> = (0..common.reps as u64)
        .map(|r| derive_seed(common.seed, &[r]))
        .collect();
    let config = ExperimentConfig {
        dataset,
        parts: common.m,
        part_size: max_size,
        k_values,
        epsilon: None,
        seeds,
        repetitions: common.reps,
    };
    for &size in &sizes {
        let mut per_size = config.clone();
        per_size.part_size = size;
        per_size.validate().map_err(|e| match e {
            DataError::InvalidConfig(msg) => usage(msg),
            other => runtime(other),
        })?;
    }

    let plan = SweepPlan {
        experiment,
        config,
        sizes,
        base_seed: common.seed,
        timing,
    };
    let rows = run_grid(&plan).map_err(CliError::Runtime)?;
    let format: ReportFormat = common.format.into();
    match &common.out {
        Some(path) => {
            write_report(&rows, format, path).map_err(runtime)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => {
            let text = render_report(&rows, format).map_err(runtime)?;
            print!("{text}");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let level = match args.level.as_str() {
        "fast" => suite::Level::Fast,
        "full" => suite::Level::Full,
        other => return Err(usage(format!("unknown level {other:?}; use fast or full"))),
    };
    let results = suite::run(level);
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut failures = 0usize;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<width$}  {}", r.name, r.details);
        if !r.passed {
            failures += 1;
        }
    }
    if failures == 0 {
        println!("all {} checks passed", results.len());
        Ok(())
    } else {
        eprintln!("{failures} of {} checks failed", results.len());
        Err(CliError::Verification)
    }
}
