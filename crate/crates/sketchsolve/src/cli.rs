//! The `sketchsolve` command line: generate systems, solve them, run the
//! benchmark grid, and dump stopping-time diagnostics.

use std::path::PathBuf;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use crate::bench::{
    emit_csv, grid_csv_filename, run_grid, BenchConfig, Metric, SystemSource,
};
use crate::diagnostics::{row_space, stopping_times, MEANY_CAP};
use crate::distributed::{
    partition_banded, sim_solve, LocalKind, NodeLocalStrategy, NodeSchedule, SimOptions,
};
use crate::error::{Error, Result};
use crate::rng::mix;
use crate::sketch::parse_strategy;
use crate::solver::{
    run_solve, run_solve_column, Method, SolveOptions, SolveTrace, TerminationCriteria,
};
use crate::system::{
    gen_banded, gen_prescribed_svd, load_matrix_market, make_consistent_system,
    write_matrix_market_array, write_matrix_market_coordinate, LinearSystem, SpectrumSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_ALL_SKIPPED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "sketchsolve",
    about = "Streaming sketch-and-solve linear system solvers",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a test matrix and write it as Matrix Market.
    Gen(GenArgs),
    /// Run one solve and print the report as JSON.
    Solve(SolveArgs),
    /// Run the benchmark grid and write one CSV per strategy.
    Bench(BenchArgs),
    /// Run a traced solve and print the stopping-time log as JSON.
    Diag(DiagArgs),
}

#[derive(Args, Clone)]
struct SystemArgs {
    /// Load the coefficient matrix from a Matrix Market file.
    #[arg(long)]
    mtx: Option<PathBuf>,
    /// Generator kind when no file is given: identity | svd | banded.
    #[arg(long, default_value = "identity")]
    kind: String,
    /// Rows (and columns unless --d is given).
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Columns for the svd generator.
    #[arg(long)]
    d: Option<usize>,
    /// Condition number for the svd generator.
    #[arg(long, default_value_t = 1e3)]
    cond: f64,
    /// Half bandwidth for the banded generator (and for --distributed).
    #[arg(long, default_value_t = 2)]
    bandwidth: usize,
}

impl SystemArgs {
    fn matrix(&self, seed: u64) -> Result<DMatrix<f64>> {
        if let Some(path) = &self.mtx {
            return load_matrix_market(path);
        }
        match self.kind.as_str() {
            "identity" => Ok(DMatrix::identity(self.n, self.n)),
            "svd" => {
                let d = self.d.unwrap_or(self.n);
                let spec = SpectrumSpec::power_law(self.n.min(d), self.cond, seed)?;
                gen_prescribed_svd(self.n, d, &spec)
            }
            "banded" => gen_banded(self.n, self.bandwidth, seed),
            other => Err(Error::InvalidParameter(format!(
                "unknown system kind `{other}`"
            ))),
        }
    }

    fn system(&self, seed: u64) -> Result<LinearSystem> {
        Ok(make_consistent_system(self.matrix(seed)?, mix(seed, &[7])))
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the .mtx file.
    #[arg(long)]
    out: PathBuf,
    /// Write coordinate format instead of array format.
    #[arg(long, default_value_t = false)]
    coordinate: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value = "cyclic")]
    strategy: String,
    /// base | partial[:m] | complete | column
    #[arg(long, default_value = "complete")]
    method: String,
    /// Memory size for the partial method.
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Residual improvement factor to stop at.
    #[arg(long, default_value_t = 1e-6)]
    factor: f64,
    /// Wall-clock budget in milliseconds.
    #[arg(long)]
    budget_ms: Option<u64>,
    /// Iteration budget.
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Simulate the limited-communication variant over --nodes nodes.
    #[arg(long, default_value_t = false)]
    distributed: bool,
    /// Virtual node count for --distributed.
    #[arg(long, default_value_t = 5)]
    nodes: usize,
    /// Write the communication ledger CSV here (--distributed only).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Strategy tokens, comma separated.
    #[arg(long, default_value = "countsketch:10")]
    strategy: String,
    /// iters | wall
    #[arg(long, default_value = "iters")]
    metric: String,
    #[arg(long, default_value_t = 0.1)]
    factor: f64,
    #[arg(long, default_value_t = 3000)]
    budget_ms: u64,
    /// Iteration budget for the deterministic metric.
    #[arg(long, default_value_t = 400_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    /// Output directory for the CSV tables.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Tag prefixed to every CSV filename.
    #[arg(long, default_value = "Synthetic")]
    tag: String,
    /// Benchmark these Matrix Market files instead of the synthetic grid.
    #[arg(long)]
    mtx: Vec<PathBuf>,
    /// Use the full 500x500 grid dimensions.
    #[arg(long, default_value_t = false)]
    paper_scale: bool,
}

#[derive(Args)]
struct DiagArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value = "cyclic")]
    strategy: String,
    /// base | partial[:m] | complete
    #[arg(long, default_value = "base")]
    method: String,
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Iterations to trace.
    #[arg(long, default_value_t = 0)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_method(token: &str, default_m: usize) -> Result<Method> {
    Method::parse(token, default_m)
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let matrix = args.system.matrix(args.seed)?;
    if args.coordinate {
        write_matrix_market_coordinate(&args.out, &matrix)?;
    } else {
        write_matrix_market_array(&args.out, &matrix)?;
    }
    println!(
        "{}",
        serde_json::json!({
            "written": args.out,
            "rows": matrix.nrows(),
            "cols": matrix.ncols(),
        })
    );
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let system = args.system.system(args.seed)?;
    let mut criteria = TerminationCriteria::residual(args.factor)
        .with_max_iterations(args.max_iters)
        .with_check_every(1);
    if let Some(ms) = args.budget_ms {
        criteria = criteria.with_budget(Duration::from_millis(ms));
    }
    if args.distributed {
        let part = partition_banded(system.n(), args.system.bandwidth, args.nodes)?;
        let kind = LocalKind::parse(&args.strategy)?;
        let mut strategy = NodeLocalStrategy::new(
            kind,
            part.clone(),
            NodeSchedule::RoundRobin,
            args.seed,
        );
        let m = match parse_method(&args.method, args.m)? {
            Method::Partial { m } => m,
            Method::Base => 0,
            Method::Complete => system.d(),
        };
        let outcome = sim_solve(
            &system,
            &part,
            &mut strategy,
            &criteria,
            &SimOptions::new(m, args.seed),
        )?;
        if let Some(path) = &args.out {
            outcome.ledger.write_csv(path)?;
        }
        println!("{}", outcome.report.to_json());
        return Ok(());
    }
    if args.method == "column" {
        let mut strategy = parse_strategy(&args.strategy, args.seed)?;
        let opts = SolveOptions {
            seed: args.seed,
            ..SolveOptions::default()
        };
        let report = run_solve_column(&system, strategy.as_mut(), &criteria, &opts, None)?;
        println!("{}", report.to_json());
        return Ok(());
    }
    let method = parse_method(&args.method, args.m)?;
    let mut strategy = parse_strategy(&args.strategy, args.seed)?;
    let opts = SolveOptions {
        seed: args.seed,
        ..SolveOptions::default()
    };
    let report = run_solve(&system, strategy.as_mut(), &method, &criteria, &opts, None)?;
    println!("{}", report.to_json());
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let mut cfg = if args.paper_scale {
        BenchConfig::paper_scale(args.seed)
    } else {
        BenchConfig::desk_default(args.seed)
    };
    if !args.mtx.is_empty() {
        cfg.systems = args
            .mtx
            .iter()
            .map(|path| SystemSource::MatrixMarket {
                name: path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "matrix".into()),
                path: path.clone(),
            })
            .collect();
    }
    cfg.strategies = args.strategy.split(',').map(str::to_string).collect();
    cfg.metric = Metric::parse(&args.metric)?;
    cfg.improvement_factor = args.factor;
    cfg.time_budget = Duration::from_millis(args.budget_ms);
    cfg.max_iterations = args.max_iters;
    cfg.repetitions = args.repetitions;
    let outcome = run_grid(&cfg)?;
    let all_skipped = outcome
        .grids
        .first()
        .map(|g| g.rows.is_empty())
        .unwrap_or(true);
    std::fs::create_dir_all(&args.out)?;
    for grid in &outcome.grids {
        let path = args.out.join(grid_csv_filename(&args.tag, &grid.strategy));
        emit_csv(&grid.rows, &cfg.methods, &path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(if all_skipped { EXIT_ALL_SKIPPED } else { EXIT_OK })
}

fn cmd_diag(args: &DiagArgs) -> Result<()> {
    let system = args.system.system(args.seed)?;
    let iters = if args.iters > 0 {
        args.iters
    } else {
        3 * system.n()
    };
    let method = parse_method(&args.method, args.m)?;
    let mut strategy = parse_strategy(&args.strategy, args.seed)?;
    let criteria = TerminationCriteria::residual(1e-300).with_max_iterations(iters);
    let opts = SolveOptions {
        seed: args.seed,
        ..SolveOptions::default()
    };
    let mut trace = SolveTrace::new();
    run_solve(
        &system,
        strategy.as_mut(),
        &method,
        &criteria,
        &opts,
        Some(&mut trace),
    )?;
    let target = row_space(system.a());
    let mut log = stopping_times(system.a(), trace.ws, &target);
    if log.epoch_sizes.iter().all(|&s| s <= MEANY_CAP) {
        log.compute_gammas(MEANY_CAP)?;
    }
    println!("{}", log.to_json());
    Ok(())
}

/// Entry point used by `main` and by tests. Returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Gen(args) => cmd_gen(args).map(|_| EXIT_OK),
        Cmd::Solve(args) => cmd_solve(args).map(|_| EXIT_OK),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Diag(args) => cmd_diag(args).map(|_| EXIT_OK),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            println!("{}", serde_json::json!({ "error": err.to_string() }));
            EXIT_NUMERICAL
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_exits_with_usage_code() {
        assert_eq!(
            cli_main(["sketchsolve", "solve", "--no-such-flag"]),
            EXIT_USAGE
        );
        assert_eq!(cli_main(["sketchsolve", "frobnicate"]), EXIT_USAGE);
    }

    #[test]
    fn help_exits_cleanly() {
        assert_eq!(cli_main(["sketchsolve", "--help"]), EXIT_OK);
    }
}
