//! `ckm`: generate, solve, verify, and benchmark capacitated k-median
//! instances from the command line.
//!
//! Exit codes: 0 success, 1 validation error, 2 infeasibility or oracle
//! budget, 3 certification failure. All diagnostics go to standard error;
//! every output file is a deterministic function of the arguments and
//! input files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ckm_core::certify::{certify, CertifyError};
use ckm_core::files::{read_instance, read_solution, write_instance, write_solution, FileError};
use ckm_core::gen::{generate, Family, GenError, GenSpec};
use ckm_core::harness::{bench_suite, suite, write_csv};
use ckm_core::model::{validate_instance, Instance, OptimumRecord, Ratio};
use ckm_core::oracle::{exact_optimal, OracleBudget, OracleError};
use ckm_core::search::{
    greedy_initial_solution, run, run_from, run_with_penalties, SearchConfig, SearchError,
    SearchTrace,
};

#[derive(Parser)]
#[command(name = "ckm", version, about = "Capacitated k-median toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random instance file.
    Gen(GenArgs),
    /// Run the local search on an instance file.
    Solve(SolveArgs),
    /// Compute the exact k-facility optimum by enumeration.
    Exact(ExactArgs),
    /// Check a solution against an optimum and emit the certificate.
    Certify(CertifyArgs),
    /// Run a named benchmark suite and write a CSV of rows.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Euclidean,
    Clustered,
    Uniform,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Euclidean => Family::Euclidean,
            FamilyArg::Clustered => Family::Clustered,
            FamilyArg::Uniform => Family::UniformMatrix,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Greedy,
}

#[derive(Args)]
struct GenArgs {
    /// Output instance file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "euclidean")]
    family: FamilyArg,
    #[arg(long)]
    facilities: usize,
    #[arg(long)]
    clients: usize,
    /// Uniform capacity per open facility.
    #[arg(long)]
    capacity: i64,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coordinates are drawn from [0, coord-range]^2.
    #[arg(long, default_value_t = 100)]
    coord_range: i64,
    /// Smallest penalty; requires --penalty-max.
    #[arg(long, requires = "penalty_max")]
    penalty_min: Option<i64>,
    /// Largest penalty; requires --penalty-min.
    #[arg(long, requires = "penalty_min")]
    penalty_max: Option<i64>,
}

#[derive(Args)]
struct SolveArgs {
    /// Input instance file.
    #[arg(long)]
    instance: PathBuf,
    /// Maximum swap size (>= 1).
    #[arg(long, default_value_t = 2, value_parser = parse_p)]
    p: usize,
    /// Improvement threshold, a positive decimal such as 0.01.
    #[arg(long, default_value = "0.01", value_parser = parse_epsilon)]
    epsilon: Ratio,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Allow clients to pay their penalty instead of being served.
    #[arg(long)]
    penalties: bool,
    /// Starting solution: seeded random or farthest-point greedy.
    #[arg(long, value_enum, default_value = "random")]
    init: InitArg,
    /// Safety cap on accepted moves.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Output solution file.
    #[arg(long)]
    out: PathBuf,
    /// Output trace file; defaults to the solution path with a .trace.json suffix.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    /// Input instance file.
    #[arg(long)]
    instance: PathBuf,
    /// Facility budget; defaults to the instance's k.
    #[arg(long)]
    k: Option<usize>,
    /// Optimize with penalty escapes (requires instance penalties).
    #[arg(long)]
    penalties: bool,
    /// Largest number of k-subsets to enumerate.
    #[arg(long, default_value_t = 10_000_000)]
    max_subsets: u64,
    /// Wall-clock cap in seconds.
    #[arg(long, default_value_t = 600)]
    time_cap_secs: u64,
    /// Output solution file for the optimum.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    /// Input instance file.
    #[arg(long)]
    instance: PathBuf,
    /// Locally optimal solution file.
    #[arg(long)]
    solution: PathBuf,
    /// Exact optimum solution file (from `ckm exact`).
    #[arg(long)]
    optimal: PathBuf,
    /// Output certificate report file.
    #[arg(long)]
    report: PathBuf,
    /// Epsilon the solution was produced with.
    #[arg(long, default_value = "0.01", value_parser = parse_epsilon)]
    epsilon: Ratio,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite name: small or medium.
    #[arg(long)]
    suite: String,
    /// Output CSV file.
    #[arg(long)]
    csv: PathBuf,
    /// Maximum swap size (>= 1).
    #[arg(long, default_value_t = 2, value_parser = parse_p)]
    p: usize,
    /// Improvement threshold, a positive decimal such as 0.01.
    #[arg(long, default_value = "0.01", value_parser = parse_epsilon)]
    epsilon: Ratio,
}

fn parse_p(s: &str) -> Result<usize, String> {
    let p: usize = s.parse().map_err(|_| format!("`{s}` is not an integer"))?;
    if p < 1 {
        return Err("swap size must be at least 1".to_string());
    }
    Ok(p)
}

fn parse_epsilon(s: &str) -> Result<Ratio, String> {
    Ratio::parse_decimal(s).ok_or_else(|| format!("`{s}` is not a positive decimal"))
}

enum CliError {
    Validation(String),
    Infeasible(String),
    Uncertified(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Uncertified(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Infeasible(m) | CliError::Uncertified(m) => {
                write!(f, "{m}")
            }
        }
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> CliError {
        CliError::Validation(e.to_string())
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> CliError {
        match e {
            GenError::InvalidSpec(_) => CliError::Validation(e.to_string()),
            GenError::Infeasible { .. } | GenError::MetricRetries(_) => {
                CliError::Infeasible(e.to_string())
            }
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> CliError {
        match e {
            SearchError::Flow(_) => CliError::Infeasible(e.to_string()),
            SearchError::InvalidMove | SearchError::NoPenalties => {
                CliError::Validation(e.to_string())
            }
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> CliError {
        match e {
            OracleError::Budget { .. } | OracleError::TimeCap(_) => {
                CliError::Infeasible(format!("oracle budget: {e}"))
            }
            OracleError::Infeasible { .. } | OracleError::Flow(_) => {
                CliError::Infeasible(e.to_string())
            }
        }
    }
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> CliError {
        match e {
            CertifyError::PenaltyUnsupported | CertifyError::Inconsistent(_) => {
                CliError::Validation(e.to_string())
            }
            CertifyError::Claim7Violated { .. }
            | CertifyError::PartitionStuck { .. }
            | CertifyError::LocalOptimalityViolated { .. } => {
                CliError::Uncertified(e.to_string())
            }
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    let inst = read_instance(path)?;
    let report = validate_instance(&inst);
    if !report.is_valid() {
        return Err(CliError::Validation(format!(
            "invalid instance {}: {}",
            path.display(),
            report.violations.join("; ")
        )));
    }
    Ok(inst)
}

#[derive(Serialize)]
struct TraceStepFile {
    removed: Vec<usize>,
    added: Vec<usize>,
    old_cost: i64,
    new_cost: i64,
}

#[derive(Serialize)]
struct TraceFile {
    version: u32,
    capped: bool,
    steps: Vec<TraceStepFile>,
}

fn write_trace(path: &Path, trace: &SearchTrace) -> Result<(), CliError> {
    let file = TraceFile {
        version: 1,
        capped: trace.capped,
        steps: trace
            .steps
            .iter()
            .map(|s| TraceStepFile {
                removed: s.removed.clone(),
                added: s.added.clone(),
                old_cost: s.old_cost,
                new_cost: s.new_cost,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(())
}

fn default_trace_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".trace.json");
    out.with_file_name(name)
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let spec = GenSpec {
        family: args.family.into(),
        num_facilities: args.facilities,
        num_clients: args.clients,
        capacity_u: args.capacity,
        k: args.k,
        penalty_range: args.penalty_min.zip(args.penalty_max),
        seed: args.seed,
        coord_range: args.coord_range,
    };
    let inst = generate(&spec)?;
    write_instance(&args.out, &inst)?;
    println!(
        "wrote {} ({} facilities, {} clients, U={}, k={})",
        args.out.display(),
        inst.num_facilities,
        inst.num_clients,
        inst.capacity,
        inst.k
    );
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance)?;
    let config = SearchConfig {
        p: args.p,
        epsilon: args.epsilon,
        seed: args.seed,
        penalty_mode: args.penalties,
        max_iterations: args.max_iterations,
    };
    if args.penalties && !inst.has_penalties() {
        return Err(CliError::from(SearchError::NoPenalties));
    }
    let (solution, trace) = match args.init {
        InitArg::Random if args.penalties => run_with_penalties(&inst, &config)?,
        InitArg::Random => run(&inst, &config)?,
        InitArg::Greedy => {
            let start = greedy_initial_solution(&inst, &config)?;
            run_from(&inst, &config, start)?
        }
    };
    write_solution(&args.out, &solution)?;
    let trace_path = args.trace.unwrap_or_else(|| default_trace_path(&args.out));
    write_trace(&trace_path, &trace)?;
    println!(
        "cost={} open={} iterations={}{}",
        solution.total_cost,
        solution.open.len(),
        trace.steps.len(),
        if trace.capped { " (capped)" } else { "" }
    );
    Ok(())
}

fn cmd_exact(args: ExactArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance)?;
    if args.penalties && !inst.has_penalties() {
        return Err(CliError::Validation(
            "penalty optimum requested but the instance has no penalties".to_string(),
        ));
    }
    let k = args.k.unwrap_or(inst.k);
    let budget = OracleBudget {
        max_subsets: args.max_subsets,
        time_cap: std::time::Duration::from_secs(args.time_cap_secs),
    };
    let optimum = exact_optimal(&inst, k, args.penalties, &budget)?;
    write_solution(&args.out, &optimum.solution)?;
    println!(
        "optimum cost={} open={:?}",
        optimum.solution.total_cost,
        optimum.solution.open.iter().collect::<Vec<_>>()
    );
    Ok(())
}

fn cmd_certify(args: CertifyArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance)?;
    let solution = read_solution(&args.solution)?;
    let opt_solution = read_solution(&args.optimal)?;
    let optimum = OptimumRecord {
        k: opt_solution.open.len(),
        solution: opt_solution,
    };
    let report = certify(&inst, &solution, &optimum, args.epsilon)?;
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    text.push('\n');
    std::fs::write(&args.report, text).map_err(|e| CliError::Validation(e.to_string()))?;
    println!(
        "certified: {} (ratio {:.4} <= bound {:.4})",
        report.certified, report.measured_ratio, report.ratio_bound
    );
    if !report.certified {
        return Err(CliError::Uncertified(
            "certificate checks failed; see the report file".to_string(),
        ));
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let specs = suite(&args.suite)
        .ok_or_else(|| CliError::Validation(format!("unknown suite `{}`", args.suite)))?;
    let config = SearchConfig {
        p: args.p,
        epsilon: args.epsilon,
        ..SearchConfig::default()
    };
    let rows = bench_suite(&specs, &[config], &OracleBudget::default())?;
    write_csv(&args.csv, &rows).map_err(|e| CliError::Validation(e.to_string()))?;
    println!("wrote {} rows to {}", rows.len(), args.csv.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Exact(args) => cmd_exact(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let kind = err.kind();
            let _ = err.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}
