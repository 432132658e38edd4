use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pathbudget::budget::{n_tilde_formula, BudgetParams};
use pathbudget::error_metrics::verify_expectation;
use pathbudget::grid::Seed;
use pathbudget::sweep::{self, SweepConfig, DEFAULT_RHO_POINTS};
use pathbudget::Error;

/// Environment variable overriding the worker thread count.
const THREADS_ENV: &str = "PATHBUDGET_THREADS";

const EXIT_STAT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Optimal number of driver paths for two correlated Brownian motions.
///
/// Exit codes: 0 success, 1 statistical verification failure, 2 usage or
/// parameter error. Set PATHBUDGET_THREADS to limit worker threads.
#[derive(Debug, Parser)]
#[command(name = "pathbudget", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the path budget ñ for one parameter set.
    Budget(BudgetArgs),
    /// Check the expected error at ñ by Monte Carlo replication.
    Verify(VerifyArgs),
    /// Tabulate ñ over a ρ grid for each tolerance and write CSV.
    Sweep(SweepArgs),
    /// Write an SVG step plot of ñ against ρ.
    Plotdata(PlotArgs),
}

#[derive(Debug, Args)]
struct BudgetArgs {
    /// Full number of simulated paths.
    #[arg(long)]
    n: usize,
    /// Number of grid steps on [0, 1].
    #[arg(long)]
    m: usize,
    /// Correlation between the two Brownian motions, in [-1, 1].
    #[arg(long, allow_negative_numbers = true)]
    rho: f64,
    /// Error tolerance ε > 0.
    #[arg(long, allow_negative_numbers = true)]
    eps: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    budget: BudgetArgs,
    /// Number of Monte Carlo replications (at least 2).
    #[arg(long, default_value_t = 1000)]
    replications: usize,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Substream index under the master seed.
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Full number of simulated paths.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Number of grid steps on [0, 1].
    #[arg(long, default_value_t = 100)]
    m: usize,
    /// Comma-separated tolerances, one series each.
    #[arg(long, value_delimiter = ',', default_values_t = sweep::DEFAULT_EPS.to_vec())]
    eps: Vec<f64>,
    /// Number of uniformly spaced ρ values from -1 to 1.
    #[arg(long, default_value_t = DEFAULT_RHO_POINTS)]
    rho_points: usize,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Output CSV path.
    #[arg(long, default_value = "sweep.csv")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Plot an existing sweep CSV instead of recomputing it.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output SVG path.
    #[arg(long, default_value = "figure.svg")]
    output: PathBuf,
}

fn params(a: &BudgetArgs) -> pathbudget::Result<BudgetParams> {
    BudgetParams::new(a.n, a.m, a.rho, a.eps)
}

fn sweep_config(g: &GridArgs, output: PathBuf) -> pathbudget::Result<SweepConfig> {
    Ok(SweepConfig {
        n: g.n,
        m: g.m,
        eps_list: g.eps.clone(),
        rho_grid: sweep::rho_grid(g.rho_points)?,
        output_path: output,
    })
}

fn cmd_budget(a: &BudgetArgs) -> pathbudget::Result<u8> {
    let p = params(a)?;
    let r = n_tilde_formula(&p);
    println!("budget  n={} m={} rho={} eps={}", p.n(), p.m(), a.rho, a.eps);
    println!("  n_tilde          {}", r.n_tilde);
    println!("  paths saved      {}", p.n() - r.n_tilde);
    println!("  threshold        {}", r.threshold);
    println!("  expected error   {}", r.expected_error);
    println!(
        "n={} m={} rho={:?} eps={:?} n_tilde={} threshold={:?} expected_error={:?}",
        p.n(),
        p.m(),
        a.rho,
        a.eps,
        r.n_tilde,
        r.threshold,
        r.expected_error
    );
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs) -> pathbudget::Result<u8> {
    let p = params(&a.budget)?;
    let n_tilde = n_tilde_formula(&p).n_tilde;
    let (report, attempts) = verify_expectation(&p, n_tilde, a.replications, Seed::new(a.seed, a.stream))?;
    println!("{report}");
    println!("  attempts         {attempts}");
    println!("{} attempts={attempts}", report.machine_line());
    Ok(if report.pass { 0 } else { EXIT_STAT_FAILURE })
}

fn cmd_sweep(a: &SweepArgs) -> pathbudget::Result<u8> {
    let cfg = sweep_config(&a.grid, a.output.clone())?;
    let rows = sweep::run_sweep(&cfg)?;
    sweep::write_csv(&rows, &cfg.output_path)?;
    println!("wrote {} rows to {}", rows.len(), cfg.output_path.display());
    Ok(0)
}

fn cmd_plotdata(a: &PlotArgs) -> pathbudget::Result<u8> {
    let rows = match &a.input {
        Some(path) => sweep::read_csv(path)?,
        None => sweep::run_sweep(&sweep_config(&a.grid, a.output.clone())?)?,
    };
    let svg = sweep::render_svg(&rows, a.grid.n);
    sweep::write_atomic(&a.output, svg.as_bytes())?;
    println!("wrote plot of {} rows to {}", rows.len(), a.output.display());
    Ok(0)
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match &cli.command {
        Command::Budget(a) => cmd_budget(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Plotdata(a) => cmd_plotdata(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Error::InvalidParameter { name, reason }) => {
            eprintln!("error: invalid value for --{name}: {reason}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
