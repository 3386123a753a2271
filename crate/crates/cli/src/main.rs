mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use s2g::builder::FirstClauseRule;
use s2g::graph::Mode;
use s2g::solver::Algorithm;

use crate::error::CliError;

/// SAT-to-graph transformation, condensation analysis and energy-ordered
/// ChainSAT solvers.
#[derive(Debug, Parser)]
#[command(name = "s2g", version)]
pub struct Cli {
    /// Worker threads for sweeps and benchmarks [default: available parallelism]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a uniform random k-SAT formula in DIMACS format
    Gen(GenArgs),
    /// Build the clause graph of a formula
    Build(BuildArgs),
    /// Fraction winner, phase label and non-winner statistics of a graph
    Classify(ClassifyArgs),
    /// Energy levels and particle occupation of a graph
    Spectrum(SpectrumArgs),
    /// Run ChainSAT or an energy-ordered variant on one or more formulas
    Solve(SolveArgs),
    /// Compare two solver result files on the same instances
    Compare(CompareArgs),
    /// Sweep the clause-to-variable ratio and aggregate phase statistics
    Sweep(SweepArgs),
    /// Benchmark solvers over a grid of random instances
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Literals per clause
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Number of variables
    #[arg(long)]
    pub n: u32,
    /// Number of clauses
    #[arg(long, conflicts_with = "alpha", required_unless_present = "alpha")]
    pub m: Option<usize>,
    /// Clause-to-variable ratio; m = round(alpha * n), halves to even
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BuilderArgs {
    /// Construction algorithm: s2g or s2gpa
    #[arg(long, default_value = "s2gpa")]
    pub mode: Mode,
    /// Connectivity reward of an outgoing link (s2gpa)
    #[arg(long, default_value_t = s2g::builder::DEFAULT_THETA)]
    pub theta: f64,
    /// Link draws per joining clause (s2gpa)
    #[arg(long, default_value_t = s2g::builder::DEFAULT_RHO)]
    pub rho: u32,
    /// Temperature of the fitness-to-energy map
    #[arg(long, default_value_t = s2g::builder::DEFAULT_TEMPERATURE)]
    pub temperature: f64,
    /// First clause: random or fittest (global fitness)
    #[arg(long, default_value = "random")]
    pub first_clause: FirstClauseRule,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub builder: BuilderArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// DIMACS input
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Graph JSON output
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a Graphviz rendering
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Graph JSON written by `build`
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Write the summary here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Graph JSON written by `build`
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Write the spectrum here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// chainsat, lc or nlc
    #[arg(long, default_value = "chainsat")]
    pub algo: Algorithm,
    /// Probability of an improving flip [default: 0.005 for k=3, 0.0001 for k=4, 0.0002 for k=5]
    #[arg(long)]
    pub p1: Option<f64>,
    /// Probability of not starting a chain [default: as p1]
    #[arg(long)]
    pub p2: Option<f64>,
    /// Main-loop cycles before giving up
    #[arg(long, default_value_t = s2g::solver::DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// DIMACS inputs; all must share one clause length
    #[arg(long = "in", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Graph JSON for the clause order (lc/nlc, single input); built on the fly when absent
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub builder: BuilderArgs,
    /// Write results here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Result file of solver A
    pub a: PathBuf,
    /// Result file of solver B
    pub b: PathBuf,
    /// Write the verdict here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML configuration; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV output
    #[arg(long)]
    pub out: PathBuf,
    /// Also fit a degree-6 polynomial to the fraction winner per n and write it here
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Variable counts, comma separated [default: 50]
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u32>>,
    /// Ratios as a comma list or start:stop:step [default: 2:7:0.25]
    #[arg(long)]
    pub alphas: Option<String>,
    /// Literals per clause [default: 3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Formulas per grid point [default: 30]
    #[arg(long)]
    pub instances: Option<usize>,
    /// Graphs per formula [default: 10]
    #[arg(long)]
    pub graphs: Option<usize>,
    /// Seed root [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// s2g or s2gpa [default: s2gpa]
    #[arg(long)]
    pub mode: Option<Mode>,
    /// [default: 0.33]
    #[arg(long)]
    pub theta: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    pub rho: Option<u32>,
    /// [default: 1]
    #[arg(long)]
    pub temperature: Option<f64>,
    /// random or fittest [default: random]
    #[arg(long)]
    pub first_clause: Option<FirstClauseRule>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Literals per clause
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Variable counts, comma separated
    #[arg(long, value_delimiter = ',', default_value = "25,50")]
    pub n: Vec<u32>,
    /// Ratios as a comma list or start:stop:step [default for k=3: 8 points from 2.256 to 5.256]
    #[arg(long)]
    pub grid: Option<String>,
    /// Formulas per grid point
    #[arg(long, default_value_t = s2g::experiments::DESK_INSTANCES)]
    pub instances: usize,
    /// Solvers, comma separated
    #[arg(long, value_delimiter = ',', default_value = "chainsat,lc,nlc")]
    pub solvers: Vec<Algorithm>,
    /// [default: 0.005 for k=3, 0.0001 for k=4, 0.0002 for k=5]
    #[arg(long)]
    pub p1: Option<f64>,
    /// [default: as p1]
    #[arg(long)]
    pub p2: Option<f64>,
    /// Main-loop cycles per run
    #[arg(long, default_value_t = s2g::solver::DESK_BUDGET)]
    pub budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub builder: BuilderArgs,
    /// CSV table output
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the text report here
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("s2g: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

impl From<rayon::ThreadPoolBuildError> for CliError {
    fn from(err: rayon::ThreadPoolBuildError) -> CliError {
        CliError::usage(err)
    }
}
