//! `termnet`: min-cuts, dispersion and entropy analysis, routing schemes
//! and coding-function searches for term-set network models.
//!
//! Reports are JSON on stdout. Exit codes: 0 success, 1 usage, 2 parse or
//! I/O error, 3 precondition not met, 4 enumeration budget exceeded.

mod commands;
mod error;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use termnet::algebra::{FunctionClass, Objective};
use termnet::interp::ConditionMode;
use termnet::{Alpha, DEFAULT_BUDGET};

use crate::error::{CliError, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "termnet", version, about = "Term-set network coding analysis")]
pub struct Cli {
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Maximum number of evaluations an enumeration may take
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,

    /// Seed for sampled searches
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Leave the wall-clock field out of reports
    #[arg(long, global = true)]
    no_timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Minimum term-cut with disjoint paths
    Mincut(MincutArgs),
    /// Dispersion, one-to-one dispersion and Rényi entropies of an interpretation
    Analyze(AnalyzeArgs),
    /// Build a routing interpretation and report what it achieves
    Route(RouteArgs),
    /// Exhaustive or sampled search over a class of coding functions
    Search(SearchArgs),
    /// Convert a multi-user network into per-user and combined term sets
    Convert(ConvertArgs),
    /// Decide solvability of a multi-user network
    Solve(SolveArgs),
    /// Min-cuts, utilities and message demands of a possible-worlds network
    Worlds(WorldsArgs),
    /// Rényi entropy over a grid of orders, or dispersion over alphabet sizes, as CSV
    Sweep(SweepArgs),
    /// Write a built-in example file (lists them without a name)
    Examples(ExamplesArgs),
}

fn parse_alpha(s: &str) -> Result<Alpha, String> {
    Alpha::from_str(s).map_err(|e| e.to_string())
}

fn parse_class(s: &str) -> Result<FunctionClass, String> {
    FunctionClass::from_str(s).map_err(|e| e.to_string())
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    Objective::from_str(s).map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
pub struct MincutArgs {
    /// Term-set file or built-in name
    pub termset: String,
    /// Only these variables must be recovered
    #[arg(long, value_delimiter = ',')]
    pub require: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    pub termset: String,
    /// Interpretation file (JSON) or built-in name
    #[arg(long)]
    pub interp: String,
    /// Rényi orders, e.g. `0,1/2,1,inf`
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha)]
    pub alpha: Vec<Alpha>,
    /// Variables kept free for conditional dispersion (others fixed)
    #[arg(long, value_delimiter = ',')]
    pub condition: Option<Vec<String>>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouteMode {
    Routing,
    One2one,
    Dynamic,
    DynamicOne2one,
}

#[derive(Args, Debug)]
pub struct RouteArgs {
    pub termset: String,
    #[arg(long)]
    pub alphabet: u32,
    #[arg(long, value_enum, default_value = "routing")]
    pub mode: RouteMode,
    /// Diversify the term set first (routing modes need distinct symbols)
    #[arg(long)]
    pub diversify: bool,
    /// Write the tables here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    pub termset: String,
    /// Alphabet size; picks Z_q, F_q or C_q to suit the class
    #[arg(long, required_unless_present = "algebra")]
    pub alphabet: Option<u32>,
    /// Algebra file or built-in (`F5`, `F4`, `Z6`, `V2`, `C3`, `S3`)
    #[arg(long, conflicts_with = "alphabet")]
    pub algebra: Option<String>,
    #[arg(long, default_value = "all", value_parser = parse_class)]
    pub class: FunctionClass,
    #[arg(long, default_value = "dispersion", value_parser = parse_objective)]
    pub objective: Objective,
    /// Evaluate this many seeded random candidates instead of all
    #[arg(long)]
    pub samples: Option<u64>,
    /// Enumerate linear classes instead of using rank computation
    #[arg(long)]
    pub no_shortcut: bool,
    /// Write the best tables here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    /// Network file or built-in name (`butterfly`, `storage`)
    pub network: String,
    /// Write `<user>.ts` and `combined.ts` here
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub network: String,
    #[arg(long)]
    pub alphabet: u32,
    /// Candidate coding functions to check first
    #[arg(long)]
    pub witness: Option<String>,
}

#[derive(Args, Debug)]
pub struct WorldsArgs {
    /// Possible-worlds file or built-in name (`noisy_link`)
    pub network: String,
    /// Evaluate dispersions, utilities and message demands under these tables
    #[arg(long)]
    pub interp: Option<String>,
    /// Search all tables at this alphabet size for the most message demands met
    #[arg(long)]
    pub alphabet: Option<u32>,
    /// Use per-world copies of every function symbol
    #[arg(long)]
    pub clairvoyant: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub termset: String,
    #[arg(long, required_unless_present = "alphabets")]
    pub interp: Option<String>,
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha, conflicts_with = "alpha_grid")]
    pub alphas: Vec<Alpha>,
    /// `start:stop:step`, e.g. `0:4:0.25`
    #[arg(long)]
    pub alpha_grid: Option<String>,
    /// Alphabet sizes for a `q,gamma` sweep of a routing scheme
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["interp", "alphas", "alpha_grid"])]
    pub alphabets: Vec<u32>,
    #[arg(long, value_enum, default_value = "dynamic")]
    pub mode: RouteMode,
    /// Condition on these variables (worst case) in an alphabet sweep
    #[arg(long, value_enum, default_value = "worst")]
    pub condition_mode: ConditionArg,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ConditionArg {
    Worst,
    Average,
}

impl From<ConditionArg> for ConditionMode {
    fn from(c: ConditionArg) -> ConditionMode {
        match c {
            ConditionArg::Worst => ConditionMode::Worst,
            ConditionArg::Average => ConditionMode::Average,
        }
    }
}

#[derive(Args, Debug)]
pub struct ExamplesArgs {
    pub name: Option<String>,
    /// Directory to write into
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Print the file instead of writing it
    #[arg(long)]
    pub stdout: bool,
}

/// Global settings shared by every command.
pub struct Settings {
    pub budget: u64,
    pub seed: u64,
    pub timing: bool,
    pub echo: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    }
    let settings = Settings {
        budget: cli.budget,
        seed: cli.seed,
        timing: !cli.no_timing,
        echo: std::env::args().skip(1).collect(),
    };
    match commands::run(&cli.command, &settings) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}
