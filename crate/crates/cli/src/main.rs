//! `fqaoa` command-line harness.

mod commands;
mod error;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const OUT_DIR_ENV: &str = "FQAOA_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "fqaoa", version, about = "Fermionic QAOA laboratory for constrained portfolio problems")]
struct Cli {
    /// Default directory for output files.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = ".")]
    out_dir: PathBuf,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a seeded portfolio instance and write it as TOML.
    Gen(GenArgs),
    /// Run one method at one depth and write its record and CSV row.
    Run(RunArgs),
    /// Run a grid of configurations from a plan file.
    Sweep(SweepArgs),
    /// Check synthesized gate counts against the closed forms.
    Certify(CertifyArgs),
    /// Aggregate a results table over seeds and fit power laws.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub m: i64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = fqaoa::problem::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Output file; defaults to `instance_N{n}_D{d}_M{m}_s{seed}.toml` in the output directory.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Overwrite an existing file.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Run configuration file; command-line flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Instance file; without it the seeded instance for `--n/--d/--m` is drawn.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<i64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Penalty amplitude for x_qaoa.
    #[arg(long)]
    pub penalty: Option<f64>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Time step in units of 1/W.
    #[arg(long)]
    pub wdt: Option<f64>,
    #[arg(long, overrides_with = "no_optimize")]
    pub optimize: bool,
    #[arg(long, overrides_with = "optimize")]
    pub no_optimize: bool,
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mixer backend for fqaoa: trotter or exact.
    #[arg(long)]
    pub mixer: Option<String>,
    /// Stem of the output files; defaults to one built from the configuration.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Sweep plan (TOML).
    pub plan: PathBuf,
    /// Results table; defaults to `<plan stem>.csv` in the output directory.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, short, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    /// Ladder lengths to check.
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 6, 8])]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize])]
    pub d: Vec<usize>,
    /// Depth used for the totals.
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    /// Test hook: also swap at rung slots inside the swap network.
    #[arg(long, hide = true)]
    pub corrupt_rung_fswaps: bool,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Results table written by `run` or `sweep`.
    pub input: PathBuf,
    /// Summary table; defaults to `<input stem>_summary.csv` next to the input.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Fit window on `W T` for the power-law slopes.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.0, f64::INFINITY])]
    pub window: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(&a, &cli.out_dir),
        Command::Run(a) => commands::run(&a, &cli.out_dir),
        Command::Sweep(a) => sweep::sweep(&a, &cli.out_dir),
        Command::Certify(a) => commands::certify(&a),
        Command::Analyze(a) => commands::analyze(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
