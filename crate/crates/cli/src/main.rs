use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

mod commands;
mod config;
mod output;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Solver(#[from] ldgas_core::Error),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("Monte Carlo verification failed: {0}")]
    MonteCarlo(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use ldgas_core::Error as E;
        match self {
            CliError::Parse(_) | CliError::Io(_) => 1,
            CliError::Solver(E::NotAnalytic { .. } | E::PathMismatch { .. }) => 3,
            CliError::Solver(_) => 2,
            CliError::Consistency(_) => 3,
            CliError::MonteCarlo(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Equilibrium,
    Ldf,
    Cumulants,
    Transitions,
    VerifyMc,
    Joint,
}

/// Large-deviation functions of linear statistics of Coulomb gases.
#[derive(Debug, Parser)]
#[command(name = "ldgas", version)]
struct Cli {
    command: Command,
    /// TOML run configuration.
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "ldgas-out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(&cli.config)?;
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Parse(format!("cannot start {k} threads: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Equilibrium => commands::equilibrium(&cfg, &cli.out),
        Command::Ldf => commands::ldf(&cfg, &cli.out),
        Command::Cumulants => commands::cumulants(&cfg, &cli.out),
        Command::Transitions => commands::transitions(&cfg, &cli.out),
        Command::VerifyMc => commands::verify_mc(&cfg, &cli.out),
        Command::Joint => commands::joint(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ldgas: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
