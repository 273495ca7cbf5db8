mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand};
use commands::{Run, Study};
use config::{KernelSource, ScenarioConfig};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Trotter-kernel experiments for quadratic Hamiltonians with bounded potentials.
#[derive(Parser)]
#[command(name = "ftl", version)]
struct Cli {
    /// Scenario file (TOML); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the scenario.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Every computation is sequential with a fixed reduction
    /// order, so this only has to be positive.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,
    /// Seed of the weak-* atom battery; overrides `seed` in the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classical flow blocks, det B_t and symplecticity at each time.
    Flow,
    /// Roots of det B_t over the scan interval.
    Exceptional,
    /// Binary kernel dump with JSON sidecar and sha256 checksum.
    Kernel {
        #[arg(long, value_enum)]
        provenance: Option<KernelSource>,
        /// Trotter step count.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Trotter convergence at non-exceptional times.
    Converge,
    /// Weak-* convergence at exceptional times.
    Weakstar,
    /// Kernel-slice convergence.
    M1slice,
    /// Small-ball limit of the transition amplitude.
    Amplitude,
    /// Modulation-norm records of the kernels and the Gram decay fit.
    StftReport,
}

fn load(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => ScenarioConfig::default().emit(),
    };
    let mut config = ScenarioConfig::parse_with_overrides(&text, std::env::vars())
        .map_err(|e| match (&cli.config, e) {
            (Some(path), CliError::Config(msg)) => CliError::Config(format!("{}: {msg}", path.display())),
            (_, e) => e,
        })?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load(&cli)?;
    let out = commands::resolve_out(&config, cli.out.as_deref());
    let run = Run { config, out };
    run.write_scenario()?;
    match cli.command {
        Command::Flow => commands::flow(&run),
        Command::Exceptional => commands::exceptional(&run),
        Command::Kernel { provenance, n } => {
            let source = provenance.unwrap_or(run.config.kernel.provenance);
            commands::kernel(&run, source, n.unwrap_or(run.config.kernel.n))
        }
        Command::Converge => commands::study(&run, Study::Converge),
        Command::Weakstar => commands::study(&run, Study::Weakstar),
        Command::M1slice => commands::study(&run, Study::M1Slice),
        Command::Amplitude => commands::amplitude(&run),
        Command::StftReport => commands::stft_report(&run),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
