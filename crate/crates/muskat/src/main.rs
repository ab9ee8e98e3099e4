//! Command-line driver: one experiment per invocation, configured by a TOML
//! file with optional dotted-path overrides.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on numerical or I/O
//! failures.

use clap::{Args, Parser, Subcommand};
use muskat::harness::{emit, run, summary, ConfigError, ExperimentConfig, HarnessError};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "muskat",
    version,
    about = "Pseudo-spectral simulation and stability analysis of periodic Darcy interface flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Linearize at the initial field and report the spectrum.
    Spectrum(RunArgs),
    /// Integrate the interface and record norm histories.
    Evolve(RunArgs),
    /// Integrate, then fit an exponential rate over a window.
    Decay(RunArgs),
    /// Measure escape times of seeded perturbations on an unstable interface.
    Instability(RunArgs),
    /// Solve the quasilinear problem by frozen-coefficient fixed-point iteration.
    Picard(RunArgs),
    /// Measure the composition defect of the numerical solution map.
    Semiflow(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path config overrides, e.g. --set grid.n=128 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; defaults to the config's `output.dir`, then `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker-thread bound for internal parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (invoked, args) = match &cli.command {
        Command::Spectrum(a) => ("spectrum", a),
        Command::Evolve(a) => ("evolve", a),
        Command::Decay(a) => ("decay", a),
        Command::Instability(a) => ("instability", a),
        Command::Picard(a) => ("picard", a),
        Command::Semiflow(a) => ("semiflow", a),
    };

    if let Some(threads) = args.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} worker threads: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    }

    let config = match ExperimentConfig::load(&args.config, &args.set) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if config.experiment.kind_slug() != invoked {
        let e = ConfigError::ExperimentMismatch {
            configured: config.experiment.kind_slug().to_string(),
            invoked: invoked.to_string(),
        };
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }

    let record = match run(&config) {
        Ok(record) => record,
        Err(HarnessError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };

    let out_dir = args
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    match emit(&record, &out_dir) {
        Ok(written) => {
            // Ignore write failures here: a consumer closing the pipe early
            // (e.g. `muskat ... | head`) must not turn success into a panic.
            let mut stdout = std::io::stdout();
            let _ = writeln!(stdout, "{}", summary(&record));
            for path in written {
                let _ = writeln!(stdout, "wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
