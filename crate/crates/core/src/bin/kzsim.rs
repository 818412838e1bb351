use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kzsim::experiment::{self, analyze, fit, run, shim, theory, Outcome};

/// Quench simulations of the annealed transverse-field Ising chain.
///
/// Exit status: 0 on success, 2 for an invalid config, 3 when some grid points failed
/// (recorded in manifest.json), 1 for other errors. The worker count comes from
/// KZSIM_WORKERS.
#[derive(Parser)]
#[command(name = "kzsim", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// JSON config, or a manifest.json from an earlier run to repeat it.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides "out" in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep solvers or samplers over a grid.
    Run(Io),
    /// Kink statistics of saved samples.
    Analyze(Io),
    /// Closed-form predictions.
    Theory(Io),
    /// Power-law or Landau-Zener fits over CSV columns.
    Fit(Io),
    /// Calibrate a sampler against hidden disorder.
    Shim(Io),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(io) => run::run_file(&io.config, io.out.as_deref()),
        Command::Analyze(io) => analyze::analyze_file(&io.config, io.out.as_deref()),
        Command::Theory(io) => theory::theory_file(&io.config, io.out.as_deref()),
        Command::Fit(io) => fit::fit_file(&io.config, io.out.as_deref()),
        Command::Shim(io) => shim::shim_file(&io.config, io.out.as_deref()),
    };
    match result {
        Ok(Outcome { failures: 0, outputs }) => {
            for p in outputs {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Ok(Outcome { failures, .. }) => {
            eprintln!("kzsim: {failures} unit(s) failed; see manifest.json");
            ExitCode::from(3)
        }
        Err(e) if experiment::is_config_error(&e) => {
            eprintln!("kzsim: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("kzsim: {e}");
            ExitCode::from(1)
        }
    }
}
