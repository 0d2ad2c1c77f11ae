use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod error;
mod experiments;
mod output;
mod presets;

use error::CliError;

#[derive(Parser)]
#[command(name = "nlgauge", version, about = "Nonlinear gauge experiments on periodic grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config (or an earlier manifest).
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Accept time steps above the explicit stability bound.
        #[arg(long)]
        force_dt: bool,
    },
    /// List initial-state and potential presets.
    Presets,
}

fn run(config_path: &Path, out: &Path, force_flag: bool) -> Result<(), CliError> {
    let loaded = config::load(config_path)?;
    let force_dt = force_flag || loaded.force_dt;
    let cfg = loaded.config;
    let plan = experiments::plan(&cfg, force_dt)?;
    output::prepare_dir(out)?;
    let outcome = experiments::execute(&plan)?;
    let names: Vec<&str> = outcome.tables.iter().map(|(n, _)| *n).collect();
    for (name, table) in &outcome.tables {
        output::write_table(out, name, table)?;
    }
    let status = outcome.failure.as_ref().map_or("ok", |e| e.kind());
    let manifest = output::manifest(&cfg, force_dt, &names, outcome.diagnostics, status);
    output::write_manifest(out, &manifest)?;
    outcome.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            for line in presets::listing() {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, force_dt } => match run(&config, &out, force_dt) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("{}", e.line());
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
