use std::path::PathBuf;
use std::process::ExitCode;

use circlebundle_cli::{mesh_info, oracle_table, run, verify_oracles, CliError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "circlebundle", version, about = "Mass-minimizing sections of circle bundles over surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a low-volume section as described by a TOML config
    Run { config: PathBuf },
    /// Check the discrete volume against analytic and quadrature values
    VerifyOracles,
    /// Print counts and topology of a mesh file
    MeshInfo { mesh: PathBuf },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => match run(&config) {
            Ok(dir) => {
                println!("wrote results to {}", dir.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::VerifyOracles => match verify_oracles() {
            Ok(results) => {
                print!("{}", oracle_table(&results));
                if results.iter().all(|r| r.passed) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(e),
        },
        Command::MeshInfo { mesh } => match mesh_info(&mesh) {
            Ok(s) => {
                print!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
