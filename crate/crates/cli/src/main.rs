use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semiflow::commands::{self, Format, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "semiflow", version, about = "Truncated flow construction of semi-measures in exact arithmetic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the construction described by a configuration file and write its artifacts.
    Build {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run every harness check on a snapshot; exit 1 on any violation.
    Verify {
        snapshot: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Draw seeded samples through the interval allocation of a snapshot.
    Sample {
        snapshot: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        budget: u32,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Render a snapshot as DOT, CSV or JSON.
    Export {
        snapshot: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        depth_cap: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the documented ALWAYS trace for stages 1-8 and diff it against a fresh run.
    Fixture,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build { config, out_dir } => commands::build(&config, out_dir.as_deref()),
        Command::Verify { snapshot, out_dir } => commands::verify(&snapshot, out_dir.as_deref()),
        Command::Sample { snapshot, count, seed, budget, out_dir } => {
            commands::sample(&snapshot, count, seed, budget, out_dir.as_deref())
        }
        Command::Export { snapshot, format, depth_cap, out_dir } => {
            commands::export(&snapshot, format, depth_cap, out_dir.as_deref())
        }
        Command::Fixture => commands::fixture(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(EXIT_USAGE)
        }
    }
}
