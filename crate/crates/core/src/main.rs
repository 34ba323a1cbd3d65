use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use geoncog::cli;

/// Deterministic geon-scene exploration: generate scenes, run episodes,
/// verify traces, inspect the schema store.
#[derive(Parser)]
#[command(name = "geoncog", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded scene file.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        objects: usize,
        /// Class weights, e.g. tree=1,wall=2,stairs=0.5
        #[arg(long, default_value = "tree=1,wall=1,stairs=1")]
        mix: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the episode described by a scenario config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace_out: PathBuf,
        #[arg(long)]
        db: PathBuf,
    },
    /// Re-execute an episode and compare against a stored trace.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// List object types in a schema store.
    Inspect {
        #[arg(long)]
        db: PathBuf,
    },
}

fn dispatch(args: Args) -> cli::Result<()> {
    match args.command {
        Command::Generate {
            seed,
            objects,
            mix,
            out,
        } => {
            let mix = cli::parse_mix(&mix)?;
            cli::cmd_generate(seed, objects, &mix, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Run {
            config,
            trace_out,
            db,
        } => {
            let summary = cli::cmd_run(&config, &trace_out, &db)?;
            println!(
                "{} step(s), termination {:?}, {} object(s) discovered, {} type(s) with {} scheme(s) stored",
                summary.steps,
                summary.termination,
                summary.objects_discovered,
                summary.types_stored,
                summary.schemes_stored
            );
            Ok(())
        }
        Command::Replay { trace, config } => {
            let report = cli::cmd_replay(&trace, &config)?;
            println!("MATCH ({} event(s))", report.file_events);
            Ok(())
        }
        Command::Inspect { db } => {
            print!("{}", cli::cmd_inspect(&db)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
