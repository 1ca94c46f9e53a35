use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lsmcf::config::{self, ExperimentConfig};
use lsmcf::report;
use lsmcf::Error;

#[derive(Parser)]
#[command(name = "lsmcf", about = "Level set mean curvature flow solver and verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a named preset experiment (no name lists the presets).
    Preset {
        name: Option<String>,
        /// Write artifact files into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the verifier on a directory of persisted snapshots.
    Verify {
        #[arg(long)]
        snapshots: PathBuf,
    },
}

const EXIT_TOLERANCE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_BLOWUP: u8 = 4;

fn failure_record(err: &Error) -> u8 {
    let (kind, code) = match err {
        Error::Blowup { .. } => ("blowup", EXIT_BLOWUP),
        Error::CertificationFailure(_) => ("tolerance", EXIT_TOLERANCE),
        _ => ("validation", EXIT_VALIDATION),
    };
    eprintln!(
        "{}",
        serde_json::json!({ "status": "error", "kind": kind, "detail": err.to_string() })
    );
    code
}

fn run_config(cfg: &ExperimentConfig) -> u8 {
    match report::run_experiment(cfg) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap());
            if outcome.summary.passed {
                0
            } else {
                EXIT_TOLERANCE
            }
        }
        Err(err) => failure_record(&err),
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("LSMCF_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        } else {
            eprintln!("ignoring non-numeric LSMCF_THREADS={threads}");
        }
    }
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => match std::fs::read_to_string(&config) {
            Ok(text) => match ExperimentConfig::from_json(&text) {
                Ok(cfg) => run_config(&cfg),
                Err(err) => failure_record(&err),
            },
            Err(err) => failure_record(&Error::Io(err)),
        },
        Command::Preset { name: None, .. } => {
            for name in config::preset_names() {
                println!("{name}");
            }
            0
        }
        Command::Preset { name: Some(name), out } => match config::preset(&name) {
            Ok(mut cfg) => {
                if out.is_some() {
                    cfg.output.directory = out;
                    cfg.output.persist_snapshots = true;
                }
                run_config(&cfg)
            }
            Err(err) => failure_record(&err),
        },
        Command::Verify { snapshots } => match report::verify_snapshots(&snapshots) {
            Ok(summary) => {
                println!("{}", serde_json::to_string_pretty(&summary).unwrap());
                if summary.passed {
                    0
                } else {
                    EXIT_TOLERANCE
                }
            }
            Err(err) => failure_record(&err),
        },
    };
    ExitCode::from(code)
}
