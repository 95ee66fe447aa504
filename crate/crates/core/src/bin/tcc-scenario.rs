//! Runs scenario files and the builtin suite.
//!
//! Exit status: 0 when everything passed, 1 on a scenario failure, 2 when a
//! file cannot be read or parsed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tcc::scenario::{parse_scenario, run_scenario, run_stress, run_suite, Report, RunOptions, Scenario, StressOptions};

#[derive(Parser)]
#[command(version, about = "Replay scripted interleavings against the quizzes domain")]
struct Cli {
    /// Interval of the background event loop when a scenario enables it
    /// without giving one.
    #[arg(long, global = true, default_value_t = tcc::events::DEFAULT_INTERVAL_MS)]
    event_interval_ms: u64,
    /// Check every snapshot against the admissibility conditions.
    #[arg(long, global = true)]
    audit: bool,
    /// Append commit journal lines to this file.
    #[arg(long, global = true)]
    journal_file: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and print its report.
    Run { file: PathBuf },
    /// Run the builtin suite and print a summary table.
    Suite,
    /// Run one scenario file and print only its commit journal.
    Journal { file: PathBuf },
    /// Commit concurrently from several threads and check atomicity.
    Stress {
        #[arg(long, default_value_t = 8)]
        invokers: usize,
        #[arg(long, default_value_t = 200)]
        commits: usize,
    },
}

const FAILED: u8 = 1;
const UNUSABLE_INPUT: u8 = 2;

fn load(path: &Path) -> Result<Scenario, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(UNUSABLE_INPUT)
    })?;
    let mut scenario = parse_scenario(&text).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(UNUSABLE_INPUT)
    })?;
    if scenario.name.is_empty() {
        scenario.name = path
            .file_stem()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    }
    Ok(scenario)
}

fn execute(path: &Path, options: &RunOptions) -> Result<Report, ExitCode> {
    let scenario = load(path)?;
    run_scenario(&scenario, options).map_err(|e| {
        eprintln!("journal file: {e}");
        ExitCode::from(UNUSABLE_INPUT)
    })
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(FAILED)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let options = RunOptions {
        event_interval_ms: cli.event_interval_ms,
        audit: cli.audit,
        journal_file: cli.journal_file,
    };
    let outcome = match cli.command {
        Command::Run { file } => execute(&file, &options).map(|report| {
            println!("{report}");
            status(report.passed())
        }),
        Command::Journal { file } => execute(&file, &options).map(|report| {
            print!("{}", report.journal_text());
            status(report.passed())
        }),
        Command::Suite => match run_suite(&options) {
            Ok(suite) => {
                println!("{suite}");
                Ok(status(suite.all_passed()))
            }
            Err(e) => {
                eprintln!("journal file: {e}");
                Err(ExitCode::from(UNUSABLE_INPUT))
            }
        },
        Command::Stress { invokers, commits } => {
            let report = run_stress(StressOptions {
                invokers,
                commits_per_invoker: commits,
            });
            println!("{report}");
            Ok(status(report.ok()))
        }
    };
    outcome.unwrap_or_else(|code| code)
}
