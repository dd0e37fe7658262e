//! `ctxnav`: plan, bench, place and serve from the command line.

mod bench;
mod error;
mod place;
mod plan;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ctxnav", version, about = "Context-aware grid navigation for simulated drones")]
struct Cli {
    /// Log verbosity on stderr (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log: tracing::Level,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Plan a flight over a map file and print path, commands and briefing.
    Plan {
        #[arg(long)]
        map: PathBuf,
        /// Operator context, applied in order (repeatable).
        #[arg(long = "context", value_name = "UTTERANCE")]
        contexts: Vec<String>,
        /// Also draw the map with the path.
        #[arg(long)]
        ascii: bool,
    },
    /// Run the six-turn protocol against every configured provider and judge it.
    Bench(bench::BenchArgs),
    /// Edge-cloud placement report.
    Place {
        /// TOML config, or `defaults` for the shipped one.
        #[arg(long, default_value = "defaults")]
        config: String,
        /// Print JSON instead of markdown.
        #[arg(long)]
        json: bool,
        /// Also write placement.md and placement.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the mission HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        /// Provider config; live entries become `llm` interpreters.
        #[arg(long)]
        providers: Option<PathBuf>,
        /// Append-only mission journal, replayed on start.
        #[arg(long)]
        journal: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Plan { map, contexts, ascii } => plan::run(&map, &contexts, ascii),
        Cmd::Bench(args) => bench::run(&args),
        Cmd::Place { config, json, out } => place::run(&config, json, out.as_deref()),
        Cmd::Serve {
            addr,
            providers,
            journal,
        } => serve::run(addr, providers.as_deref(), journal.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(error::EX_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .with_max_level(cli.log)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ctxnav: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
