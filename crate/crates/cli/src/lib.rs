//! Operator entry points: run scenarios, run perception standalone, drive
//! sim app specs, emit reports, replay session logs.

mod cli_config;
mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

pub use cli_config::CliConfig;

#[derive(Parser)]
#[command(
    name = "uipilot",
    version,
    about = "Scenario-driven GUI test generation engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenarios against a backend with an LLM provider.
    Run {
        /// Scenario name(s) from the config's scenario catalog.
        #[arg(long = "scenario", required = true)]
        scenarios: Vec<String>,
        /// Config file (TOML). Flags override config values.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Provider selector: `scripted:<script.json>` or `http`.
        #[arg(long)]
        provider: Option<String>,
        /// Backend selector: `sim:<app.json>` or `adb[:serial]`.
        #[arg(long)]
        backend: Option<String>,
        /// Output directory; one subdirectory per session.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run scenarios concurrently with this many workers.
        #[arg(long)]
        parallel: Option<usize>,
        /// Pin the session id (single scenario only); unique per run
        /// otherwise.
        #[arg(long)]
        session_id: Option<String>,
        /// Directory with prompt template overrides, `<stage>.txt` files.
        #[arg(long)]
        templates: Option<PathBuf>,
        /// Reserved: runs are already deterministic given a script and a sim
        /// app spec.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_steps: Option<u32>,
        #[arg(long)]
        max_corrections: Option<u32>,
    },
    /// Recognize widgets on a screenshot and write the annotated image plus
    /// the widget document.
    Perceive {
        image: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory, defaults to the image's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a sim app spec and drive it with an event script.
    Simulate {
        spec: PathBuf,
        /// Event file: one event per line (`tap X Y`, `text S`,
        /// `scroll DIR`, `back`).
        #[arg(long)]
        events: Option<PathBuf>,
        /// Save a screenshot after each event into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate session directories into report tables.
    Report {
        #[arg(required = true)]
        sessions: Vec<PathBuf>,
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Reconstruct a session from its log and print a summary.
    Replay { log: PathBuf },
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenarios,
            config,
            provider,
            backend,
            out,
            parallel,
            session_id,
            templates,
            seed: _,
            max_steps,
            max_corrections,
        } => commands::run_cmd(commands::RunArgs {
            scenarios,
            config,
            provider,
            backend,
            out,
            parallel,
            session_id,
            templates,
            max_steps,
            max_corrections,
        }),
        Command::Perceive { image, config, out } => commands::perceive_cmd(image, config, out),
        Command::Simulate { spec, events, out } => commands::simulate_cmd(spec, events, out),
        Command::Report { sessions, format } => commands::report_cmd(sessions, &format),
        Command::Replay { log } => commands::replay_cmd(log),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}
