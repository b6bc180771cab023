mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Answer questions over CSV tables by building and running query plans.
#[derive(Debug, Parser)]
#[command(name = "planql", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML config file (default: $PLANQL_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set agent.budget=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// More log output on stderr (-v, -vv).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Providers {
    /// Offline describer, embedder and validator.
    Stub,
    /// HTTP endpoints from the config.
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RunnerMode {
    Replay,
    Scripted,
    Live,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the three-level schema index for a directory of CSV files.
    Index {
        /// Directory of CSV files (default: paths.tables).
        #[arg(long)]
        tables: Option<PathBuf>,
        /// Output store file (default: paths.index).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "live")]
        providers: Providers,
        #[arg(long)]
        cluster_sim: Option<f64>,
    },
    /// Ask a question; prints the answer as CSV.
    Ask {
        question: String,
        #[arg(long)]
        tables: Option<PathBuf>,
        /// Scripted model trace (JSON array of turns) instead of a live model.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the plan that produced the answer.
        #[arg(long)]
        emit_plan: Option<PathBuf>,
        /// Write the transcript as JSON lines.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Schema index used for wide inputs (default: paths.index, if present).
        #[arg(long)]
        index: Option<PathBuf>,
        /// Providers for schema retrieval on wide inputs.
        #[arg(long, value_enum, default_value = "live")]
        providers: Providers,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Re-execute a plan file; prints the root table as CSV.
    Replay {
        plan: PathBuf,
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// Run an evaluation suite; prints the per-hardness table.
    Eval {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "replay")]
        runner: RunnerMode,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_env("PLANQL_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .without_time()
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.global.verbose);
    match commands::dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_ERROR)
        }
    }
}
