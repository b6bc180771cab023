use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use planql::agent::{run_agent, Answer, Retrieval, RunOutcome, Status};
use planql::config::{Config, Layers};
use planql::eval::{load_manifest, run_suite, Runner};
use planql::index::{
    build_index, FixedValidator, LlmDescriber, LlmValidator, RelevanceValidator, StubDescriber, VectorStore,
};
use planql::plan::{replay, PlanFile};
use planql::providers::{ChatProvider, EmbeddingProvider, HttpChat, HttpEmbedder, ScriptedChat, StubEmbedder};
use planql::table::{load_csv_dir, write_csv, CsvOptions, NullPolicy, Table};

use crate::{Cli, Command, GlobalArgs, Providers, RunnerMode};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_UNANSWERED: u8 = 2;

fn load_config(global: &GlobalArgs, flags: Vec<(String, String)>) -> Result<Config> {
    let mut layers = Layers::from_process_env();
    layers.file = global.config.clone();
    for kv in &global.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
        layers.overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    layers.overrides.extend(flags);
    Ok(Config::resolve(&layers)?)
}

fn load_tables(dir: &Path) -> Result<BTreeMap<String, Table>> {
    let tables = load_csv_dir(dir, CsvOptions::default()).with_context(|| format!("loading tables from {}", dir.display()))?;
    if tables.is_empty() {
        bail!("no tables found in {}", dir.display());
    }
    Ok(tables)
}

fn print_table(t: &Table) -> Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    write_csv(t, &mut lock, NullPolicy::Standard)?;
    lock.flush()?;
    Ok(())
}

pub fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Index {
            tables,
            out,
            providers,
            cluster_sim,
        } => {
            let flags = cluster_sim
                .map(|s| vec![("thresholds.cluster_sim".to_string(), s.to_string())])
                .unwrap_or_default();
            let cfg = load_config(&cli.global, flags)?;
            cmd_index(&cfg, tables, out, providers)
        }
        Command::Ask {
            question,
            tables,
            trace,
            emit_plan,
            transcript,
            index,
            providers,
            budget,
        } => {
            let flags = budget
                .map(|b| vec![("agent.budget".to_string(), b.to_string())])
                .unwrap_or_default();
            let cfg = load_config(&cli.global, flags)?;
            let opts = AskOptions {
                tables,
                trace,
                emit_plan,
                transcript,
                index,
                providers,
            };
            cmd_ask(&cfg, &question, opts)
        }
        Command::Replay { plan, tables } => {
            let cfg = load_config(&cli.global, Vec::new())?;
            cmd_replay(&cfg, &plan, tables)
        }
        Command::Eval {
            manifest,
            runner,
            report,
        } => {
            let cfg = load_config(&cli.global, Vec::new())?;
            cmd_eval(&cfg, &manifest, runner, report)
        }
    }
}

fn cmd_index(cfg: &Config, tables: Option<PathBuf>, out: Option<PathBuf>, providers: Providers) -> Result<ExitCode> {
    let dir = tables.unwrap_or_else(|| cfg.paths.tables.clone());
    let out = out.unwrap_or_else(|| cfg.paths.index.clone());
    let loaded = load_tables(&dir)?;
    let refs: Vec<&Table> = loaded.values().collect();
    let sim = cfg.thresholds.cluster_sim;
    let store = match providers {
        Providers::Stub => build_index(&refs, &StubDescriber, &StubEmbedder, sim)?,
        Providers::Live => {
            let describer = LlmDescriber::new(HttpChat::new(cfg.llm.clone())?);
            let embedder = HttpEmbedder::new(cfg.embedder.clone())?;
            build_index(&refs, &describer, &embedder, sim)?
        }
    };
    store.save(&out)?;
    let (c, k, t) = store.sizes();
    println!("columns,clusters,tables");
    println!("{c},{k},{t}");
    tracing::info!(path = %out.display(), "index written");
    Ok(ExitCode::from(EXIT_OK))
}

struct AskOptions {
    tables: Option<PathBuf>,
    trace: Option<PathBuf>,
    emit_plan: Option<PathBuf>,
    transcript: Option<PathBuf>,
    index: Option<PathBuf>,
    providers: Providers,
}

fn cmd_ask(cfg: &Config, question: &str, opts: AskOptions) -> Result<ExitCode> {
    let dir = opts.tables.clone().unwrap_or_else(|| cfg.paths.tables.clone());
    let tables = load_tables(&dir)?;
    let chat: Box<dyn ChatProvider> = match &opts.trace {
        Some(p) => Box::new(ScriptedChat::from_trace_file(p)?),
        None => Box::new(HttpChat::new(cfg.llm.clone())?),
    };

    let total_columns: usize = tables.values().map(Table::num_columns).sum();
    let index_path = opts.index.clone().unwrap_or_else(|| cfg.paths.index.clone());
    let wants_index = total_columns > cfg.agent.wide_table_threshold && index_path.exists();
    let store = if wants_index {
        Some(VectorStore::load(&index_path)?)
    } else {
        None
    };
    let (embedder, validator): (Box<dyn EmbeddingProvider>, Box<dyn RelevanceValidator>) = match opts.providers {
        Providers::Stub => (Box::new(StubEmbedder), Box::new(FixedValidator::all())),
        Providers::Live if store.is_some() => (
            Box::new(HttpEmbedder::new(cfg.embedder.clone())?),
            Box::new(LlmValidator::new(HttpChat::new(cfg.llm.clone())?)),
        ),
        Providers::Live => (Box::new(StubEmbedder), Box::new(FixedValidator::all())),
    };
    let retrieval = store.as_ref().map(|s| Retrieval {
        store: s,
        embedder: embedder.as_ref(),
        validator: validator.as_ref(),
        thresholds: cfg.thresholds.thresholds(),
    });

    let outcome = run_agent(question, &tables, &cfg.agent, chat.as_ref(), retrieval.as_ref())?;
    write_artifacts(&outcome, &opts)?;
    report_outcome(outcome)
}

fn write_artifacts(outcome: &RunOutcome, opts: &AskOptions) -> Result<()> {
    if let Some(p) = &opts.transcript {
        let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        outcome.state.write_transcript(std::io::BufWriter::new(f))?;
    }
    if let Some(p) = &opts.emit_plan {
        let reg = &outcome.state.registry;
        match reg.root() {
            Some(root) => {
                let plan = PlanFile::export(reg, root)?;
                std::fs::write(p, plan.to_json()).with_context(|| format!("writing {}", p.display()))?;
            }
            None => tracing::warn!("no plan root to export; {} not written", p.display()),
        }
    }
    Ok(())
}

fn report_outcome(outcome: RunOutcome) -> Result<ExitCode> {
    match (outcome.status, outcome.answer) {
        (Status::Answered, Some(Answer::Table(t))) => {
            print_table(&t)?;
            Ok(ExitCode::from(EXIT_OK))
        }
        (Status::Answered, Some(Answer::Text(s))) => {
            println!("{s}");
            Ok(ExitCode::from(EXIT_OK))
        }
        (Status::Error, _) => bail!(outcome.reason.unwrap_or_else(|| "agent error".into())),
        (_, _) => {
            eprintln!(
                "unanswered after {} iteration(s): {}",
                outcome.state.iteration,
                outcome.reason.unwrap_or_default()
            );
            Ok(ExitCode::from(EXIT_UNANSWERED))
        }
    }
}

fn cmd_replay(cfg: &Config, plan: &Path, tables: Option<PathBuf>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(plan).with_context(|| format!("reading plan {}", plan.display()))?;
    let plan = PlanFile::from_json(&text)?;
    let dir = tables.unwrap_or_else(|| cfg.paths.tables.clone());
    let tables = load_tables(&dir)?;
    let t = replay(&plan, &tables)?;
    print_table(&t)?;
    Ok(ExitCode::from(EXIT_OK))
}

fn cmd_eval(cfg: &Config, manifest: &Path, mode: RunnerMode, report: Option<PathBuf>) -> Result<ExitCode> {
    let m = load_manifest(manifest)?;
    let live_chat;
    let runner = match mode {
        RunnerMode::Replay => Runner::Replay,
        RunnerMode::Scripted => Runner::Scripted(cfg.agent.clone()),
        RunnerMode::Live => {
            live_chat = HttpChat::new(cfg.llm.clone())?;
            Runner::Live(cfg.agent.clone(), &live_chat)
        }
    };
    let r = run_suite(&m, &runner);
    print!("{}", r.to_text());
    if let Some(p) = report {
        std::fs::write(&p, r.to_json()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(ExitCode::from(EXIT_OK))
}
