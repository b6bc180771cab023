//! The supervisor loop: Thought, Action, Observation, repeated until the
//! model names a final answer or the iteration budget runs out.
//!
//! Every action either adds a node to the plan registry or fails without
//! touching it. A reply that cannot be parsed still uses up its iteration;
//! the parse error is sent back as the observation.

mod action;
mod observe;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::index::{query_relevant_columns, RelevanceValidator, Thresholds, VectorStore};
use crate::operators::{ArgSpec, Operator};
use crate::plan::{NodeId, PlanRegistry};
use crate::prompts;
use crate::providers::{ChatProvider, EmbeddingProvider, Message, ProviderError};
use crate::table::{describe_table_columns, SummaryOptions, Table};

pub use self::action::{parse_action, ActionRequest, FinalAnswer, ParseError};
pub use self::observe::{render_observation, Focus};

/// Name of the inspection tool; it adds no node.
pub const DESCRIBE_TOOL: &str = "describe";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub budget: usize,
    /// Schema retrieval runs when the loaded tables have more columns than
    /// this in total.
    pub wide_table_threshold: usize,
    /// Byte cap on each observation.
    pub observation_cap: usize,
    pub max_sample_rows: usize,
    pub max_cell_chars: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            budget: 15,
            wide_table_threshold: 120,
            observation_cap: 8192,
            max_sample_rows: 5,
            max_cell_chars: 120,
        }
    }
}

impl AgentConfig {
    pub(crate) fn summary_options(&self, max_bytes: usize) -> SummaryOptions {
        SummaryOptions {
            max_sample: self.max_sample_rows,
            max_cell_chars: self.max_cell_chars,
            max_bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub inputs: usize,
    pub args: Vec<ArgSpec>,
}

/// One entry per operator plus the `describe` inspection tool.
pub fn tool_specs() -> Vec<ToolSpec> {
    let mut specs: Vec<ToolSpec> = Operator::ALL
        .iter()
        .map(|op| ToolSpec {
            name: op.name(),
            description: op.description(),
            inputs: op.arity(),
            args: op.arg_specs(),
        })
        .collect();
    specs.push(ToolSpec {
        name: DESCRIBE_TOOL,
        description: "Show the schema and sample rows of an existing node without adding a node.",
        inputs: 1,
        args: vec![],
    });
    specs
}

pub fn render_tool_catalog(specs: &[ToolSpec]) -> String {
    let mut out = String::new();
    for s in specs {
        out.push_str(&format!("- {} (children: {}): {}\n", s.name, s.inputs, s.description));
        for a in &s.args {
            let req = if a.required { "required" } else { "optional" };
            out.push_str(&format!("    {}: {} ({req}) {}\n", a.name, a.kind, a.description));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptRecord {
    pub step: usize,
    pub thought: String,
    pub action: Option<ActionRequest>,
    pub observation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pub registry: PlanRegistry,
    pub transcript: Vec<TranscriptRecord>,
    pub iteration: usize,
    pub budget: usize,
    /// Columns kept by schema retrieval, by table; `None` when retrieval
    /// did not run.
    pub focus: Option<Focus>,
}

impl AgentState {
    /// One JSON object per line.
    pub fn write_transcript(&self, mut w: impl Write) -> std::io::Result<()> {
        for r in &self.transcript {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn transcript_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_transcript(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Answered,
    Unanswered,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    Table(Table),
    Text(String),
}

#[derive(Debug)]
pub struct RunOutcome {
    pub status: Status,
    pub answer: Option<Answer>,
    pub state: AgentState,
    /// Why the run ended without an answer, when it did.
    pub reason: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("no tables to work on")]
    NoTables,
    #[error("budget must be at least 1")]
    ZeroBudget,
}

/// Schema retrieval setup used for wide inputs.
pub struct Retrieval<'a> {
    pub store: &'a VectorStore,
    pub embedder: &'a dyn EmbeddingProvider,
    pub validator: &'a dyn RelevanceValidator,
    pub thresholds: Thresholds,
}

fn focus_for(
    question: &str,
    tables: &BTreeMap<String, Table>,
    config: &AgentConfig,
    retrieval: Option<&Retrieval<'_>>,
) -> Result<Option<Focus>, String> {
    let total: usize = tables.values().map(Table::num_columns).sum();
    if total <= config.wide_table_threshold {
        return Ok(None);
    }
    let Some(r) = retrieval else {
        tracing::warn!(total, "wide input but no schema index configured; showing full schemas");
        return Ok(None);
    };
    let cols = query_relevant_columns(question, r.store, &r.thresholds, r.embedder, r.validator)
        .map_err(|e| format!("schema retrieval failed: {e}"))?;
    tracing::info!(retrieved = cols.len(), total, "schema retrieval");
    let mut focus = Focus::new();
    for name in tables.keys() {
        let names: BTreeSet<String> = VectorStore::column_names_for(name, &cols).into_iter().collect();
        focus.insert(name.clone(), names);
    }
    Ok(Some(focus))
}

/// Runs the loop over `tables` (each becomes a leaf, in name order).
pub fn run_agent(
    question: &str,
    tables: &BTreeMap<String, Table>,
    config: &AgentConfig,
    chat: &dyn ChatProvider,
    retrieval: Option<&Retrieval<'_>>,
) -> Result<RunOutcome, AgentError> {
    if tables.is_empty() {
        return Err(AgentError::NoTables);
    }
    if config.budget == 0 {
        return Err(AgentError::ZeroBudget);
    }
    let mut registry = PlanRegistry::new();
    for t in tables.values() {
        registry.add_leaf(t.clone());
    }
    let mut state = AgentState {
        registry,
        transcript: Vec::new(),
        iteration: 0,
        budget: config.budget,
        focus: None,
    };
    state.focus = match focus_for(question, tables, config, retrieval) {
        Ok(f) => f,
        Err(reason) => {
            return Ok(RunOutcome {
                status: Status::Error,
                answer: None,
                state,
                reason: Some(reason),
            })
        }
    };

    let budget_text = config.budget.to_string();
    let catalog = render_tool_catalog(&tool_specs());
    let system = prompts::render(prompts::AGENT_SYSTEM, &[("budget", &budget_text), ("tools", &catalog)]);
    let per_leaf = (config.observation_cap / tables.len()).max(512);
    let leaves: Vec<String> = state
        .registry
        .leaves()
        .map(|n| {
            let only = state.focus.as_ref().and_then(|f| f.get(&n.result().id().0));
            let only: Option<Vec<String>> = only.map(|s| s.iter().cloned().collect());
            format!(
                "node {}:\n{}",
                n.id,
                describe_table_columns(n.result(), only.as_deref(), &config.summary_options(per_leaf))
            )
        })
        .collect();
    let task = prompts::render(prompts::AGENT_TASK, &[("question", question), ("tables", &leaves.join("\n"))]);
    let mut messages = vec![Message::system(system), Message::user(task)];

    for step in 1..=config.budget {
        let reply = match chat.complete(&messages) {
            Ok(r) => r,
            Err(e @ ProviderError::TraceExhausted { .. }) => {
                return Ok(RunOutcome {
                    status: Status::Unanswered,
                    answer: None,
                    state,
                    reason: Some(e.to_string()),
                })
            }
            Err(e) => {
                return Ok(RunOutcome {
                    status: Status::Error,
                    answer: None,
                    state,
                    reason: Some(e.to_string()),
                })
            }
        };
        state.iteration = step;
        let thought = action::thought_of(&reply);
        messages.push(Message::assistant(reply.clone()));

        let (action, observation, error, finished) = match parse_action(&reply) {
            Err(e) => (None, format!("error: {e}"), Some(e.to_string()), None),
            Ok(a) => {
                let (obs, err, fin) = execute(&a, &mut state, config);
                (Some(a), obs, err, fin)
            }
        };
        tracing::debug!(step, error = error.as_deref(), "agent step");
        state.transcript.push(TranscriptRecord {
            step,
            thought,
            action,
            observation: observation.clone(),
            error,
        });
        if let Some(answer) = finished {
            return Ok(RunOutcome {
                status: Status::Answered,
                answer: Some(answer),
                state,
                reason: None,
            });
        }
        messages.push(Message::user(format!("Observation:\n{observation}")));
    }
    Ok(RunOutcome {
        status: Status::Unanswered,
        answer: None,
        state,
        reason: Some(format!("no final answer within {} iterations", config.budget)),
    })
}

/// Applies one action. Returns the observation, an error message if the
/// action failed, and the answer if it was final.
fn execute(a: &ActionRequest, state: &mut AgentState, config: &AgentConfig) -> (String, Option<String>, Option<Answer>) {
    let fail = |msg: String| (format!("error: {msg}\nThe tree is unchanged."), Some(msg), None);
    match a {
        ActionRequest::FinalAnswer(FinalAnswer::Text(t)) => {
            (format!("final answer: {t}"), None, Some(Answer::Text(t.clone())))
        }
        ActionRequest::FinalAnswer(FinalAnswer::Node(id)) => match state.registry.set_root(*id) {
            Ok(()) => {
                let t = state.registry.node(*id).expect("root exists").result().clone();
                (
                    format!("final answer: node {id} ({} rows x {} cols)", t.num_rows(), t.num_columns()),
                    None,
                    Some(Answer::Table(t)),
                )
            }
            Err(e) => fail(e.to_string()),
        },
        ActionRequest::ToolCall { tool, children, .. } if tool == DESCRIBE_TOOL => match children.as_slice() {
            [id] if *id < state.registry.len() => (render_observation(*id, &state.registry, config, state.focus.as_ref()), None, None),
            [id] => fail(format!("unknown node {id}")),
            _ => fail("describe takes exactly one child".into()),
        },
        ActionRequest::ToolCall { tool, args, children } => {
            match state.registry.apply_op(tool, args.clone(), children) {
                Ok((id, _)) => (render_observation(id, &state.registry, config, state.focus.as_ref()), None, None),
                Err(e) => fail(e.to_string()),
            }
        }
    }
}

/// Ids of nodes reachable from `root`, for checking that an answer is
/// grounded in at least one leaf.
pub fn answer_leaves(reg: &PlanRegistry, root: NodeId) -> Vec<NodeId> {
    reg.linearize(root)
        .map(|ns| ns.into_iter().filter(|n| n.is_leaf()).map(|n| n.id).collect())
        .unwrap_or_default()
}
