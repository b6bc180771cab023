use std::collections::{BTreeMap, BTreeSet};

use super::{Entry, IndexError};
use crate::prompts;
use crate::providers::{ChatProvider, Message, ProviderError};
use crate::table::Table;

/// Distinct sample values shown to the describer for one column.
pub const DESCRIBE_SAMPLE_VALUES: usize = 10;

/// Produces natural-language descriptions for the three index levels.
pub trait Describer {
    fn describe_column(&self, table: &Table, column: usize) -> Result<String, IndexError>;
    fn describe_cluster(&self, table: &Table, member_descriptions: &[&str]) -> Result<String, IndexError>;
    fn describe_table(&self, table: &Table, cluster_descriptions: &[&str]) -> Result<String, IndexError>;
}

/// Answer of the cluster-level validator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterVerdict {
    Irrelevant,
    /// Every column of the cluster is relevant.
    Whole,
    /// Some columns may be relevant; check them one by one.
    Partial,
}

/// Confirms similarity hits at each level.
pub trait RelevanceValidator {
    fn table_relevant(&self, question: &str, table: &Entry) -> Result<bool, IndexError>;
    fn cluster_verdict(&self, question: &str, cluster: &Entry) -> Result<ClusterVerdict, IndexError>;
    fn column_relevant(&self, question: &str, column: &Entry) -> Result<bool, IndexError>;
}

fn name_words(name: &str) -> String {
    name.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn unique_join(parts: &[&str]) -> String {
    let mut seen = BTreeSet::new();
    parts
        .iter()
        .filter(|p| seen.insert(**p))
        .copied()
        .collect::<Vec<_>>()
        .join("; ")
}

/// Offline describer built from names and types only.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubDescriber;

impl Describer for StubDescriber {
    fn describe_column(&self, table: &Table, column: usize) -> Result<String, IndexError> {
        let spec = &table.schema()[column];
        Ok(match &spec.description {
            Some(d) => d.clone(),
            None => format!("{} ({})", name_words(&spec.name), spec.inferred_type),
        })
    }

    fn describe_cluster(&self, _table: &Table, members: &[&str]) -> Result<String, IndexError> {
        Ok(unique_join(members))
    }

    fn describe_table(&self, table: &Table, clusters: &[&str]) -> Result<String, IndexError> {
        Ok(format!("{}: {}", name_words(&table.id().0), unique_join(clusters)))
    }
}

fn distinct_samples(t: &Table, column: usize, limit: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for v in t.column_values(column).filter(|v| !v.is_null()) {
        let s = crate::table::truncate_cell(&v.render(), 60);
        if seen.insert(s.clone()) {
            out.push(s);
            if out.len() == limit {
                break;
            }
        }
    }
    out
}

/// Describer backed by a chat model and the versioned prompt templates.
pub struct LlmDescriber<C> {
    chat: C,
}

impl<C: ChatProvider> LlmDescriber<C> {
    pub fn new(chat: C) -> Self {
        LlmDescriber { chat }
    }

    fn ask(&self, prompt: String) -> Result<String, IndexError> {
        let text = self.chat.complete(&[Message::user(prompt)])?;
        Ok(text.trim().to_string())
    }
}

impl<C: ChatProvider> Describer for LlmDescriber<C> {
    fn describe_column(&self, table: &Table, column: usize) -> Result<String, IndexError> {
        let spec = &table.schema()[column];
        let samples = distinct_samples(table, column, DESCRIBE_SAMPLE_VALUES);
        self.ask(prompts::render(
            prompts::DESCRIBE_COLUMN,
            &[
                ("table", &table.id().0),
                ("column", &spec.name),
                ("type", &spec.inferred_type.to_string()),
                ("samples", &samples.join(", ")),
            ],
        ))
    }

    fn describe_cluster(&self, table: &Table, members: &[&str]) -> Result<String, IndexError> {
        self.ask(prompts::render(
            prompts::DESCRIBE_CLUSTER,
            &[("table", &table.id().0), ("descriptions", &bullets(members))],
        ))
    }

    fn describe_table(&self, table: &Table, clusters: &[&str]) -> Result<String, IndexError> {
        self.ask(prompts::render(
            prompts::DESCRIBE_TABLE,
            &[
                ("table", &table.id().0),
                ("rows", &table.num_rows().to_string()),
                ("columns", &table.num_columns().to_string()),
                ("descriptions", &bullets(clusters)),
            ],
        ))
    }
}

fn bullets(items: &[&str]) -> String {
    items.iter().map(|d| format!("- {d}")).collect::<Vec<_>>().join("\n")
}

/// Validator backed by a chat model. Answers are read from the first word:
/// yes/no, or all/some/none at cluster level.
pub struct LlmValidator<C> {
    chat: C,
}

impl<C: ChatProvider> LlmValidator<C> {
    pub fn new(chat: C) -> Self {
        LlmValidator { chat }
    }

    fn first_word(&self, template: &str, question: &str, e: &Entry) -> Result<String, IndexError> {
        let prompt = prompts::render(template, &[("question", question), ("description", &e.description)]);
        let reply = self.chat.complete(&[Message::user(prompt)])?;
        Ok(reply
            .split(|c: char| !c.is_alphanumeric())
            .find(|w| !w.is_empty())
            .unwrap_or("")
            .to_ascii_lowercase())
    }

    fn yes_no(&self, template: &str, question: &str, e: &Entry) -> Result<bool, IndexError> {
        match self.first_word(template, question, e)?.as_str() {
            "yes" => Ok(true),
            "no" => Ok(false),
            other => Err(ProviderError::Protocol(format!("expected yes or no, got {other:?}")).into()),
        }
    }
}

impl<C: ChatProvider> RelevanceValidator for LlmValidator<C> {
    fn table_relevant(&self, question: &str, table: &Entry) -> Result<bool, IndexError> {
        self.yes_no(prompts::VALIDATE_TABLE, question, table)
    }

    fn cluster_verdict(&self, question: &str, cluster: &Entry) -> Result<ClusterVerdict, IndexError> {
        match self.first_word(prompts::VALIDATE_CLUSTER, question, cluster)?.as_str() {
            "all" => Ok(ClusterVerdict::Whole),
            "some" => Ok(ClusterVerdict::Partial),
            "none" => Ok(ClusterVerdict::Irrelevant),
            other => Err(ProviderError::Protocol(format!("expected all, some or none, got {other:?}")).into()),
        }
    }

    fn column_relevant(&self, question: &str, column: &Entry) -> Result<bool, IndexError> {
        self.yes_no(prompts::VALIDATE_COLUMN, question, column)
    }
}

/// Gives the same answer everywhere.
#[derive(Debug, Clone, Copy)]
pub struct FixedValidator {
    pub relevant: bool,
    /// Verdict for clusters when `relevant` is true.
    pub cluster: ClusterVerdict,
}

impl FixedValidator {
    pub fn all() -> Self {
        FixedValidator {
            relevant: true,
            cluster: ClusterVerdict::Whole,
        }
    }

    pub fn none() -> Self {
        FixedValidator {
            relevant: false,
            cluster: ClusterVerdict::Irrelevant,
        }
    }
}

impl RelevanceValidator for FixedValidator {
    fn table_relevant(&self, _: &str, _: &Entry) -> Result<bool, IndexError> {
        Ok(self.relevant)
    }

    fn cluster_verdict(&self, _: &str, _: &Entry) -> Result<ClusterVerdict, IndexError> {
        Ok(if self.relevant { self.cluster } else { ClusterVerdict::Irrelevant })
    }

    fn column_relevant(&self, _: &str, _: &Entry) -> Result<bool, IndexError> {
        Ok(self.relevant)
    }
}

/// Answers from fixed lookup tables keyed by entry id. Anything not listed
/// is irrelevant.
#[derive(Debug, Clone, Default)]
pub struct ScriptedValidator {
    pub tables: BTreeSet<String>,
    pub clusters: BTreeMap<String, ClusterVerdict>,
    pub columns: BTreeSet<String>,
}

impl RelevanceValidator for ScriptedValidator {
    fn table_relevant(&self, _: &str, table: &Entry) -> Result<bool, IndexError> {
        Ok(self.tables.contains(&table.id))
    }

    fn cluster_verdict(&self, _: &str, cluster: &Entry) -> Result<ClusterVerdict, IndexError> {
        Ok(self.clusters.get(&cluster.id).copied().unwrap_or(ClusterVerdict::Irrelevant))
    }

    fn column_relevant(&self, _: &str, column: &Entry) -> Result<bool, IndexError> {
        Ok(self.columns.contains(&column.id))
    }
}
