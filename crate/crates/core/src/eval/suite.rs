use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{exact_match, percentage_error, within_threshold};
use crate::agent::{run_agent, AgentConfig, Answer, Status};
use crate::plan::{replay, PlanFile};
use crate::providers::{ChatProvider, ScriptedChat};
use crate::table::{load_csv, parse_number, read_csv_str, CsvOptions, NullPolicy, Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hardness {
    Easy,
    Medium,
    Hard,
    Extra,
}

impl Hardness {
    pub const ALL: [Hardness; 4] = [Hardness::Easy, Hardness::Medium, Hardness::Hard, Hardness::Extra];
}

impl fmt::Display for Hardness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hardness::Easy => "easy",
            Hardness::Medium => "medium",
            Hardness::Hard => "hard",
            Hardness::Extra => "extra",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    #[default]
    Table,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Truth {
    /// A CSV file; nulls are written `\N`.
    Csv(PathBuf),
    Number(f64),
}

/// One manifest entry. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryCase {
    pub id: String,
    pub question: String,
    pub tables: BTreeMap<String, PathBuf>,
    pub truth: Truth,
    #[serde(default)]
    pub order_sensitive: bool,
    pub hardness: Hardness,
    #[serde(default)]
    pub kind: Kind,
    /// Plan file for the replay runner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PathBuf>,
    /// Model trace for the scripted runner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub cases: Vec<QueryCase>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("cannot read manifest {path}: {reason}")]
    Manifest { path: String, reason: String },
    #[error("duplicate case id {0:?}")]
    DuplicateCase(String),
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest, EvalError> {
    let path = path.as_ref();
    let err = |reason: String| EvalError::Manifest {
        path: path.display().to_string(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let mut m: Manifest = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    let mut seen = std::collections::HashSet::new();
    for c in &m.cases {
        if !seen.insert(c.id.as_str()) {
            return Err(EvalError::DuplicateCase(c.id.clone()));
        }
    }
    m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(m)
}

/// How each case produces its answer.
pub enum Runner<'a> {
    /// Replays the case's plan file.
    Replay,
    /// Runs the agent on the case's trace file.
    Scripted(AgentConfig),
    /// Runs the agent against a live provider.
    Live(AgentConfig, &'a dyn ChatProvider),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// Correct.
    T,
    /// Wrong answer, or the case could not run.
    F,
    /// No answer within the budget.
    S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub hardness: Hardness,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Outcome of one case, as produced by [`run_case`].
pub type CaseOutcome = CaseRecord;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub attempted: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub unanswered: usize,
}

impl Bucket {
    fn add(&mut self, o: Outcome) {
        self.attempted += 1;
        match o {
            Outcome::T => self.correct += 1,
            Outcome::F => self.incorrect += 1,
            Outcome::S => self.unanswered += 1,
        }
    }

    fn merge(self, o: Bucket) -> Bucket {
        Bucket {
            attempted: self.attempted + o.attempted,
            correct: self.correct + o.correct,
            incorrect: self.incorrect + o.incorrect,
            unanswered: self.unanswered + o.unanswered,
        }
    }

    pub fn em_percent(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.attempted as f64
        }
    }
}

/// Per-hardness counts and per-case outcomes. Cases are kept sorted by id,
/// so merging reports is associative and commutative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub buckets: BTreeMap<Hardness, Bucket>,
    pub overall: Bucket,
    pub em_percent: f64,
    pub cases: Vec<CaseRecord>,
}

impl Default for EvalReport {
    fn default() -> Self {
        EvalReport::from_records(Vec::new())
    }
}

impl EvalReport {
    pub fn from_records(mut cases: Vec<CaseRecord>) -> Self {
        cases.sort_by(|a, b| a.id.cmp(&b.id));
        let mut buckets: BTreeMap<Hardness, Bucket> = Hardness::ALL.iter().map(|h| (*h, Bucket::default())).collect();
        let mut overall = Bucket::default();
        for c in &cases {
            buckets.get_mut(&c.hardness).expect("all levels present").add(c.outcome);
            overall.add(c.outcome);
        }
        EvalReport {
            buckets,
            overall,
            em_percent: overall.em_percent(),
            cases,
        }
    }

    pub fn merge(self, other: EvalReport) -> EvalReport {
        let mut cases = self.cases;
        cases.extend(other.cases);
        let merged = EvalReport::from_records(cases);
        debug_assert_eq!(
            merged.overall,
            self.overall.merge(other.overall),
            "bucket counts are additive"
        );
        merged
    }

    pub fn outcomes(&self) -> Vec<(&str, Outcome)> {
        self.cases.iter().map(|c| (c.id.as_str(), c.outcome)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<8} {:>9} {:>7} {:>9} {:>10} {:>7}\n",
            "level", "attempted", "correct", "incorrect", "unanswered", "EM%"
        );
        let rows = self
            .buckets
            .iter()
            .map(|(h, b)| (h.to_string(), b))
            .chain(std::iter::once(("overall".to_string(), &self.overall)));
        for (name, b) in rows {
            out.push_str(&format!(
                "{:<8} {:>9} {:>7} {:>9} {:>10} {:>7.2}\n",
                name,
                b.attempted,
                b.correct,
                b.incorrect,
                b.unanswered,
                b.em_percent()
            ));
        }
        for c in &self.cases {
            let o = match c.outcome {
                Outcome::T => "T",
                Outcome::F => "F",
                Outcome::S => "S",
            };
            match &c.reason {
                Some(r) => out.push_str(&format!("{} {o} ({r})\n", c.id)),
                None => out.push_str(&format!("{} {o}\n", c.id)),
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn load_tables(case: &QueryCase, base: &Path) -> Result<BTreeMap<String, Table>, String> {
    case.tables
        .iter()
        .map(|(name, rel)| {
            let t = load_csv(base.join(rel), CsvOptions::default()).map_err(|e| e.to_string())?;
            Ok((name.clone(), t.relabel(name.as_str(), t.provenance().clone())))
        })
        .collect()
}

fn load_truth_table(path: &Path) -> Result<Table, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("truth {}: {e}", path.display()))?;
    let opts = CsvOptions {
        nulls: NullPolicy::Explicit,
        ..CsvOptions::default()
    };
    read_csv_str(&text, "truth", opts).map_err(|e| format!("truth {}: {e}", path.display()))
}

fn answer_number(a: &Answer) -> Option<f64> {
    match a {
        Answer::Text(s) => parse_number(s.trim()),
        Answer::Table(t) if t.num_rows() == 1 && t.num_columns() == 1 => t.rows()[0][0].coerce_f64(),
        Answer::Table(_) => None,
    }
}

fn answer_table(a: Answer) -> Table {
    match a {
        Answer::Table(t) => t,
        Answer::Text(s) => {
            let v = parse_number(s.trim()).map_or(Value::Text(s), Value::Number);
            Table::from_rows("answer", &["answer"], vec![vec![v]]).expect("one column")
        }
    }
}

fn score(case: &QueryCase, base: &Path, answer: Answer) -> Result<(Outcome, Option<String>), String> {
    match (&case.truth, case.kind) {
        (Truth::Number(truth), _) => {
            let Some(pred) = answer_number(&answer) else {
                return Ok((Outcome::F, Some("answer is not a single number".into())));
            };
            let pct = percentage_error(pred, *truth).ok_or("truth is zero; percentage error undefined")?;
            if within_threshold(pct) {
                Ok((Outcome::T, None))
            } else {
                Ok((Outcome::F, Some(format!("percentage error {pct:.4}"))))
            }
        }
        (Truth::Csv(rel), Kind::Numeric) => {
            let truth = load_truth_table(&base.join(rel))?;
            let t = answer_number(&Answer::Table(truth)).ok_or("numeric truth file must hold a single number")?;
            let case = QueryCase {
                truth: Truth::Number(t),
                ..case.clone()
            };
            score(&case, base, answer)
        }
        (Truth::Csv(rel), Kind::Table) => {
            let truth = load_truth_table(&base.join(rel))?;
            if exact_match(&answer_table(answer), &truth, case.order_sensitive) {
                Ok((Outcome::T, None))
            } else {
                Ok((Outcome::F, Some("result differs from truth".into())))
            }
        }
    }
}

fn produce(case: &QueryCase, base: &Path, runner: &Runner<'_>) -> Result<Option<Answer>, String> {
    let tables = load_tables(case, base)?;
    let run = |cfg: &AgentConfig, chat: &dyn ChatProvider| -> Result<Option<Answer>, String> {
        let out = run_agent(&case.question, &tables, cfg, chat, None).map_err(|e| e.to_string())?;
        match out.status {
            Status::Answered => Ok(out.answer),
            Status::Unanswered => Ok(None),
            Status::Error => Err(out.reason.unwrap_or_else(|| "agent error".into())),
        }
    };
    match runner {
        Runner::Replay => {
            let rel = case.plan.as_ref().ok_or("no plan file for replay")?;
            let path = base.join(rel);
            let text = std::fs::read_to_string(&path).map_err(|e| format!("plan {}: {e}", path.display()))?;
            let plan = PlanFile::from_json(&text).map_err(|e| e.to_string())?;
            replay(&plan, &tables).map(|t| Some(Answer::Table(t))).map_err(|e| e.to_string())
        }
        Runner::Scripted(cfg) => {
            let rel = case.trace.as_ref().ok_or("no trace file for scripted run")?;
            let chat = ScriptedChat::from_trace_file(base.join(rel)).map_err(|e| e.to_string())?;
            run(cfg, &chat)
        }
        Runner::Live(cfg, chat) => run(cfg, *chat),
    }
}

/// Runs one case. Any failure to load or run becomes an F with a reason.
pub fn run_case(case: &QueryCase, base: &Path, runner: &Runner<'_>) -> CaseRecord {
    let (outcome, reason) = match produce(case, base, runner) {
        Err(e) => (Outcome::F, Some(e)),
        Ok(None) => (Outcome::S, None),
        Ok(Some(answer)) => score(case, base, answer).unwrap_or_else(|e| (Outcome::F, Some(e))),
    };
    tracing::debug!(case = %case.id, ?outcome, "case finished");
    CaseRecord {
        id: case.id.clone(),
        hardness: case.hardness,
        outcome,
        reason,
    }
}

pub fn run_suite(manifest: &Manifest, runner: &Runner<'_>) -> EvalReport {
    EvalReport::from_records(
        manifest
            .cases
            .iter()
            .map(|c| run_case(c, &manifest.base_dir, runner))
            .collect(),
    )
}
