//! Three-level schema index for wide tables.
//!
//! Building describes every column, groups a table's columns into clusters,
//! and describes each cluster and table; each description is embedded and
//! stored. Querying walks the levels top-down: tables similar enough to the
//! question (and confirmed by a validator), then their clusters, then
//! individual columns of clusters that are only partly relevant.

mod describe;
mod embedding;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::providers::{EmbeddingProvider, ProviderError};
use crate::table::Table;

pub use self::describe::{
    ClusterVerdict, Describer, FixedValidator, LlmDescriber, LlmValidator, RelevanceValidator,
    ScriptedValidator, StubDescriber,
};
pub use self::embedding::{cosine_sim, Embedding};

pub const DEFAULT_THRESHOLD: f64 = 0.75;
pub const DEFAULT_CLUSTER_SIM: f64 = 0.80;

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("embedding has zero norm or non-finite entries")]
    ZeroVector,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("no tables to index")]
    NoTables,
    #[error("the vector store is empty")]
    EmptyStore,
    #[error("{name} = {value} is outside [-1, 1]")]
    InvalidThreshold { name: &'static str, value: f64 },
    #[error("inconsistent store: {0}")]
    Inconsistent(String),
    #[error("cannot read or write {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Similarity cutoffs for tables, clusters and columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub theta_t: f64,
    pub theta_c: f64,
    pub theta_l: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            theta_t: DEFAULT_THRESHOLD,
            theta_c: DEFAULT_THRESHOLD,
            theta_l: DEFAULT_THRESHOLD,
        }
    }
}

pub(crate) fn check_unit_range(name: &'static str, value: f64) -> Result<(), IndexError> {
    if (-1.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(IndexError::InvalidThreshold { name, value })
    }
}

impl Thresholds {
    pub fn uniform(theta: f64) -> Self {
        Thresholds {
            theta_t: theta,
            theta_c: theta,
            theta_l: theta,
        }
    }

    pub fn validate(&self) -> Result<(), IndexError> {
        check_unit_range("theta_t", self.theta_t)?;
        check_unit_range("theta_c", self.theta_c)?;
        check_unit_range("theta_l", self.theta_l)
    }
}

/// One stored description. Column ids are `table.column`, cluster ids
/// `table#k`, table ids the table name. `members` lists cluster ids for a
/// table and column ids for a cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub id: String,
    pub description: String,
    pub embedding: Embedding,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<String>>,
}

impl Entry {
    pub fn members(&self) -> &[String] {
        self.members.as_deref().unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorStore {
    pub columns: Vec<Entry>,
    pub clusters: Vec<Entry>,
    pub tables: Vec<Entry>,
}

impl VectorStore {
    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// `(columns, clusters, tables)`
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.columns.len(), self.clusters.len(), self.tables.len())
    }

    pub fn column(&self, id: &str) -> Option<&Entry> {
        self.columns.iter().find(|e| e.id == id)
    }

    pub fn cluster(&self, id: &str) -> Option<&Entry> {
        self.clusters.iter().find(|e| e.id == id)
    }

    pub fn table(&self, id: &str) -> Option<&Entry> {
        self.tables.iter().find(|e| e.id == id)
    }

    /// Column names of `table` among `col_ids`, in `col_ids` order.
    pub fn column_names_for<'a>(table: &str, col_ids: impl IntoIterator<Item = &'a String>) -> Vec<String> {
        let prefix = format!("{table}.");
        col_ids
            .into_iter()
            .filter_map(|id| id.strip_prefix(&prefix).map(String::from))
            .collect()
    }

    /// Checks the hierarchy: every member id resolves, clusters partition
    /// the columns, every cluster belongs to exactly one table, and all
    /// embeddings share one dimension.
    pub fn check(&self) -> Result<(), IndexError> {
        let mut dim = None;
        for e in self.columns.iter().chain(&self.clusters).chain(&self.tables) {
            match dim {
                None => dim = Some(e.embedding.dim()),
                Some(d) if d != e.embedding.dim() => {
                    return Err(IndexError::DimensionMismatch {
                        left: d,
                        right: e.embedding.dim(),
                    })
                }
                _ => {}
            }
        }
        let mut seen_cols = BTreeSet::new();
        for c in &self.clusters {
            for m in c.members() {
                if self.column(m).is_none() {
                    return Err(IndexError::Inconsistent(format!("cluster {} lists unknown column {m}", c.id)));
                }
                if !seen_cols.insert(m.clone()) {
                    return Err(IndexError::Inconsistent(format!("column {m} is in two clusters")));
                }
            }
        }
        if seen_cols.len() != self.columns.len() {
            return Err(IndexError::Inconsistent("some columns belong to no cluster".into()));
        }
        let mut seen_clusters = BTreeSet::new();
        for t in &self.tables {
            for m in t.members() {
                if self.cluster(m).is_none() {
                    return Err(IndexError::Inconsistent(format!("table {} lists unknown cluster {m}", t.id)));
                }
                if !seen_clusters.insert(m.clone()) {
                    return Err(IndexError::Inconsistent(format!("cluster {m} is in two tables")));
                }
            }
        }
        if seen_clusters.len() != self.clusters.len() {
            return Err(IndexError::Inconsistent("some clusters belong to no table".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("store serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| IndexError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<VectorStore, IndexError> {
        let path = path.as_ref();
        let io = |reason: String| IndexError::Io {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        let store: VectorStore = serde_json::from_str(&text).map_err(|e| io(e.to_string()))?;
        store.check()?;
        Ok(store)
    }
}

fn embed_all(embedder: &dyn EmbeddingProvider, texts: Vec<String>) -> Result<Vec<Embedding>, IndexError> {
    let n = texts.len();
    let out = embedder.embed(&texts)?;
    if out.len() != n {
        return Err(IndexError::Inconsistent(format!("embedder returned {} vectors for {n} texts", out.len())));
    }
    Ok(out)
}

/// Leader clustering: each item joins the first cluster whose leader has
/// cosine similarity at least `cluster_sim`, otherwise it leads a new one.
/// Returns member index lists in creation order.
pub fn leader_clusters(embeddings: &[Embedding], cluster_sim: f64) -> Result<Vec<Vec<usize>>, IndexError> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    'items: for (i, e) in embeddings.iter().enumerate() {
        for members in clusters.iter_mut() {
            if cosine_sim(&embeddings[members[0]], e)? >= cluster_sim {
                members.push(i);
                continue 'items;
            }
        }
        clusters.push(vec![i]);
    }
    Ok(clusters)
}

/// Builds the column, cluster and table stores. Tables are processed in id
/// order; tables without columns are skipped with a warning.
pub fn build_index(
    tables: &[&Table],
    describer: &dyn Describer,
    embedder: &dyn EmbeddingProvider,
    cluster_sim: f64,
) -> Result<VectorStore, IndexError> {
    check_unit_range("cluster_sim", cluster_sim)?;
    if tables.is_empty() {
        return Err(IndexError::NoTables);
    }
    let mut ordered: Vec<&Table> = tables.to_vec();
    ordered.sort_by(|a, b| a.id().cmp(b.id()));

    let mut store = VectorStore::default();
    for t in ordered {
        let name = &t.id().0;
        if t.num_columns() == 0 {
            tracing::warn!(table = %name, "skipping table with no columns");
            continue;
        }
        let col_desc: Vec<String> = (0..t.num_columns())
            .map(|c| describer.describe_column(t, c))
            .collect::<Result<_, _>>()?;
        let col_emb = embed_all(embedder, col_desc.clone())?;
        let col_ids: Vec<String> = t.column_names().iter().map(|c| format!("{name}.{c}")).collect();

        let groups = leader_clusters(&col_emb, cluster_sim)?;
        let cluster_ids: Vec<String> = (0..groups.len()).map(|k| format!("{name}#{k}")).collect();
        let cluster_desc: Vec<String> = groups
            .iter()
            .map(|g| {
                let members: Vec<&str> = g.iter().map(|&i| col_desc[i].as_str()).collect();
                describer.describe_cluster(t, &members)
            })
            .collect::<Result<_, _>>()?;
        let cluster_emb = embed_all(embedder, cluster_desc.clone())?;

        let refs: Vec<&str> = cluster_desc.iter().map(String::as_str).collect();
        let table_desc = describer.describe_table(t, &refs)?;
        let table_emb = embed_all(embedder, vec![table_desc.clone()])?.remove(0);

        for ((id, description), embedding) in col_ids.into_iter().zip(col_desc).zip(col_emb) {
            store.columns.push(Entry {
                id,
                description,
                embedding,
                members: None,
            });
        }
        for (((id, description), embedding), g) in cluster_ids.iter().cloned().zip(cluster_desc).zip(cluster_emb).zip(&groups) {
            store.clusters.push(Entry {
                id,
                description,
                embedding,
                members: Some(g.iter().map(|&i| format!("{name}.{}", t.schema()[i].name)).collect()),
            });
        }
        store.tables.push(Entry {
            id: name.clone(),
            description: table_desc,
            embedding: table_emb,
            members: Some(cluster_ids),
        });
    }
    store.check()?;
    Ok(store)
}

/// Columns relevant to `question`, walking tables, clusters and columns
/// with the given thresholds. An empty result is not an error.
pub fn query_relevant_columns(
    question: &str,
    store: &VectorStore,
    thr: &Thresholds,
    embedder: &dyn EmbeddingProvider,
    validator: &dyn RelevanceValidator,
) -> Result<BTreeSet<String>, IndexError> {
    thr.validate()?;
    if store.is_empty() {
        return Err(IndexError::EmptyStore);
    }
    let q = embed_all(embedder, vec![question.to_string()])?.remove(0);
    let mut relevant = BTreeSet::new();
    for t in &store.tables {
        if cosine_sim(&q, &t.embedding)? < thr.theta_t || !validator.table_relevant(question, t)? {
            continue;
        }
        for cid in t.members() {
            let c = store
                .cluster(cid)
                .ok_or_else(|| IndexError::Inconsistent(format!("unknown cluster {cid}")))?;
            if cosine_sim(&q, &c.embedding)? < thr.theta_c {
                continue;
            }
            match validator.cluster_verdict(question, c)? {
                ClusterVerdict::Irrelevant => {}
                ClusterVerdict::Whole => relevant.extend(c.members().iter().cloned()),
                ClusterVerdict::Partial => {
                    for col_id in c.members() {
                        let col = store
                            .column(col_id)
                            .ok_or_else(|| IndexError::Inconsistent(format!("unknown column {col_id}")))?;
                        if cosine_sim(&q, &col.embedding)? >= thr.theta_l && validator.column_relevant(question, col)? {
                            relevant.insert(col_id.clone());
                        }
                    }
                }
            }
        }
    }
    Ok(relevant)
}
