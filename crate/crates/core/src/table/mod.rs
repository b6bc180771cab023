//! Typed, immutable in-memory tables.
//!
//! A [`Table`] is a schema plus rows of [`Value`]s. Tables are never
//! mutated after construction: every operator builds a fresh table, and
//! clones share their rows through an `Arc`.

mod csv;
mod summary;
mod value;

use std::fmt;
use std::sync::Arc;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use self::csv::{load_csv, load_csv_dir, read_csv, read_csv_str, write_csv, write_csv_string, CsvOptions, NullPolicy};
pub use self::summary::{describe_table, describe_table_columns, SummaryOptions};
pub(crate) use self::summary::{truncate_cell, BoundedText};
pub use self::value::{format_number, parse_bool, parse_number, Value, ValueTag};

pub type Row = Vec<Value>;

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
    #[error("row {row} has {got} cells but the schema has {expected} columns")]
    RowArity { row: usize, got: usize, expected: usize },
    #[error("column name must not be empty (position {0})")]
    EmptyColumnName(usize),
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
}

/// Inferred type of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Boolean,
    Number,
    Text,
    Mixed,
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnType::Boolean => "boolean",
            ColumnType::Number => "number",
            ColumnType::Text => "text",
            ColumnType::Mixed => "mixed",
        })
    }
}

impl From<ValueTag> for ColumnType {
    fn from(tag: ValueTag) -> Self {
        match tag {
            ValueTag::Bool => ColumnType::Boolean,
            ValueTag::Number => ColumnType::Number,
            ValueTag::Text => ColumnType::Text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub inferred_type: ColumnType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, inferred_type: ColumnType) -> Self {
        ColumnSpec {
            name: name.into(),
            inferred_type,
            description: None,
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = Some(description.into());
        self
    }
}

/// Opaque table identifier. Leaves use their source name, plan results use
/// `node_<id>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TableId(pub String);

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TableId {
    fn from(s: &str) -> Self {
        TableId(s.to_string())
    }
}

impl From<String> for TableId {
    fn from(s: String) -> Self {
        TableId(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SourcePath(String),
    PlanNode(usize),
    /// Produced by an operator and not yet registered anywhere.
    Derived,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    id: TableId,
    schema: Arc<[ColumnSpec]>,
    rows: Arc<[Row]>,
    provenance: Provenance,
}

impl Table {
    /// Builds a table, checking row arity and column names.
    ///
    /// Column types are recomputed from the data: a single non-null tag
    /// gives that type, two or more give `Mixed`, and an all-null column
    /// keeps the type it was declared with.
    pub fn new(
        id: impl Into<TableId>,
        schema: Vec<ColumnSpec>,
        rows: Vec<Row>,
        provenance: Provenance,
    ) -> Result<Self, TableError> {
        let mut seen = std::collections::HashSet::with_capacity(schema.len());
        for (i, col) in schema.iter().enumerate() {
            if col.name.is_empty() {
                return Err(TableError::EmptyColumnName(i));
            }
            if !seen.insert(col.name.as_str()) {
                return Err(TableError::DuplicateColumn(col.name.clone()));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(TableError::RowArity {
                    row: r,
                    got: row.len(),
                    expected: schema.len(),
                });
            }
        }
        let schema = schema
            .into_iter()
            .enumerate()
            .map(|(i, mut col)| {
                if let Some(ty) = observed_type(rows.iter().map(|r| &r[i])) {
                    col.inferred_type = ty;
                }
                col
            })
            .collect();
        Ok(Table {
            id: id.into(),
            schema,
            rows: rows.into(),
            provenance,
        })
    }

    /// Operator output: anonymous id, [`Provenance::Derived`].
    pub fn derived(schema: Vec<ColumnSpec>, rows: Vec<Row>) -> Result<Self, TableError> {
        Table::new(TableId(String::new()), schema, rows, Provenance::Derived)
    }

    /// Convenience constructor from column names; types are inferred from
    /// the values.
    pub fn from_rows<S: AsRef<str>>(
        id: &str,
        columns: &[S],
        rows: Vec<Row>,
    ) -> Result<Self, TableError> {
        let schema = columns
            .iter()
            .map(|c| ColumnSpec::new(c.as_ref(), ColumnType::Text))
            .collect();
        Table::new(TableId(id.to_string()), schema, rows, Provenance::Derived)
    }

    pub fn id(&self) -> &TableId {
        &self.id
    }

    pub fn schema(&self) -> &[ColumnSpec] {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_columns(&self) -> usize {
        self.schema.len()
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.schema.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    pub fn column_values(&self, idx: usize) -> impl Iterator<Item = &Value> + '_ {
        self.rows.iter().map(move |r| &r[idx])
    }

    /// Same schema and rows under a new identity. Rows are shared.
    pub fn relabel(&self, id: impl Into<TableId>, provenance: Provenance) -> Table {
        Table {
            id: id.into(),
            schema: Arc::clone(&self.schema),
            rows: Arc::clone(&self.rows),
            provenance,
        }
    }

    /// Same rows with per-column descriptions attached.
    pub fn with_descriptions(&self, describe: impl Fn(&ColumnSpec) -> Option<String>) -> Table {
        let schema: Vec<ColumnSpec> = self
            .schema
            .iter()
            .map(|c| ColumnSpec {
                description: describe(c).or_else(|| c.description.clone()),
                ..c.clone()
            })
            .collect();
        Table {
            id: self.id.clone(),
            schema: schema.into(),
            rows: Arc::clone(&self.rows),
            provenance: self.provenance.clone(),
        }
    }

    /// True when both tables hold the same column names, types and rows.
    /// Identity and provenance are ignored.
    pub fn same_content(&self, other: &Table) -> bool {
        self.schema.len() == other.schema.len()
            && self
                .schema
                .iter()
                .zip(other.schema.iter())
                .all(|(a, b)| a.name == b.name && a.inferred_type == b.inferred_type)
            && self.rows == other.rows
    }
}

pub(crate) fn observed_type<'a>(values: impl Iterator<Item = &'a Value>) -> Option<ColumnType> {
    let mut seen: Option<ValueTag> = None;
    for tag in values.filter_map(Value::tag) {
        match seen {
            None => seen = Some(tag),
            Some(prev) if prev != tag => return Some(ColumnType::Mixed),
            Some(_) => {}
        }
    }
    seen.map(ColumnType::from)
}

/// Draws `min(n, rows)` rows without replacement. The chosen rows keep
/// their original relative order; the choice depends only on `seed`.
pub fn sample_rows(t: &Table, n: usize, seed: u64) -> Table {
    let total = t.num_rows();
    let rows: Vec<Row> = if n >= total {
        t.rows().to_vec()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, total, n).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| t.rows()[i].clone()).collect()
    };
    Table {
        id: TableId(String::new()),
        schema: Arc::clone(&t.schema),
        rows: rows.into(),
        provenance: Provenance::Derived,
    }
}
