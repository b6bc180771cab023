//! The operator toolset.
//!
//! Every operator is a pure function from input tables to a new output
//! table. Nothing here mutates its inputs. Relational operators follow SQL
//! semantics (nulls never join, aggregates skip nulls, set operations other
//! than `union_all` deduplicate); the analytical operators add PCA,
//! z-score anomaly flags and least-squares prediction.

mod analysis;
mod catalog;
mod expr;
pub mod linalg;
mod predicate;
mod relational;

use serde::{Deserialize, Serialize};

use crate::table::{Table, TableError};

pub use self::analysis::{
    detect_anomalies, fit_ols, pca, predict_value, AnomalyMethod, PcaResult, PredictMetrics, PredictResult,
};
pub use self::catalog::{ArgSpec, Operator};
pub use self::expr::{compute, Expr};
pub use self::predicate::{compare, like_match, BoundPredicate, CmpOp, Comparison, Operand, Predicate};
pub use self::relational::{
    aggregate, distinct, group_by, join, limit_with_ties, select_filter, set_op, sort, AggFn,
    AggregateSpec, JoinKind, JoinSpec, SetOpKind, SortKey,
};

/// Whether text cells may be parsed as numbers before comparing or
/// aggregating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coercion {
    #[default]
    Strict,
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum OpError {
    #[error("unknown column {column:?}; available: {}", list_names(available))]
    UnknownColumn { column: String, available: Vec<String> },
    #[error("{function}({column}): {reason}")]
    TypeError {
        function: String,
        column: String,
        reason: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid join spec: {0}")]
    InvalidJoin(String),
    #[error("set operation needs equal arity, got {left} and {right} columns")]
    ArityMismatch { left: usize, right: usize },
    #[error("set operation column {position}: {left} is incompatible with {right}")]
    IncompatibleColumns {
        position: usize,
        left: String,
        right: String,
    },
    #[error("column {0:?} is not numeric")]
    NonNumericColumn(String),
    #[error("need at least {needed} complete rows, got {got}")]
    InsufficientRows { needed: usize, got: usize },
    #[error("k = {k} exceeds the {columns} analyzed columns")]
    KTooLarge { k: usize, columns: usize },
    #[error("design matrix is rank deficient (pivot {pivot:.3e} at column {column})")]
    RankDeficient { column: usize, pivot: f64 },
    #[error("expression error: {0}")]
    Expression(String),
    #[error("unknown operator {0:?}")]
    UnknownOperator(String),
    #[error("{op} expects {expected} input table(s), got {got}")]
    InputArity {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("bad arguments for {op}: {reason}")]
    BadArgs { op: &'static str, reason: String },
    #[error(transparent)]
    Table(#[from] TableError),
}

fn list_names(names: &[String]) -> String {
    const SHOWN: usize = 40;
    let mut s = names.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if names.len() > SHOWN {
        s.push_str(&format!(", … ({} more)", names.len() - SHOWN));
    }
    s
}

pub(crate) fn resolve(t: &Table, name: &str) -> Result<usize, OpError> {
    t.column_index(name).ok_or_else(|| OpError::UnknownColumn {
        column: name.to_string(),
        available: t.column_names().into_iter().map(String::from).collect(),
    })
}

pub(crate) fn resolve_all(t: &Table, names: &[String]) -> Result<Vec<usize>, OpError> {
    names.iter().map(|n| resolve(t, n)).collect()
}
