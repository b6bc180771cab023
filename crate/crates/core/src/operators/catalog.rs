//! Name-addressable operator catalog: JSON arguments in, one table out.
//! This is the surface the plan registry and the agent's tool list use.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    aggregate, compute, detect_anomalies, distinct, group_by, join, limit_with_ties, pca,
    predict_value, select_filter, set_op, sort, AggregateSpec, AnomalyMethod, JoinKind, JoinSpec,
    OpError, Predicate, SetOpKind, SortKey,
};
use crate::table::{sample_rows, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    SelectFilter,
    Aggregate,
    GroupBy,
    Join,
    Sort,
    SetOp,
    Distinct,
    LimitWithTies,
    SampleRows,
    Pca,
    DetectAnomalies,
    PredictValue,
    Compute,
}

/// One documented argument of an operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArgSpec {
    pub name: &'static str,
    /// Informal type, shown to the model.
    pub kind: &'static str,
    pub required: bool,
    pub description: &'static str,
}

const fn arg(name: &'static str, kind: &'static str, required: bool, description: &'static str) -> ArgSpec {
    ArgSpec {
        name,
        kind,
        required,
        description,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectArgs {
    #[serde(default)]
    columns: Option<Vec<String>>,
    #[serde(default)]
    predicate: Option<Predicate>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AggregateArgs {
    aggregates: Vec<AggregateSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupArgs {
    keys: Vec<String>,
    aggregates: Vec<AggregateSpec>,
    #[serde(default)]
    order: Option<Vec<SortKey>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JoinArgs {
    #[serde(default)]
    kind: JoinKind,
    left_on: Vec<String>,
    right_on: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SortArgs {
    keys: Vec<SortKey>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SetOpArgs {
    kind: SetOpKind,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DistinctArgs {
    #[serde(default)]
    columns: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitArgs {
    n: usize,
    by: Vec<SortKey>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleArgs {
    n: usize,
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum PcaOutput {
    #[default]
    Projected,
    Components,
    ExplainedVariance,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PcaArgs {
    columns: Vec<String>,
    k: usize,
    #[serde(default)]
    output: PcaOutput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnomalyArgs {
    columns: Vec<String>,
    #[serde(default)]
    method: AnomalyMethod,
    threshold: f64,
}

#[derive(Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum PredictOutput {
    #[default]
    Predictions,
    Metrics,
    Coefficients,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictArgs {
    features: Vec<String>,
    target: String,
    #[serde(default = "default_holdout")]
    holdout_fraction: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output: PredictOutput,
}

fn default_holdout() -> f64 {
    0.2
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComputeArgs {
    name: String,
    expr: String,
}

impl Operator {
    pub const ALL: [Operator; 13] = [
        Operator::SelectFilter,
        Operator::Aggregate,
        Operator::GroupBy,
        Operator::Join,
        Operator::Sort,
        Operator::SetOp,
        Operator::Distinct,
        Operator::LimitWithTies,
        Operator::SampleRows,
        Operator::Pca,
        Operator::DetectAnomalies,
        Operator::PredictValue,
        Operator::Compute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::SelectFilter => "select_filter",
            Operator::Aggregate => "aggregate",
            Operator::GroupBy => "group_by",
            Operator::Join => "join",
            Operator::Sort => "sort",
            Operator::SetOp => "set_op",
            Operator::Distinct => "distinct",
            Operator::LimitWithTies => "limit_with_ties",
            Operator::SampleRows => "sample_rows",
            Operator::Pca => "pca",
            Operator::DetectAnomalies => "detect_anomalies",
            Operator::PredictValue => "predict_value",
            Operator::Compute => "compute",
        }
    }

    pub fn from_name(name: &str) -> Result<Operator, OpError> {
        Operator::ALL
            .into_iter()
            .find(|op| op.name() == name)
            .ok_or_else(|| OpError::UnknownOperator(name.to_string()))
    }

    /// Number of input tables.
    pub fn arity(self) -> usize {
        match self {
            Operator::Join | Operator::SetOp => 2,
            _ => 1,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Operator::SelectFilter => "Keep rows matching a predicate and/or project columns in the given order.",
            Operator::Aggregate => "Whole-table aggregates (sum, mean, count, count_distinct, min, max); nulls are skipped. One output row.",
            Operator::GroupBy => "One row per distinct key tuple with aggregate columns named like count(*) or mean(col); optional ordering.",
            Operator::Join => "Equi-join of two tables (inner, left, right, full). Null keys never match; clashing right-side names get a _right suffix.",
            Operator::Sort => "Stable sort by one or more columns; nulls always last.",
            Operator::SetOp => "union, union_all, intersect or except of two tables with the same number of columns. All but union_all remove duplicates.",
            Operator::Distinct => "Remove duplicate rows, optionally after projecting to some columns.",
            Operator::LimitWithTies => "Top-n rows by sort keys, plus every row tied with the n-th. Use this instead of a plain limit for questions like 'which year had the most'.",
            Operator::SampleRows => "Random sample of n rows, deterministic for a seed.",
            Operator::Pca => "Principal component analysis of numeric columns. Output is the projected rows, the components or the explained variance.",
            Operator::DetectAnomalies => "Append is_anomaly: true where any listed column's z-score exceeds the threshold.",
            Operator::PredictValue => "Least-squares linear model of target on features with a seeded holdout split. Output is holdout predictions, metrics or coefficients.",
            Operator::Compute => "Append a column computed from an arithmetic expression over columns (+ - * / and parentheses).",
        }
    }

    pub fn arg_specs(self) -> Vec<ArgSpec> {
        const AGGS: &str = "list of {fn: sum|mean|count|count_distinct|min|max, column?: name or \"*\", mode?: strict|numeric, as?: name}";
        const KEYS: &str = "list of {column, order?: asc|desc, mode?: strict|numeric}";
        match self {
            Operator::SelectFilter => vec![
                arg("columns", "list of column names", false, "projection; all columns when absent"),
                arg("predicate", "predicate", false, "row condition; see the predicate grammar"),
            ],
            Operator::Aggregate => vec![arg("aggregates", AGGS, true, "aggregates to compute")],
            Operator::GroupBy => vec![
                arg("keys", "list of column names", true, "grouping columns"),
                arg("aggregates", AGGS, true, "per-group aggregates"),
                arg("order", KEYS, false, "ordering of the result"),
            ],
            Operator::Join => vec![
                arg("kind", "inner|left|right|full", false, "defaults to inner"),
                arg("left_on", "list of column names", true, "keys of the first child"),
                arg("right_on", "list of column names", true, "keys of the second child"),
            ],
            Operator::Sort => vec![arg("keys", KEYS, true, "sort keys, most significant first")],
            Operator::SetOp => vec![arg("kind", "union|union_all|intersect|except", true, "set operation")],
            Operator::Distinct => vec![arg("columns", "list of column names", false, "project first")],
            Operator::LimitWithTies => vec![
                arg("n", "integer >= 1", true, "rows to keep before ties"),
                arg("by", KEYS, true, "ranking keys"),
            ],
            Operator::SampleRows => vec![
                arg("n", "integer", true, "rows to draw"),
                arg("seed", "integer", false, "defaults to 0"),
            ],
            Operator::Pca => vec![
                arg("columns", "list of numeric columns", true, "analyzed columns"),
                arg("k", "integer", true, "number of components"),
                arg("output", "projected|components|explained_variance", false, "defaults to projected"),
            ],
            Operator::DetectAnomalies => vec![
                arg("columns", "list of numeric columns", true, "analyzed columns"),
                arg("method", "zscore", false, "only zscore"),
                arg("threshold", "number > 0", true, "z-score cutoff"),
            ],
            Operator::PredictValue => vec![
                arg("features", "list of numeric columns", true, "predictors"),
                arg("target", "numeric column", true, "value to predict"),
                arg("holdout_fraction", "number in [0, 1)", false, "defaults to 0.2"),
                arg("seed", "integer", false, "split seed, defaults to 0"),
                arg("output", "predictions|metrics|coefficients", false, "defaults to predictions"),
            ],
            Operator::Compute => vec![
                arg("name", "text", true, "new column name"),
                arg("expr", "arithmetic expression", true, "e.g. \"yield / area\""),
            ],
        }
    }

    fn parse<T: DeserializeOwned>(self, args: &serde_json::Value) -> Result<T, OpError> {
        let args = if args.is_null() {
            serde_json::Value::Object(Default::default())
        } else {
            args.clone()
        };
        serde_json::from_value(args).map_err(|e| OpError::BadArgs {
            op: self.name(),
            reason: e.to_string(),
        })
    }

    /// Runs the operator. `inputs.len()` must equal [`Operator::arity`].
    pub fn execute(self, args: &serde_json::Value, inputs: &[&Table]) -> Result<Table, OpError> {
        if inputs.len() != self.arity() {
            return Err(OpError::InputArity {
                op: self.name(),
                expected: self.arity(),
                got: inputs.len(),
            });
        }
        let t = inputs[0];
        match self {
            Operator::SelectFilter => {
                let a: SelectArgs = self.parse(args)?;
                select_filter(t, a.columns.as_deref(), a.predicate.as_ref())
            }
            Operator::Aggregate => {
                let a: AggregateArgs = self.parse(args)?;
                aggregate(t, &a.aggregates)
            }
            Operator::GroupBy => {
                let a: GroupArgs = self.parse(args)?;
                group_by(t, &a.keys, &a.aggregates, a.order.as_deref())
            }
            Operator::Join => {
                let a: JoinArgs = self.parse(args)?;
                join(
                    t,
                    inputs[1],
                    &JoinSpec {
                        kind: a.kind,
                        left_on: a.left_on,
                        right_on: a.right_on,
                    },
                )
            }
            Operator::Sort => {
                let a: SortArgs = self.parse(args)?;
                sort(t, &a.keys)
            }
            Operator::SetOp => {
                let a: SetOpArgs = self.parse(args)?;
                set_op(t, inputs[1], a.kind)
            }
            Operator::Distinct => {
                let a: DistinctArgs = self.parse(args)?;
                distinct(t, a.columns.as_deref())
            }
            Operator::LimitWithTies => {
                let a: LimitArgs = self.parse(args)?;
                limit_with_ties(t, a.n, &a.by)
            }
            Operator::SampleRows => {
                let a: SampleArgs = self.parse(args)?;
                Ok(sample_rows(t, a.n, a.seed))
            }
            Operator::Pca => {
                let a: PcaArgs = self.parse(args)?;
                let r = pca(t, &a.columns, a.k)?;
                Ok(match a.output {
                    PcaOutput::Projected => r.projected,
                    PcaOutput::Components => r.components,
                    PcaOutput::ExplainedVariance => r.variance_table(),
                })
            }
            Operator::DetectAnomalies => {
                let a: AnomalyArgs = self.parse(args)?;
                detect_anomalies(t, &a.columns, a.method, a.threshold)
            }
            Operator::PredictValue => {
                let a: PredictArgs = self.parse(args)?;
                let r = predict_value(t, &a.features, &a.target, a.holdout_fraction, a.seed)?;
                Ok(match a.output {
                    PredictOutput::Predictions => r.predictions,
                    PredictOutput::Metrics => r.metrics_table(),
                    PredictOutput::Coefficients => r.coefficient_table(&a.features),
                })
            }
            Operator::Compute => {
                let a: ComputeArgs = self.parse(args)?;
                compute(t, &a.name, &a.expr)
            }
        }
    }
}
