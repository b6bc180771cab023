use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize};

use super::predicate::Predicate;
use super::{resolve, resolve_all, Coercion, OpError};
use crate::table::{ColumnSpec, ColumnType, Row, Table, Value};

fn project_schema(t: &Table, idx: &[usize]) -> Vec<ColumnSpec> {
    idx.iter().map(|&i| t.schema()[i].clone()).collect()
}

fn check_distinct_names(names: &[String]) -> Result<(), OpError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(OpError::InvalidArgument(format!("column {n:?} requested twice")));
        }
    }
    Ok(())
}

/// Keeps rows where `pred` is true, then projects to `columns` in the
/// requested order. Row order is preserved.
pub fn select_filter(
    t: &Table,
    columns: Option<&[String]>,
    pred: Option<&Predicate>,
) -> Result<Table, OpError> {
    let proj: Vec<usize> = match columns {
        Some(cols) => {
            check_distinct_names(cols)?;
            resolve_all(t, cols)?
        }
        None => (0..t.num_columns()).collect(),
    };
    let bound = pred.map(|p| p.bind(t)).transpose()?;
    let rows = t
        .rows()
        .iter()
        .filter(|r| bound.as_ref().is_none_or(|p| p.matches(r)))
        .map(|r| proj.iter().map(|&i| r[i].clone()).collect())
        .collect();
    Ok(Table::derived(project_schema(t, &proj), rows)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggFn {
    Sum,
    #[serde(alias = "avg", alias = "average")]
    Mean,
    Count,
    CountDistinct,
    Min,
    Max,
}

impl AggFn {
    fn name(self) -> &'static str {
        match self {
            AggFn::Sum => "sum",
            AggFn::Mean => "mean",
            AggFn::Count => "count",
            AggFn::CountDistinct => "count_distinct",
            AggFn::Min => "min",
            AggFn::Max => "max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSpec {
    #[serde(alias = "fn")]
    pub function: AggFn,
    /// `None` (or `"*"`) counts whole rows; only valid for `count`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(default)]
    pub mode: Coercion,
    /// Output column name; defaults to `fn(column)`.
    #[serde(default, rename = "as", skip_serializing_if = "Option::is_none")]
    pub alias: Option<String>,
}

impl AggregateSpec {
    pub fn new(function: AggFn, column: &str) -> Self {
        AggregateSpec {
            function,
            column: Some(column.to_string()),
            mode: Coercion::Strict,
            alias: None,
        }
    }

    pub fn count_rows() -> Self {
        AggregateSpec {
            function: AggFn::Count,
            column: None,
            mode: Coercion::Strict,
            alias: None,
        }
    }

    pub fn numeric(mut self) -> Self {
        self.mode = Coercion::Numeric;
        self
    }

    fn target(&self) -> Option<&str> {
        self.column.as_deref().filter(|c| *c != "*")
    }

    pub fn output_name(&self) -> String {
        if let Some(a) = &self.alias {
            return a.clone();
        }
        format!("{}({})", self.function.name(), self.target().unwrap_or("*"))
    }
}

struct BoundAgg {
    function: AggFn,
    column: Option<usize>,
    mode: Coercion,
}

fn bind_aggs(t: &Table, specs: &[AggregateSpec]) -> Result<Vec<BoundAgg>, OpError> {
    if specs.is_empty() {
        return Err(OpError::InvalidArgument("at least one aggregate is required".into()));
    }
    specs
        .iter()
        .map(|s| {
            let column = s.target().map(|c| resolve(t, c)).transpose()?;
            let fname = s.function.name().to_string();
            match (s.function, column) {
                (AggFn::Count, _) => {}
                (_, None) => {
                    return Err(OpError::InvalidArgument(format!("{fname} needs a column")))
                }
                (AggFn::Sum | AggFn::Mean, Some(c)) if s.mode == Coercion::Strict => {
                    let col = &t.schema()[c];
                    let has_values = t.column_values(c).any(|v| !v.is_null());
                    if col.inferred_type != ColumnType::Number && has_values {
                        return Err(OpError::TypeError {
                            function: fname,
                            column: col.name.clone(),
                            reason: format!(
                                "column is {}; request numeric mode to parse text as numbers",
                                col.inferred_type
                            ),
                        });
                    }
                }
                _ => {}
            }
            Ok(BoundAgg {
                function: s.function,
                column,
                mode: s.mode,
            })
        })
        .collect()
}

fn eval_agg(agg: &BoundAgg, t: &Table, rows: &[usize]) -> Value {
    let Some(c) = agg.column else {
        // count(*)
        return Value::Number(rows.len() as f64);
    };
    let cells = rows.iter().map(|&r| &t.rows()[r][c]).filter(|v| !v.is_null());
    let numbers = || -> Vec<f64> {
        match agg.mode {
            Coercion::Strict => cells.clone().filter_map(Value::as_f64).collect(),
            Coercion::Numeric => cells.clone().filter_map(Value::coerce_f64).collect(),
        }
    };
    match agg.function {
        AggFn::Count => Value::Number(cells.count() as f64),
        AggFn::CountDistinct => {
            let n = match agg.mode {
                Coercion::Strict => cells.collect::<HashSet<_>>().len(),
                Coercion::Numeric => numbers()
                    .into_iter()
                    .map(|x| Value::Number(x))
                    .collect::<HashSet<_>>()
                    .len(),
            };
            Value::Number(n as f64)
        }
        AggFn::Sum | AggFn::Mean => {
            let xs = numbers();
            if xs.is_empty() {
                return Value::Null;
            }
            let mut sum = 0.0;
            for x in &xs {
                sum += x;
            }
            if agg.function == AggFn::Sum {
                Value::Number(sum)
            } else {
                Value::Number(sum / xs.len() as f64)
            }
        }
        AggFn::Min | AggFn::Max => {
            let pick = |a: Value, b: Value| {
                let keep_a = match agg.function {
                    AggFn::Min => a <= b,
                    _ => a >= b,
                };
                if keep_a {
                    a
                } else {
                    b
                }
            };
            match agg.mode {
                Coercion::Strict => cells.cloned().reduce(pick).unwrap_or(Value::Null),
                Coercion::Numeric => numbers().into_iter().map(Value::Number).reduce(pick).unwrap_or(Value::Null),
            }
        }
    }
}

fn agg_schema(specs: &[AggregateSpec]) -> Vec<ColumnSpec> {
    specs
        .iter()
        .map(|s| ColumnSpec::new(s.output_name(), ColumnType::Number))
        .collect()
}

/// Whole-table aggregation; always one output row.
pub fn aggregate(t: &Table, specs: &[AggregateSpec]) -> Result<Table, OpError> {
    let bound = bind_aggs(t, specs)?;
    let all: Vec<usize> = (0..t.num_rows()).collect();
    let row = bound.iter().map(|a| eval_agg(a, t, &all)).collect();
    let names: Vec<String> = specs.iter().map(AggregateSpec::output_name).collect();
    check_distinct_names(&names)?;
    Ok(Table::derived(agg_schema(specs), vec![row])?)
}

/// One row per distinct key tuple (nulls group together): key columns, then
/// aggregate columns. Without `order`, groups appear in order of first
/// appearance.
pub fn group_by(
    t: &Table,
    keys: &[String],
    specs: &[AggregateSpec],
    order: Option<&[SortKey]>,
) -> Result<Table, OpError> {
    if keys.is_empty() {
        return Err(OpError::InvalidArgument("group_by needs at least one key".into()));
    }
    check_distinct_names(keys)?;
    let key_idx = resolve_all(t, keys)?;
    let bound = bind_aggs(t, specs)?;

    let mut groups: IndexMap<Vec<&Value>, Vec<usize>> = IndexMap::new();
    for (r, row) in t.rows().iter().enumerate() {
        let key: Vec<&Value> = key_idx.iter().map(|&i| &row[i]).collect();
        groups.entry(key).or_default().push(r);
    }
    let rows: Vec<Row> = groups
        .iter()
        .map(|(key, members)| {
            key.iter()
                .map(|v| (*v).clone())
                .chain(bound.iter().map(|a| eval_agg(a, t, members)))
                .collect()
        })
        .collect();

    let mut schema = project_schema(t, &key_idx);
    schema.extend(agg_schema(specs));
    let names: Vec<String> = schema.iter().map(|c| c.name.clone()).collect();
    check_distinct_names(&names)?;
    let out = Table::derived(schema, rows)?;
    match order {
        Some(keys) if !keys.is_empty() => sort(&out, keys),
        _ => Ok(out),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinKind {
    #[default]
    Inner,
    Left,
    Right,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinSpec {
    #[serde(default)]
    pub kind: JoinKind,
    pub left_on: Vec<String>,
    pub right_on: Vec<String>,
}

impl JoinSpec {
    pub fn new(kind: JoinKind, left_on: &[&str], right_on: &[&str]) -> Self {
        JoinSpec {
            kind,
            left_on: left_on.iter().map(|s| s.to_string()).collect(),
            right_on: right_on.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Output column names for a join: left names unchanged, right names that
/// collide get `_right` (then `_right_2`, …).
fn join_names(a: &Table, b: &Table) -> Vec<String> {
    let mut names: Vec<String> = a.column_names().into_iter().map(String::from).collect();
    let mut taken: HashSet<String> = names.iter().cloned().collect();
    for n in b.column_names() {
        let mut name = n.to_string();
        if taken.contains(&name) {
            name = format!("{n}_right");
            let mut k = 2;
            while taken.contains(&name) {
                name = format!("{n}_right_{k}");
                k += 1;
            }
        }
        taken.insert(name.clone());
        names.push(name);
    }
    names
}

/// SQL equi-join. Null keys never match. Output rows follow the left
/// table's order, each left row's matches in right order; for `right` and
/// `full` joins the unmatched right rows follow at the end.
pub fn join(a: &Table, b: &Table, spec: &JoinSpec) -> Result<Table, OpError> {
    if spec.left_on.is_empty() || spec.left_on.len() != spec.right_on.len() {
        return Err(OpError::InvalidJoin(format!(
            "left_on and right_on must be non-empty and of equal length (got {} and {})",
            spec.left_on.len(),
            spec.right_on.len()
        )));
    }
    let lk = resolve_all(a, &spec.left_on).map_err(|e| OpError::InvalidJoin(format!("left side: {e}")))?;
    let rk = resolve_all(b, &spec.right_on).map_err(|e| OpError::InvalidJoin(format!("right side: {e}")))?;

    let mut index: HashMap<Vec<&Value>, Vec<usize>> = HashMap::new();
    for (j, row) in b.rows().iter().enumerate() {
        let key: Vec<&Value> = rk.iter().map(|&i| &row[i]).collect();
        if key.iter().any(|v| v.is_null()) {
            continue;
        }
        index.entry(key).or_default().push(j);
    }

    let keep_left = matches!(spec.kind, JoinKind::Left | JoinKind::Full);
    let keep_right = matches!(spec.kind, JoinKind::Right | JoinKind::Full);
    let left_nulls = vec![Value::Null; a.num_columns()];
    let right_nulls = vec![Value::Null; b.num_columns()];
    let mut right_matched = vec![false; b.num_rows()];
    let mut rows = Vec::new();

    for lrow in a.rows() {
        let key: Vec<&Value> = lk.iter().map(|&i| &lrow[i]).collect();
        let matches = if key.iter().any(|v| v.is_null()) {
            None
        } else {
            index.get(&key)
        };
        match matches {
            Some(js) => {
                for &j in js {
                    right_matched[j] = true;
                    rows.push(lrow.iter().chain(b.rows()[j].iter()).cloned().collect());
                }
            }
            None if keep_left => rows.push(lrow.iter().chain(right_nulls.iter()).cloned().collect()),
            None => {}
        }
    }
    if keep_right {
        for (j, rrow) in b.rows().iter().enumerate() {
            if !right_matched[j] {
                rows.push(left_nulls.iter().chain(rrow.iter()).cloned().collect());
            }
        }
    }

    let schema = a
        .schema()
        .iter()
        .chain(b.schema().iter())
        .zip(join_names(a, b))
        .map(|(c, name)| ColumnSpec { name, ..c.clone() })
        .collect();
    Ok(Table::derived(schema, rows)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SortKey {
    pub column: String,
    #[serde(default)]
    pub descending: bool,
    #[serde(default)]
    pub mode: Coercion,
}

impl SortKey {
    pub fn asc(column: &str) -> Self {
        SortKey {
            column: column.to_string(),
            descending: false,
            mode: Coercion::Strict,
        }
    }

    pub fn desc(column: &str) -> Self {
        SortKey {
            descending: true,
            ..SortKey::asc(column)
        }
    }

    pub fn numeric(mut self) -> Self {
        self.mode = Coercion::Numeric;
        self
    }
}

// Accepts either `"descending": true` or `"order": "desc"`.
impl<'de> Deserialize<'de> for SortKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            column: String,
            #[serde(default)]
            descending: Option<bool>,
            #[serde(default)]
            order: Option<String>,
            #[serde(default)]
            mode: Coercion,
        }
        let raw = Raw::deserialize(d)?;
        let descending = match (raw.descending, raw.order.as_deref()) {
            (Some(d), None) => d,
            (None, None) => false,
            (None, Some(o)) => match o.to_ascii_lowercase().as_str() {
                "asc" | "ascending" => false,
                "desc" | "descending" => true,
                other => {
                    return Err(serde::de::Error::custom(format!(
                        "order must be asc or desc, got {other:?}"
                    )))
                }
            },
            (Some(_), Some(_)) => {
                return Err(serde::de::Error::custom("give either descending or order, not both"))
            }
        };
        Ok(SortKey {
            column: raw.column,
            descending,
            mode: raw.mode,
        })
    }
}

struct BoundSortKey {
    col: usize,
    descending: bool,
    mode: Coercion,
}

fn bind_sort(t: &Table, keys: &[SortKey]) -> Result<Vec<BoundSortKey>, OpError> {
    keys.iter()
        .map(|k| {
            Ok(BoundSortKey {
                col: resolve(t, &k.column)?,
                descending: k.descending,
                mode: k.mode,
            })
        })
        .collect()
}

fn cmp_cells(a: &Value, b: &Value, key: &BoundSortKey) -> Ordering {
    let (a, b) = match key.mode {
        Coercion::Strict => (a.clone(), b.clone()),
        Coercion::Numeric => (
            a.coerce_f64().map_or(Value::Null, Value::Number),
            b.coerce_f64().map_or(Value::Null, Value::Number),
        ),
    };
    match (a.is_null(), b.is_null()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => {
            let o = a.cmp(&b);
            if key.descending {
                o.reverse()
            } else {
                o
            }
        }
    }
}

fn cmp_rows(a: &Row, b: &Row, keys: &[BoundSortKey]) -> Ordering {
    keys.iter()
        .map(|k| cmp_cells(&a[k.col], &b[k.col], k))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Stable multi-key sort; nulls last in either direction.
pub fn sort(t: &Table, keys: &[SortKey]) -> Result<Table, OpError> {
    let bound = bind_sort(t, keys)?;
    let mut rows = t.rows().to_vec();
    rows.sort_by(|a, b| cmp_rows(a, b, &bound));
    Ok(Table::derived(t.schema().to_vec(), rows)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetOpKind {
    Union,
    UnionAll,
    #[serde(alias = "intersection")]
    Intersect,
    #[serde(alias = "difference", alias = "minus")]
    Except,
}

fn compatible(a: &Table, b: &Table, i: usize) -> bool {
    let (ta, tb) = (a.schema()[i].inferred_type, b.schema()[i].inferred_type);
    ta == tb
        || ta == ColumnType::Mixed
        || tb == ColumnType::Mixed
        || a.column_values(i).all(Value::is_null)
        || b.column_values(i).all(Value::is_null)
}

fn dedup_rows<'a>(rows: impl Iterator<Item = &'a Row>) -> Vec<Row> {
    let mut seen: HashSet<&Row> = HashSet::new();
    rows.filter(|r| seen.insert(*r)).cloned().collect()
}

/// SQL set operations; the output takes the left table's column names.
pub fn set_op(a: &Table, b: &Table, kind: SetOpKind) -> Result<Table, OpError> {
    if a.num_columns() != b.num_columns() {
        return Err(OpError::ArityMismatch {
            left: a.num_columns(),
            right: b.num_columns(),
        });
    }
    for i in 0..a.num_columns() {
        if !compatible(a, b, i) {
            return Err(OpError::IncompatibleColumns {
                position: i,
                left: format!("{} ({})", a.schema()[i].name, a.schema()[i].inferred_type),
                right: format!("{} ({})", b.schema()[i].name, b.schema()[i].inferred_type),
            });
        }
    }
    let rows = match kind {
        SetOpKind::UnionAll => a.rows().iter().chain(b.rows()).cloned().collect(),
        SetOpKind::Union => dedup_rows(a.rows().iter().chain(b.rows())),
        SetOpKind::Intersect => {
            let right: HashSet<&Row> = b.rows().iter().collect();
            dedup_rows(a.rows().iter().filter(|r| right.contains(r)))
        }
        SetOpKind::Except => {
            let right: HashSet<&Row> = b.rows().iter().collect();
            dedup_rows(a.rows().iter().filter(|r| !right.contains(r)))
        }
    };
    Ok(Table::derived(a.schema().to_vec(), rows)?)
}

/// Removes duplicate rows, keeping first occurrences. With `columns`, the
/// table is projected first.
pub fn distinct(t: &Table, columns: Option<&[String]>) -> Result<Table, OpError> {
    let projected;
    let src = match columns {
        Some(cols) => {
            projected = select_filter(t, Some(cols), None)?;
            &projected
        }
        None => t,
    };
    let rows = dedup_rows(src.rows().iter());
    Ok(Table::derived(src.schema().to_vec(), rows)?)
}

/// Top-`n` by `by`, extended with every following row whose sort key equals
/// the `n`-th row's key.
pub fn limit_with_ties(t: &Table, n: usize, by: &[SortKey]) -> Result<Table, OpError> {
    if n == 0 {
        return Err(OpError::InvalidArgument("n must be at least 1".into()));
    }
    if by.is_empty() {
        return Err(OpError::InvalidArgument("limit_with_ties needs sort keys".into()));
    }
    let bound = bind_sort(t, by)?;
    let sorted = sort(t, by)?;
    let rows = sorted.rows();
    let mut end = n.min(rows.len());
    if end > 0 {
        let last = &rows[end - 1];
        while end < rows.len() && cmp_rows(&rows[end], last, &bound).is_eq() {
            end += 1;
        }
    }
    Ok(Table::derived(t.schema().to_vec(), rows[..end].to_vec())?)
}
