//! Randomized differential suite: each relational operator against the
//! naive reference in `naive.rs`, on small generated tables.

use planql::operators::{
    aggregate, distinct, group_by, join, limit_with_ties, select_filter, set_op, sort, AggFn, AggregateSpec, CmpOp,
    Coercion, Comparison, JoinKind, JoinSpec, OpError, Operand, Predicate, SetOpKind, SortKey,
};
use planql::table::{Table, Value};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::naive::{self, Agg, Key, Op, Pred, Rows, SetKind};

pub const MAX_ROWS: usize = 50;
pub const MAX_COLS: usize = 6;

pub const OPERATORS: [&str; 8] = [
    "select_filter",
    "aggregate",
    "group_by",
    "join",
    "sort",
    "set_op",
    "distinct",
    "limit_with_ties",
];

#[derive(Debug)]
pub struct SuiteReport {
    pub operator: &'static str,
    pub compared: usize,
    pub mismatches: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self, min: usize) -> bool {
        self.compared >= min && self.mismatches.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Int,
    Text,
    Bool,
    Mixed,
}

const TEXTS: [&str; 12] = ["a", "b", "ab", "ba", "abc", "B", "1", "2.5", "-3", "x1", " 4", "10"];
const PATTERNS: [&str; 7] = ["a%", "%b", "_", "a_", "%", "%a%", "1%"];

fn number(rng: &mut ChaCha8Rng) -> Value {
    let n = rng.random_range(-3..=6) as f64;
    if rng.random_bool(0.2) {
        Value::Number(n + 0.5)
    } else {
        Value::Number(n)
    }
}

fn cell(rng: &mut ChaCha8Rng, kind: Kind) -> Value {
    if rng.random_bool(0.15) {
        return Value::Null;
    }
    let kind = match kind {
        Kind::Mixed => *[Kind::Int, Kind::Text, Kind::Bool].choose(rng).unwrap(),
        k => k,
    };
    match kind {
        Kind::Int => number(rng),
        Kind::Text => Value::text(*TEXTS.choose(rng).unwrap()),
        Kind::Bool => Value::Bool(rng.random_bool(0.5)),
        Kind::Mixed => unreachable!(),
    }
}

fn kinds(rng: &mut ChaCha8Rng, n: usize) -> Vec<Kind> {
    (0..n)
        .map(|_| match rng.random_range(0..10) {
            0..=3 => Kind::Int,
            4..=6 => Kind::Text,
            7 => Kind::Bool,
            _ => Kind::Mixed,
        })
        .collect()
}

fn rows_of(rng: &mut ChaCha8Rng, kinds: &[Kind], max_rows: usize) -> Rows {
    let n = rng.random_range(0..=max_rows);
    (0..n).map(|_| kinds.iter().map(|k| cell(rng, *k)).collect()).collect()
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn table(cols: &[String], rows: &Rows) -> Table {
    Table::from_rows("t", cols, rows.clone()).expect("generated table is well formed")
}

fn literal(rng: &mut ChaCha8Rng) -> Value {
    match rng.random_range(0..3) {
        0 => number(rng),
        1 => Value::text(*TEXTS.choose(rng).unwrap()),
        _ => Value::Bool(rng.random_bool(0.5)),
    }
}

const CMP: [(Op, CmpOp); 6] = [
    (Op::Eq, CmpOp::Eq),
    (Op::Ne, CmpOp::Ne),
    (Op::Lt, CmpOp::Lt),
    (Op::Le, CmpOp::Le),
    (Op::Gt, CmpOp::Gt),
    (Op::Ge, CmpOp::Ge),
];

fn mode(numeric: bool) -> Coercion {
    if numeric {
        Coercion::Numeric
    } else {
        Coercion::Strict
    }
}

fn predicate(rng: &mut ChaCha8Rng, cols: &[String], depth: usize) -> (Predicate, Pred) {
    let w = cols.len();
    let choice = if depth == 0 { rng.random_range(0..5) } else { rng.random_range(0..8) };
    match choice {
        0 | 1 => {
            let c = rng.random_range(0..w);
            let (op, cop) = *CMP.choose(rng).unwrap();
            let numeric = rng.random_bool(0.4);
            let v = literal(rng);
            let lib = Predicate::Compare(Comparison {
                left: Operand::Column(cols[c].clone()),
                op: cop,
                right: Operand::Value(v.clone()),
                mode: mode(numeric),
            });
            (lib, Pred::Cmp(c, op, v, numeric))
        }
        2 => {
            let (a, b) = (rng.random_range(0..w), rng.random_range(0..w));
            let (op, cop) = *CMP.choose(rng).unwrap();
            let numeric = rng.random_bool(0.4);
            let lib = Predicate::Compare(Comparison {
                left: Operand::Column(cols[a].clone()),
                op: cop,
                right: Operand::Column(cols[b].clone()),
                mode: mode(numeric),
            });
            (lib, Pred::ColCmp(a, op, b, numeric))
        }
        3 => {
            let c = rng.random_range(0..w);
            let pat = PATTERNS.choose(rng).unwrap().to_string();
            let lib = Predicate::Like {
                column: cols[c].clone(),
                pattern: pat.clone(),
                negated: false,
                ignore_case: false,
            };
            (lib, Pred::Like(c, pat))
        }
        4 => {
            let c = rng.random_range(0..w);
            if rng.random_bool(0.5) {
                let vals: Vec<Value> = (0..rng.random_range(1..=3)).map(|_| literal(rng)).collect();
                let lib = Predicate::In {
                    column: cols[c].clone(),
                    values: vals.clone(),
                    mode: Coercion::Strict,
                    negated: false,
                };
                (lib, Pred::In(c, vals))
            } else if rng.random_bool(0.5) {
                (Predicate::IsNull { column: cols[c].clone() }, Pred::IsNull(c, false))
            } else {
                (Predicate::IsNotNull { column: cols[c].clone() }, Pred::IsNull(c, true))
            }
        }
        5 => {
            let (lib, n) = predicate(rng, cols, depth - 1);
            (Predicate::Not(Box::new(lib)), Pred::Not(Box::new(n)))
        }
        _ => {
            let k = rng.random_range(2..=3);
            let (libs, ns): (Vec<_>, Vec<_>) = (0..k).map(|_| predicate(rng, cols, depth - 1)).unzip();
            if choice == 6 {
                (Predicate::And(libs), Pred::And(ns))
            } else {
                (Predicate::Or(libs), Pred::Or(ns))
            }
        }
    }
}

const AGGS: [(Agg, AggFn); 6] = [
    (Agg::Count, AggFn::Count),
    (Agg::CountDistinct, AggFn::CountDistinct),
    (Agg::Sum, AggFn::Sum),
    (Agg::Mean, AggFn::Mean),
    (Agg::Min, AggFn::Min),
    (Agg::Max, AggFn::Max),
];

/// Aggregate specs with distinct output names. Strict sum/mean are only
/// drawn for columns generated as numbers.
fn agg_specs(rng: &mut ChaCha8Rng, cols: &[String], kinds: &[Kind]) -> (Vec<AggregateSpec>, Vec<(Agg, usize, bool)>) {
    let mut lib: Vec<AggregateSpec> = Vec::new();
    let mut oracle = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        if rng.random_bool(0.15) {
            if lib.iter().all(|s| s.column.is_some()) {
                lib.push(AggregateSpec::count_rows());
                oracle.push((Agg::CountRows, 0, false));
            }
            continue;
        }
        let c = rng.random_range(0..cols.len());
        let (f, lf) = *AGGS.choose(rng).unwrap();
        let mut numeric = rng.random_bool(0.4);
        if matches!(f, Agg::Sum | Agg::Mean) && !matches!(kinds[c], Kind::Int) {
            numeric = true;
        }
        let mut spec = AggregateSpec::new(lf, &cols[c]);
        if numeric {
            spec = spec.numeric();
            spec.alias = Some(format!("{}_n", spec.output_name()));
        }
        if lib.iter().any(|s| s.output_name() == spec.output_name()) {
            continue;
        }
        lib.push(spec);
        oracle.push((f, c, numeric));
    }
    if lib.is_empty() {
        lib.push(AggregateSpec::count_rows());
        oracle.push((Agg::CountRows, 0, false));
    }
    (lib, oracle)
}

fn sort_keys(rng: &mut ChaCha8Rng, cols: &[String]) -> (Vec<SortKey>, Vec<Key>) {
    let mut idx: Vec<usize> = (0..cols.len()).collect();
    let mut lib = Vec::new();
    let mut oracle = Vec::new();
    for _ in 0..rng.random_range(1..=cols.len().min(3)) {
        let c = idx.remove(rng.random_range(0..idx.len()));
        let desc = rng.random_bool(0.5);
        let numeric = rng.random_bool(0.3);
        let mut k = if desc { SortKey::desc(&cols[c]) } else { SortKey::asc(&cols[c]) };
        if numeric {
            k = k.numeric();
        }
        lib.push(k);
        oracle.push(Key { col: c, desc, numeric });
    }
    (lib, oracle)
}

fn subset(rng: &mut ChaCha8Rng, w: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w).collect();
    let k = rng.random_range(1..=w);
    let mut out = Vec::new();
    for _ in 0..k {
        out.push(idx.remove(rng.random_range(0..idx.len())));
    }
    out
}

fn pick(cols: &[String], idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| cols[i].clone()).collect()
}

fn rows_equal(got: &Table, want: &Rows) -> bool {
    got.rows().len() == want.len() && got.rows().iter().zip(want).all(|(g, w)| naive::same_row(g, w))
}

fn describe(op: &str, seed: u64, got: &Result<Table, OpError>, want: &Rows) -> String {
    let got = match got {
        Ok(t) => format!("{:?}", t.rows()),
        Err(e) => format!("error: {e}"),
    };
    format!("{op} (instance seed {seed}): got {got}, want {want:?}")
}

/// Whether every column pair carries a common inferred type, mirroring the
/// compatibility rule set operations enforce.
fn union_compatible(a: &Rows, b: &Rows, w: usize) -> bool {
    let tags = |rows: &Rows, c: usize| -> Vec<u8> {
        let mut t: Vec<u8> = rows
            .iter()
            .filter_map(|r| match &r[c] {
                Value::Null => None,
                Value::Bool(_) => Some(0),
                Value::Number(_) => Some(1),
                Value::Text(_) => Some(2),
            })
            .collect();
        t.sort();
        t.dedup();
        t
    };
    (0..w).all(|c| {
        let (ta, tb) = (tags(a, c), tags(b, c));
        ta.is_empty() || tb.is_empty() || ta.len() > 1 || tb.len() > 1 || ta == tb
    })
}

/// Runs `instances` compared cases per operator.
pub fn run_operator_suite(instances: usize, seed: u64) -> Vec<SuiteReport> {
    OPERATORS
        .iter()
        .enumerate()
        .map(|(k, op)| run_one(op, instances, seed.wrapping_mul(31).wrapping_add(k as u64)))
        .collect()
}

fn run_one(op: &'static str, instances: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport {
        operator: op,
        compared: 0,
        mismatches: Vec::new(),
    };
    let mut attempt = 0u64;
    while report.compared < instances {
        attempt += 1;
        assert!(attempt < instances as u64 * 20, "{op}: too many skipped instances");
        let inst_seed = seed.wrapping_mul(1_000_003).wrapping_add(attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(inst_seed);
        let w = rng.random_range(1..=MAX_COLS);
        let ks = kinds(&mut rng, w);
        let cols = names("c", w);
        let rows = rows_of(&mut rng, &ks, MAX_ROWS);
        let t = table(&cols, &rows);

        let (got, want): (Result<Table, OpError>, Rows) = match op {
            "select_filter" => {
                let proj = rng.random_bool(0.5).then(|| subset(&mut rng, w));
                let pred = rng.random_bool(0.9).then(|| predicate(&mut rng, &cols, 2));
                let lib_cols = proj.as_ref().map(|p| pick(&cols, p));
                let got = select_filter(&t, lib_cols.as_deref(), pred.as_ref().map(|p| &p.0));
                (got, naive::select(&rows, proj.as_deref(), pred.as_ref().map(|p| &p.1)))
            }
            "aggregate" => {
                let (lib, oracle) = agg_specs(&mut rng, &cols, &ks);
                (aggregate(&t, &lib), naive::aggregate(&rows, &oracle))
            }
            "group_by" => {
                let keys = subset(&mut rng, w);
                let keys = &keys[..keys.len().min(2)];
                let (lib, oracle) = agg_specs(&mut rng, &cols, &ks);
                let got = group_by(&t, &pick(&cols, keys), &lib, None);
                (got, naive::group_by(&rows, keys, &oracle))
            }
            "join" => {
                let wb = rng.random_range(1..=MAX_COLS);
                let kb = kinds(&mut rng, wb);
                let cols_b = if rng.random_bool(0.5) { names("c", wb) } else { names("d", wb) };
                let rows_b = rows_of(&mut rng, &kb, MAX_ROWS);
                let tb = table(&cols_b, &rows_b);
                let nk = rng.random_range(1..=w.min(wb).min(2));
                let lk: Vec<usize> = subset(&mut rng, w).into_iter().chain(0..w).take(nk).collect();
                let rk: Vec<usize> = (0..nk).map(|_| rng.random_range(0..wb)).collect();
                let (kind, nkind) = *[
                    (JoinKind::Inner, naive::JoinKind::Inner),
                    (JoinKind::Left, naive::JoinKind::Left),
                    (JoinKind::Right, naive::JoinKind::Right),
                    (JoinKind::Full, naive::JoinKind::Full),
                ]
                .choose(&mut rng)
                .unwrap();
                let spec = JoinSpec {
                    kind,
                    left_on: pick(&cols, &lk),
                    right_on: pick(&cols_b, &rk),
                };
                (join(&t, &tb, &spec), naive::join(&rows, &rows_b, w, wb, &lk, &rk, nkind))
            }
            "sort" => {
                let (lib, oracle) = sort_keys(&mut rng, &cols);
                (sort(&t, &lib), naive::sort(&rows, &oracle))
            }
            "set_op" => {
                let rows_b = rows_of(&mut rng, &ks, MAX_ROWS);
                let tb = table(&names("e", w), &rows_b);
                let (kind, nkind) = *[
                    (SetOpKind::Union, SetKind::Union),
                    (SetOpKind::UnionAll, SetKind::UnionAll),
                    (SetOpKind::Intersect, SetKind::Intersect),
                    (SetOpKind::Except, SetKind::Except),
                ]
                .choose(&mut rng)
                .unwrap();
                let got = set_op(&t, &tb, kind);
                if !union_compatible(&rows, &rows_b, w) {
                    if !matches!(got, Err(OpError::IncompatibleColumns { .. })) {
                        report
                            .mismatches
                            .push(format!("set_op (instance seed {inst_seed}): accepted incompatible inputs"));
                    }
                    continue;
                }
                (got, naive::set_op(&rows, &rows_b, nkind))
            }
            "distinct" => {
                let proj = rng.random_bool(0.5).then(|| subset(&mut rng, w));
                let lib_cols = proj.as_ref().map(|p| pick(&cols, p));
                let projected = naive::select(&rows, proj.as_deref(), None);
                (distinct(&t, lib_cols.as_deref()), naive::distinct(&projected))
            }
            "limit_with_ties" => {
                let n = rng.random_range(1..=10);
                let (lib, oracle) = sort_keys(&mut rng, &cols);
                (limit_with_ties(&t, n, &lib), naive::limit_with_ties(&rows, n, &oracle))
            }
            other => panic!("unknown operator {other}"),
        };
        report.compared += 1;
        let ok = matches!(&got, Ok(g) if rows_equal(g, &want));
        if !ok {
            report.mismatches.push(describe(op, inst_seed, &got, &want));
        }
    }
    report
}
