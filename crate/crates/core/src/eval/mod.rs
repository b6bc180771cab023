//! Scoring: exact match of result tables and the percentage-error rule
//! for numeric answers, plus the suite runner and its report.

mod suite;

use crate::table::{Table, Value};

pub use self::suite::{
    load_manifest, run_case, run_suite, Bucket, CaseOutcome, CaseRecord, EvalError, EvalReport, Hardness, Kind,
    Manifest, Outcome, QueryCase, Runner, Truth,
};

pub const REL_TOL: f64 = 1e-9;
pub const ABS_TOL: f64 = 1e-12;
/// A numeric prediction is correct when its percentage error is at most this.
pub const PCT_THRESHOLD: f64 = 10.0;
/// Relative slack on the threshold so that `pred = 1.1 * truth`, which is
/// rarely exact in binary floating point, still lands on the correct side.
pub const PCT_BOUNDARY_SLACK: f64 = 1e-9;

pub fn numbers_close(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    let diff = (a - b).abs();
    diff <= ABS_TOL || diff <= REL_TOL * a.abs().max(b.abs())
}

/// Cell equality for scoring. Numbers compare with tolerance; a number and
/// a text cell holding a number compare numerically; everything else
/// compares by rendered form.
pub fn cells_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Null, Value::Null) => true,
        (Value::Null, _) | (_, Value::Null) => false,
        (Value::Number(x), Value::Number(y)) => numbers_close(*x, *y),
        (Value::Number(x), other) | (other, Value::Number(x)) => match other.coerce_f64() {
            Some(y) => numbers_close(*x, y),
            None => false,
        },
        _ => a.render() == b.render(),
    }
}

fn rows_equal(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| cells_equal(x, y))
}

/// Multiset equality under `cells_equal`: sorted pairwise first, then a
/// greedy pairing when tolerance blurs the sort order.
fn multiset_equal(a: &[Vec<Value>], b: &[Vec<Value>]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut sa: Vec<&Vec<Value>> = a.iter().collect();
    let mut sb: Vec<&Vec<Value>> = b.iter().collect();
    sa.sort();
    sb.sort();
    if sa.iter().zip(&sb).all(|(x, y)| rows_equal(x, y)) {
        return true;
    }
    let mut used = vec![false; sb.len()];
    'outer: for x in &sa {
        for (j, y) in sb.iter().enumerate() {
            if !used[j] && rows_equal(x, y) {
                used[j] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn project(t: &Table, order: &[usize]) -> Vec<Vec<Value>> {
    t.rows()
        .iter()
        .map(|r| order.iter().map(|&c| r[c].clone()).collect())
        .collect()
}

fn column(t: &Table, c: usize) -> Vec<Vec<Value>> {
    t.column_values(c).map(|v| vec![v.clone()]).collect()
}

fn rows_match(result: &[Vec<Value>], truth: &[Vec<Value>], order_sensitive: bool) -> bool {
    if order_sensitive {
        result.len() == truth.len() && result.iter().zip(truth).all(|(a, b)| rows_equal(a, b))
    } else {
        multiset_equal(result, truth)
    }
}

/// Search for a column assignment `truth col -> result col` under which
/// the rows match. Candidates are limited to columns whose own values agree.
fn assign(
    k: usize,
    candidates: &[Vec<usize>],
    used: &mut [bool],
    order: &mut Vec<usize>,
    check: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if k == candidates.len() {
        return check(order);
    }
    for &c in &candidates[k] {
        if used[c] {
            continue;
        }
        used[c] = true;
        order.push(c);
        if assign(k + 1, candidates, used, order, check) {
            return true;
        }
        order.pop();
        used[c] = false;
    }
    false
}

/// True iff the two tables have the same arity and their rows match, as
/// sequences when `order_sensitive` and as multisets otherwise. Column
/// names are ignored and columns may appear in any order.
pub fn exact_match(result: &Table, truth: &Table, order_sensitive: bool) -> bool {
    let n = truth.num_columns();
    if result.num_columns() != n || result.num_rows() != truth.num_rows() {
        return false;
    }
    let identity: Vec<usize> = (0..n).collect();
    let truth_rows = project(truth, &identity);
    if rows_match(&project(result, &identity), &truth_rows, order_sensitive) {
        return true;
    }
    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|tc| {
            let want = column(truth, tc);
            (0..n)
                .filter(|&rc| rows_match(&column(result, rc), &want, order_sensitive))
                .collect()
        })
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return false;
    }
    let mut check = |order: &[usize]| rows_match(&project(result, order), &truth_rows, order_sensitive);
    assign(0, &candidates, &mut vec![false; n], &mut Vec::with_capacity(n), &mut check)
}

/// `|pred - truth| / |truth| * 100`. `None` when `truth` is zero.
pub fn percentage_error(pred: f64, truth: f64) -> Option<f64> {
    if truth == 0.0 {
        return None;
    }
    Some((pred - truth).abs() / truth.abs() * 100.0)
}

pub fn within_threshold(pct: f64) -> bool {
    pct <= PCT_THRESHOLD * (1.0 + PCT_BOUNDARY_SLACK)
}
