//! Naive relational reference: nested loops, linear scans, insertion sort.
//! Cells use the library's `Value` type only as a carrier; every comparison
//! below is re-derived from SQL semantics.

use std::cmp::Ordering;

use planql::table::Value;

pub type Rows = Vec<Vec<Value>>;

fn rank(v: &Value) -> u8 {
    match v {
        Value::Bool(_) => 0,
        Value::Number(_) => 1,
        Value::Text(_) => 2,
        Value::Null => 3,
    }
}

/// Bool < Number < Text < Null; within a type the natural order.
pub fn total(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        (Value::Number(x), Value::Number(y)) => x.partial_cmp(y).expect("no NaN in oracle inputs"),
        (Value::Text(x), Value::Text(y)) => x.as_bytes().cmp(y.as_bytes()),
        _ => rank(a).cmp(&rank(b)),
    }
}

pub fn same(a: &Value, b: &Value) -> bool {
    total(a, b) == Ordering::Equal
}

pub fn same_row(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same(x, y))
}

pub fn to_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => Some(*n),
        Value::Text(s) => {
            let s = s.trim();
            let ok = !s.is_empty()
                && s.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '-')
                && s.chars().any(|c| c.is_ascii_digit());
            if ok {
                s.parse().ok()
            } else {
                None
            }
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Op {
    pub const ALL: [Op; 6] = [Op::Eq, Op::Ne, Op::Lt, Op::Le, Op::Gt, Op::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Eq => "=",
            Op::Ne => "!=",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
        }
    }

    fn holds(self, o: Ordering) -> bool {
        match self {
            Op::Eq => o == Ordering::Equal,
            Op::Ne => o != Ordering::Equal,
            Op::Lt => o == Ordering::Less,
            Op::Le => o != Ordering::Greater,
            Op::Gt => o == Ordering::Greater,
            Op::Ge => o != Ordering::Less,
        }
    }
}

/// SQL three-valued comparison. `None` is unknown.
pub fn cmp3(a: &Value, op: Op, b: &Value, numeric: bool) -> Option<bool> {
    if a.is_null() || b.is_null() {
        return None;
    }
    if numeric {
        let (x, y) = (to_number(a)?, to_number(b)?);
        return Some(op.holds(x.partial_cmp(&y).unwrap()));
    }
    if rank(a) != rank(b) {
        return match op {
            Op::Eq => Some(false),
            Op::Ne => Some(true),
            _ => None,
        };
    }
    Some(op.holds(total(a, b)))
}

fn like(text: &[char], pat: &[char]) -> bool {
    match pat.split_first() {
        None => text.is_empty(),
        Some(('%', rest)) => (0..=text.len()).any(|i| like(&text[i..], rest)),
        Some(('_', rest)) => !text.is_empty() && like(&text[1..], rest),
        Some((c, rest)) => text.first() == Some(c) && like(&text[1..], rest),
    }
}

#[derive(Debug, Clone)]
pub enum Pred {
    Cmp(usize, Op, Value, bool),
    ColCmp(usize, Op, usize, bool),
    Like(usize, String),
    In(usize, Vec<Value>),
    IsNull(usize, bool),
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Not(Box<Pred>),
}

fn render(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.fract() == 0.0 && n.abs() < 1e15 => format!("{}", *n as i64),
        Value::Number(n) => format!("{n}"),
        Value::Text(s) => s.clone(),
    }
}

pub fn eval(p: &Pred, row: &[Value]) -> Option<bool> {
    match p {
        Pred::Cmp(c, op, v, numeric) => cmp3(&row[*c], *op, v, *numeric),
        Pred::ColCmp(a, op, b, numeric) => cmp3(&row[*a], *op, &row[*b], *numeric),
        Pred::Like(c, pat) => {
            if row[*c].is_null() {
                return None;
            }
            let text: Vec<char> = render(&row[*c]).chars().collect();
            let pat: Vec<char> = pat.chars().collect();
            Some(like(&text, &pat))
        }
        Pred::In(c, vals) => {
            // x IN (a, b) == (x = a) OR (x = b)
            let parts: Vec<Pred> = vals.iter().map(|v| Pred::Cmp(*c, Op::Eq, v.clone(), false)).collect();
            eval(&Pred::Or(parts), row)
        }
        Pred::IsNull(c, negated) => Some(row[*c].is_null() != *negated),
        Pred::And(ps) => ps.iter().fold(Some(true), |acc, p| match (acc, eval(p, row)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        }),
        Pred::Or(ps) => ps.iter().fold(Some(false), |acc, p| match (acc, eval(p, row)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        }),
        Pred::Not(p) => eval(p, row).map(|b| !b),
    }
}

pub fn select(rows: &Rows, cols: Option<&[usize]>, pred: Option<&Pred>) -> Rows {
    let mut out = Vec::new();
    for r in rows {
        if let Some(p) = pred {
            if eval(p, r) != Some(true) {
                continue;
            }
        }
        out.push(match cols {
            Some(cs) => cs.iter().map(|&c| r[c].clone()).collect(),
            None => r.clone(),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agg {
    CountRows,
    Count,
    CountDistinct,
    Sum,
    Mean,
    Min,
    Max,
}

pub fn agg(rows: &[&Vec<Value>], f: Agg, col: usize, numeric: bool) -> Value {
    if f == Agg::CountRows {
        return Value::Number(rows.len() as f64);
    }
    let cells: Vec<&Value> = rows.iter().map(|r| &r[col]).filter(|v| !v.is_null()).collect();
    let nums: Vec<f64> = cells
        .iter()
        .filter_map(|v| if numeric { to_number(v) } else { v.as_f64() })
        .collect();
    match f {
        Agg::CountRows => unreachable!(),
        Agg::Count => Value::Number(cells.len() as f64),
        Agg::CountDistinct => {
            let mut seen: Vec<Value> = Vec::new();
            let vals: Vec<Value> = if numeric {
                nums.iter().map(|x| Value::Number(*x)).collect()
            } else {
                cells.iter().map(|v| (*v).clone()).collect()
            };
            for v in vals {
                if !seen.iter().any(|s| same(s, &v)) {
                    seen.push(v);
                }
            }
            Value::Number(seen.len() as f64)
        }
        Agg::Sum | Agg::Mean => {
            if nums.is_empty() {
                return Value::Null;
            }
            let mut s = 0.0;
            for x in &nums {
                s += x;
            }
            if f == Agg::Sum {
                Value::Number(s)
            } else {
                Value::Number(s / nums.len() as f64)
            }
        }
        Agg::Min | Agg::Max => {
            let vals: Vec<Value> = if numeric {
                nums.iter().map(|x| Value::Number(*x)).collect()
            } else {
                cells.iter().map(|v| (*v).clone()).collect()
            };
            let mut best: Option<Value> = None;
            for v in vals {
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        let o = total(&v, &b);
                        let better = if f == Agg::Min { o == Ordering::Less } else { o == Ordering::Greater };
                        if better {
                            v
                        } else {
                            b
                        }
                    }
                });
            }
            best.unwrap_or(Value::Null)
        }
    }
}

pub fn aggregate(rows: &Rows, specs: &[(Agg, usize, bool)]) -> Rows {
    let all: Vec<&Vec<Value>> = rows.iter().collect();
    vec![specs.iter().map(|&(f, c, n)| agg(&all, f, c, n)).collect()]
}

pub fn group_by(rows: &Rows, keys: &[usize], specs: &[(Agg, usize, bool)]) -> Rows {
    let mut groups: Vec<(Vec<Value>, Vec<&Vec<Value>>)> = Vec::new();
    for r in rows {
        let k: Vec<Value> = keys.iter().map(|&c| r[c].clone()).collect();
        match groups.iter_mut().find(|(gk, _)| same_row(gk, &k)) {
            Some((_, members)) => members.push(r),
            None => groups.push((k, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(k, members)| {
            let mut out = k;
            out.extend(specs.iter().map(|&(f, c, n)| agg(&members, f, c, n)));
            out
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinKind {
    Inner,
    Left,
    Right,
    Full,
}

fn keys_match(l: &[Value], r: &[Value], lk: &[usize], rk: &[usize]) -> bool {
    lk.iter().zip(rk).all(|(&a, &b)| {
        let (x, y) = (&l[a], &r[b]);
        !x.is_null() && !y.is_null() && rank(x) == rank(y) && same(x, y)
    })
}

pub fn join(a: &Rows, b: &Rows, wa: usize, wb: usize, lk: &[usize], rk: &[usize], kind: JoinKind) -> Rows {
    let mut out = Vec::new();
    let mut right_used = vec![false; b.len()];
    for l in a {
        let mut matched = false;
        for (j, r) in b.iter().enumerate() {
            if keys_match(l, r, lk, rk) {
                matched = true;
                right_used[j] = true;
                out.push(l.iter().chain(r.iter()).cloned().collect());
            }
        }
        if !matched && matches!(kind, JoinKind::Left | JoinKind::Full) {
            out.push(l.iter().cloned().chain(std::iter::repeat(Value::Null).take(wb)).collect());
        }
    }
    if matches!(kind, JoinKind::Right | JoinKind::Full) {
        for (j, r) in b.iter().enumerate() {
            if !right_used[j] {
                out.push(std::iter::repeat(Value::Null).take(wa).chain(r.iter().cloned()).collect());
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub col: usize,
    pub desc: bool,
    pub numeric: bool,
}

fn key_cmp(a: &[Value], b: &[Value], keys: &[Key]) -> Ordering {
    for k in keys {
        let conv = |v: &Value| if k.numeric { to_number(v).map_or(Value::Null, Value::Number) } else { v.clone() };
        let (x, y) = (conv(&a[k.col]), conv(&b[k.col]));
        let o = match (x.is_null(), y.is_null()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            _ if k.desc => total(&y, &x),
            _ => total(&x, &y),
        };
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Stable insertion sort.
pub fn sort(rows: &Rows, keys: &[Key]) -> Rows {
    let mut out: Rows = Vec::with_capacity(rows.len());
    for r in rows {
        let pos = out
            .iter()
            .position(|o| key_cmp(r, o, keys) == Ordering::Less)
            .unwrap_or(out.len());
        out.insert(pos, r.clone());
    }
    out
}

fn contains(rows: &[Vec<Value>], r: &[Value]) -> bool {
    rows.iter().any(|x| same_row(x, r))
}

pub fn distinct(rows: &Rows) -> Rows {
    let mut out: Rows = Vec::new();
    for r in rows {
        if !contains(&out, r) {
            out.push(r.clone());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    Union,
    UnionAll,
    Intersect,
    Except,
}

pub fn set_op(a: &Rows, b: &Rows, kind: SetKind) -> Rows {
    match kind {
        SetKind::UnionAll => a.iter().chain(b).cloned().collect(),
        SetKind::Union => distinct(&a.iter().chain(b).cloned().collect()),
        SetKind::Intersect => distinct(&a.iter().filter(|r| contains(b, r)).cloned().collect()),
        SetKind::Except => distinct(&a.iter().filter(|r| !contains(b, r)).cloned().collect()),
    }
}

pub fn limit_with_ties(rows: &Rows, n: usize, keys: &[Key]) -> Rows {
    let sorted = sort(rows, keys);
    if sorted.len() <= n {
        return sorted;
    }
    let boundary = sorted[n - 1].clone();
    sorted
        .into_iter()
        .enumerate()
        .take_while(|(i, r)| *i < n || key_cmp(r, &boundary, keys) == Ordering::Equal)
        .map(|(_, r)| r)
        .collect()
}
