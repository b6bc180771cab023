//! Row predicates with SQL three-valued logic.
//!
//! A predicate evaluates to true, false or unknown for each row; only rows
//! where it is true are kept. Any comparison touching a null is unknown,
//! and so is a numeric-mode comparison whose operand does not parse.

use serde::{Deserialize, Serialize};

use super::{resolve, Coercion, OpError};
use crate::table::{Row, Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "=", alias = "==")]
    Eq,
    #[serde(rename = "!=", alias = "<>")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    Column(String),
    Value(Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub left: Operand,
    pub op: CmpOp,
    pub right: Operand,
    #[serde(default)]
    pub mode: Coercion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Compare(Comparison),
    /// `%` matches any run of characters, `_` exactly one. Non-text cells
    /// are matched against their rendered form.
    Like {
        column: String,
        pattern: String,
        #[serde(default)]
        negated: bool,
        #[serde(default)]
        ignore_case: bool,
    },
    In {
        column: String,
        values: Vec<Value>,
        #[serde(default)]
        mode: Coercion,
        #[serde(default)]
        negated: bool,
    },
    IsNull {
        column: String,
    },
    IsNotNull {
        column: String,
    },
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    /// `column <op> literal` in strict mode.
    pub fn compare(column: &str, op: CmpOp, value: impl Into<Value>) -> Self {
        Predicate::Compare(Comparison {
            left: Operand::Column(column.to_string()),
            op,
            right: Operand::Value(value.into()),
            mode: Coercion::Strict,
        })
    }

    pub fn eq(column: &str, value: impl Into<Value>) -> Self {
        Predicate::compare(column, CmpOp::Eq, value)
    }

    /// Switches every comparison and IN list in this tree to numeric mode.
    pub fn numeric(self) -> Self {
        match self {
            Predicate::Compare(c) => Predicate::Compare(Comparison {
                mode: Coercion::Numeric,
                ..c
            }),
            Predicate::In {
                column,
                values,
                negated,
                ..
            } => Predicate::In {
                column,
                values,
                mode: Coercion::Numeric,
                negated,
            },
            Predicate::And(ps) => Predicate::And(ps.into_iter().map(Predicate::numeric).collect()),
            Predicate::Or(ps) => Predicate::Or(ps.into_iter().map(Predicate::numeric).collect()),
            Predicate::Not(p) => Predicate::Not(Box::new(p.numeric())),
            other => other,
        }
    }

    pub fn and(self, other: Predicate) -> Self {
        Predicate::And(vec![self, other])
    }

    /// Resolves column names against `t`, failing on the first unknown one.
    pub fn bind(&self, t: &Table) -> Result<BoundPredicate, OpError> {
        Ok(BoundPredicate(bind(self, t)?))
    }
}

#[derive(Debug, Clone)]
enum BoundOperand {
    Column(usize),
    Value(Value),
}

#[derive(Debug, Clone)]
enum Node {
    Compare(BoundOperand, CmpOp, BoundOperand, Coercion),
    Like(usize, Vec<char>, bool, bool),
    In(usize, Vec<Value>, Coercion, bool),
    IsNull(usize, bool),
    And(Vec<Node>),
    Or(Vec<Node>),
    Not(Box<Node>),
}

/// A predicate whose column references have been resolved to positions.
#[derive(Debug, Clone)]
pub struct BoundPredicate(Node);

impl BoundPredicate {
    /// Three-valued result; `None` is SQL unknown.
    pub fn eval(&self, row: &Row) -> Option<bool> {
        eval(&self.0, row)
    }

    pub fn matches(&self, row: &Row) -> bool {
        self.eval(row) == Some(true)
    }
}

fn bind_operand(op: &Operand, t: &Table) -> Result<BoundOperand, OpError> {
    Ok(match op {
        Operand::Column(c) => BoundOperand::Column(resolve(t, c)?),
        Operand::Value(v) => BoundOperand::Value(v.clone()),
    })
}

fn bind(p: &Predicate, t: &Table) -> Result<Node, OpError> {
    Ok(match p {
        Predicate::Compare(c) => Node::Compare(
            bind_operand(&c.left, t)?,
            c.op,
            bind_operand(&c.right, t)?,
            c.mode,
        ),
        Predicate::Like {
            column,
            pattern,
            negated,
            ignore_case,
        } => {
            let pat = if *ignore_case {
                pattern.to_lowercase()
            } else {
                pattern.clone()
            };
            Node::Like(resolve(t, column)?, pat.chars().collect(), *negated, *ignore_case)
        }
        Predicate::In {
            column,
            values,
            mode,
            negated,
        } => Node::In(resolve(t, column)?, values.clone(), *mode, *negated),
        Predicate::IsNull { column } => Node::IsNull(resolve(t, column)?, false),
        Predicate::IsNotNull { column } => Node::IsNull(resolve(t, column)?, true),
        Predicate::And(ps) => Node::And(ps.iter().map(|p| bind(p, t)).collect::<Result<_, _>>()?),
        Predicate::Or(ps) => Node::Or(ps.iter().map(|p| bind(p, t)).collect::<Result<_, _>>()?),
        Predicate::Not(p) => Node::Not(Box::new(bind(p, t)?)),
    })
}

fn operand<'a>(op: &'a BoundOperand, row: &'a Row) -> &'a Value {
    match op {
        BoundOperand::Column(i) => &row[*i],
        BoundOperand::Value(v) => v,
    }
}

fn eval(node: &Node, row: &Row) -> Option<bool> {
    match node {
        Node::Compare(l, op, r, mode) => compare(operand(l, row), *op, operand(r, row), *mode),
        Node::Like(col, pat, negated, ignore_case) => {
            let cell = &row[*col];
            if cell.is_null() {
                return None;
            }
            let text = if *ignore_case {
                cell.render().to_lowercase()
            } else {
                cell.render()
            };
            let chars: Vec<char> = text.chars().collect();
            Some(like_match(&chars, pat) != *negated)
        }
        Node::In(col, values, mode, negated) => {
            let cell = &row[*col];
            if cell.is_null() {
                return None;
            }
            let mut unknown = false;
            for v in values {
                match compare(cell, CmpOp::Eq, v, *mode) {
                    Some(true) => return Some(!*negated),
                    None => unknown = true,
                    Some(false) => {}
                }
            }
            if unknown {
                None
            } else {
                Some(*negated)
            }
        }
        Node::IsNull(col, negated) => Some(row[*col].is_null() != *negated),
        Node::And(ps) => {
            let mut result = Some(true);
            for p in ps {
                match eval(p, row) {
                    Some(false) => return Some(false),
                    None => result = None,
                    Some(true) => {}
                }
            }
            result
        }
        Node::Or(ps) => {
            let mut result = Some(false);
            for p in ps {
                match eval(p, row) {
                    Some(true) => return Some(true),
                    None => result = None,
                    Some(false) => {}
                }
            }
            result
        }
        Node::Not(p) => eval(p, row).map(|b| !b),
    }
}

/// Compares two cells. Strict mode compares same-typed values directly;
/// across types only `=` and `!=` are decided. Numeric mode parses both
/// sides first.
pub fn compare(a: &Value, op: CmpOp, b: &Value, mode: Coercion) -> Option<bool> {
    if a.is_null() || b.is_null() {
        return None;
    }
    let ord = match mode {
        Coercion::Numeric => {
            let (x, y) = (a.coerce_f64()?, b.coerce_f64()?);
            x.partial_cmp(&y)?
        }
        Coercion::Strict => {
            if a.tag() != b.tag() {
                return match op {
                    CmpOp::Eq => Some(false),
                    CmpOp::Ne => Some(true),
                    _ => None,
                };
            }
            a.cmp(b)
        }
    };
    use std::cmp::Ordering::*;
    Some(match op {
        CmpOp::Eq => ord == Equal,
        CmpOp::Ne => ord != Equal,
        CmpOp::Lt => ord == Less,
        CmpOp::Le => ord != Greater,
        CmpOp::Gt => ord == Greater,
        CmpOp::Ge => ord != Less,
    })
}

/// SQL LIKE over characters.
pub fn like_match(text: &[char], pattern: &[char]) -> bool {
    // dp[j]: pattern[..j] matches text[..i]
    let mut dp = vec![false; pattern.len() + 1];
    dp[0] = true;
    for j in 1..=pattern.len() {
        dp[j] = dp[j - 1] && pattern[j - 1] == '%';
    }
    for &c in text {
        let mut prev_diag = dp[0];
        dp[0] = false;
        for j in 1..=pattern.len() {
            let above = dp[j];
            dp[j] = match pattern[j - 1] {
                '%' => dp[j - 1] || above,
                '_' => prev_diag,
                p => prev_diag && p == c,
            };
            prev_diag = above;
        }
    }
    dp[pattern.len()]
}
