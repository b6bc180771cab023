//! A sandboxed arithmetic evaluator used by the `compute` operator.
//!
//! Grammar: `+ - * /`, parentheses, unary minus, numeric literals and
//! column references. Bare identifiers may contain letters, digits, `_`
//! and `.`; other names are quoted with `"…"`, `[…]` or `` `…` ``.
//! Cells are read with numeric coercion; a null or unparsable operand makes
//! the result null, and so does division by zero.

use super::{resolve, OpError};
use crate::table::{ColumnSpec, ColumnType, Table, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Column(String),
    Neg(Box<Expr>),
    Binary(Box<Expr>, char, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    Open,
    Close,
}

fn tokenize(src: &str) -> Result<Vec<Tok>, OpError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |msg: String| OpError::Expression(msg);
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '+' | '-' | '*' | '/' => {
                out.push(Tok::Op(c));
                i += 1;
            }
            '(' => {
                out.push(Tok::Open);
                i += 1;
            }
            ')' => {
                out.push(Tok::Close);
                i += 1;
            }
            '"' | '[' | '`' => {
                let close = if c == '[' { ']' } else { c };
                let start = i + 1;
                let end = chars[start..]
                    .iter()
                    .position(|&d| d == close)
                    .ok_or_else(|| err(format!("unclosed {c} at offset {i}")))?;
                let name: String = chars[start..start + end].iter().collect();
                if name.is_empty() {
                    return Err(err(format!("empty column reference at offset {i}")));
                }
                out.push(Tok::Ident(name));
                i = start + end + 1;
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let n = crate::table::parse_number(&text)
                    .ok_or_else(|| err(format!("bad number {text:?}")))?;
                out.push(Tok::Num(n));
            }
            _ if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            _ => return Err(err(format!("unexpected character {c:?} at offset {i}"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr, OpError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            lhs = Expr::Binary(Box::new(lhs), op, Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, OpError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            lhs = Expr::Binary(Box::new(lhs), op, Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, OpError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if let Some(Tok::Op('+')) = self.peek() {
            self.pos += 1;
            return self.unary();
        }
        match self.next() {
            Some(Tok::Num(n)) => Ok(Expr::Number(n)),
            Some(Tok::Ident(name)) => Ok(Expr::Column(name)),
            Some(Tok::Open) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::Close) => Ok(e),
                    _ => Err(OpError::Expression("missing closing parenthesis".into())),
                }
            }
            Some(t) => Err(OpError::Expression(format!("unexpected token {t:?}"))),
            None => Err(OpError::Expression("unexpected end of expression".into())),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, OpError> {
        let mut p = Parser {
            toks: tokenize(src)?,
            pos: 0,
        };
        let e = p.expr()?;
        if p.pos < p.toks.len() {
            return Err(OpError::Expression(format!(
                "trailing input after token {}",
                p.pos
            )));
        }
        Ok(e)
    }

    pub fn columns(&self) -> Vec<&str> {
        match self {
            Expr::Number(_) => vec![],
            Expr::Column(c) => vec![c.as_str()],
            Expr::Neg(e) => e.columns(),
            Expr::Binary(a, _, b) => {
                let mut v = a.columns();
                v.extend(b.columns());
                v
            }
        }
    }
}

enum Bound {
    Number(f64),
    Column(usize),
    Neg(Box<Bound>),
    Binary(Box<Bound>, char, Box<Bound>),
}

fn bind(e: &Expr, t: &Table) -> Result<Bound, OpError> {
    Ok(match e {
        Expr::Number(n) => Bound::Number(*n),
        Expr::Column(c) => Bound::Column(resolve(t, c)?),
        Expr::Neg(a) => Bound::Neg(Box::new(bind(a, t)?)),
        Expr::Binary(a, op, b) => Bound::Binary(Box::new(bind(a, t)?), *op, Box::new(bind(b, t)?)),
    })
}

fn eval(e: &Bound, row: &[Value]) -> Option<f64> {
    match e {
        Bound::Number(n) => Some(*n),
        Bound::Column(c) => row[*c].coerce_f64(),
        Bound::Neg(a) => eval(a, row).map(|x| -x),
        Bound::Binary(a, op, b) => {
            let (x, y) = (eval(a, row)?, eval(b, row)?);
            let r = match op {
                '+' => x + y,
                '-' => x - y,
                '*' => x * y,
                _ if y == 0.0 => return None,
                _ => x / y,
            };
            r.is_finite().then_some(r)
        }
    }
}

/// Appends column `name` holding `expr` evaluated per row.
pub fn compute(t: &Table, name: &str, expr: &str) -> Result<Table, OpError> {
    if name.is_empty() {
        return Err(OpError::InvalidArgument("output column name is empty".into()));
    }
    let bound = bind(&Expr::parse(expr)?, t)?;
    let mut schema = t.schema().to_vec();
    schema.push(ColumnSpec::new(name, ColumnType::Number));
    let rows = t
        .rows()
        .iter()
        .map(|r| {
            let mut row = r.clone();
            row.push(eval(&bound, r).map_or(Value::Null, Value::Number));
            row
        })
        .collect();
    Ok(Table::derived(schema, rows)?)
}
