//! Infix expressions for φ(r, s).
//!
//! Grammar (no implicit multiplication, `^` right-associative, unary minus
//! binds to the following atom only, so `-s^2` is `(-s)^2`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-'? atom
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are `r`, `s`, declared parameter names, or one of the
//! functions `sqrt`, `exp`, `ln`, `sin`, `cos`. The Unicode minus `−` is
//! accepted wherever `-` is.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::jets::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: &'static str,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    R,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Param(String),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn is_atomic(&self) -> bool {
        matches!(self, Node::Num(_) | Node::Var(_) | Node::Param(_) | Node::Call(..))
    }
}

/// Printing is fully parenthesized, so the output re-parses to the same tree.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v}"),
            Node::Var(Var::R) => f.write_str("r"),
            Node::Var(Var::S) => f.write_str("s"),
            Node::Param(p) => f.write_str(p),
            Node::Neg(inner) if inner.is_atomic() => write!(f, "(-{inner})"),
            Node::Neg(inner) => write!(f, "(-({inner}))"),
            Node::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Node::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

/// A parsed φ(r, s).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricExpr {
    root: Node,
    params: BTreeSet<String>,
}

impl MetricExpr {
    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Parameter names the expression was allowed to use.
    pub fn declared_params(&self) -> &BTreeSet<String> {
        &self.params
    }

    /// Parameter names that actually occur in the tree.
    pub fn referenced_params(&self) -> BTreeSet<String> {
        fn walk(n: &Node, out: &mut BTreeSet<String>) {
            match n {
                Node::Param(p) => {
                    out.insert(p.clone());
                }
                Node::Neg(a) | Node::Call(_, a) => walk(a, out),
                Node::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Node::Num(_) | Node::Var(_) => {}
            }
        }
        let mut out = BTreeSet::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn eval<S: Scalar>(&self, r: S, s: S, params: &BTreeMap<String, f64>) -> Result<S> {
        eval_node(&self.root, r, s, params)
    }
}

impl fmt::Display for MetricExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

pub fn parse_metric_expr<I, P>(source: &str, params: I) -> Result<MetricExpr, ParseError>
where
    I: IntoIterator<Item = P>,
    P: Into<String>,
{
    let params: BTreeSet<String> = params.into_iter().map(Into::into).collect();
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        params: &params,
    };
    let root = parser.expr()?;
    let tok = parser.peek();
    if tok.kind != Tok::End {
        return Err(ParseError::Syntax {
            offset: tok.offset,
            expected: "operator or end of input",
            found: tok.kind.describe(),
        });
    }
    Ok(MetricExpr { root, params })
}

/// Evaluate `expr` at (r, s) over any [`Scalar`]; a jet in the `s` slot
/// yields φ together with its s-derivatives.
pub fn eval_expr<S: Scalar>(expr: &MetricExpr, r: S, s: S, params: &BTreeMap<String, f64>) -> Result<S> {
    expr.eval(r, s, params)
}

fn eval_node<S: Scalar>(node: &Node, r: S, s: S, params: &BTreeMap<String, f64>) -> Result<S> {
    Ok(match node {
        Node::Num(v) => S::constant(*v),
        Node::Var(Var::R) => r,
        Node::Var(Var::S) => s,
        Node::Param(p) => S::constant(*params.get(p).ok_or_else(|| Error::UnboundParameter(p.clone()))?),
        Node::Neg(a) => -eval_node(a, r, s, params)?,
        Node::Call(func, a) => {
            let v = eval_node(a, r, s, params)?;
            match func {
                Func::Sqrt | Func::Ln if v.value() <= 0.0 => {
                    return Err(Error::Domain {
                        op: func.name(),
                        subexpr: node.to_string(),
                        value: v.value(),
                    })
                }
                Func::Sqrt => v.sqrt(),
                Func::Ln => v.ln(),
                Func::Exp => v.exp(),
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
            }
        }
        Node::Binary(op, a, b) => {
            let x = eval_node(a, r, s, params)?;
            let y = eval_node(b, r, s, params)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y.value() == 0.0 {
                        return Err(Error::DivisionByZero {
                            subexpr: node.to_string(),
                        });
                    }
                    x / y
                }
                BinOp::Pow => pow(node, x, y)?,
            }
        }
    })
}

fn pow<S: Scalar>(node: &Node, base: S, exponent: S) -> Result<S> {
    if exponent.is_constant() {
        let p = exponent.value();
        if p.fract() == 0.0 && p.abs() <= 1024.0 {
            if p < 0.0 && base.value() == 0.0 {
                return Err(Error::DivisionByZero {
                    subexpr: node.to_string(),
                });
            }
            return Ok(base.powi(p as i32));
        }
        if base.value() <= 0.0 {
            return Err(Error::Domain {
                op: "fractional power",
                subexpr: node.to_string(),
                value: base.value(),
            });
        }
        return Ok(base.powf(p));
    }
    if base.value() <= 0.0 {
        return Err(Error::Domain {
            op: "variable power",
            subexpr: node.to_string(),
            value: base.value(),
        });
    }
    Ok((exponent * base.ln()).exp())
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let ch = src[i..].chars().next().expect("in bounds");
        let start = i;
        let simple = match ch {
            '+' => Some(Tok::Plus),
            '-' | '\u{2212}' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(kind) = simple {
            out.push(Token { kind, offset: start });
            i += ch.len_utf8();
            continue;
        }
        if ch.is_whitespace() {
            i += ch.len_utf8();
        } else if ch.is_ascii_digit() || ch == '.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(Token {
                    kind: Tok::Num(v),
                    offset: start,
                }),
                _ => {
                    return Err(ParseError::Syntax {
                        offset: start,
                        expected: "finite decimal number",
                        found: format!("`{text}`"),
                    })
                }
            }
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Tok::Ident(src[start..i].to_string()),
                offset: start,
            });
        } else {
            return Err(ParseError::Syntax {
                offset: start,
                expected: "number, identifier, operator or parenthesis",
                found: format!("character `{ch}`"),
            });
        }
    }
    out.push(Token {
        kind: Tok::End,
        offset: src.len(),
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    params: &'a BTreeSet<String>,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: Tok, expected: &'static str) -> Result<(), ParseError> {
        let t = self.peek();
        if t.kind == kind {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset: t.offset,
                expected,
                found: t.kind.describe(),
            })
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().kind {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        let base = self.unary()?;
        if self.peek().kind == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek().kind == Tok::Minus {
            self.bump();
            return Ok(Node::Neg(Box::new(self.atom()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let t = self.bump();
        match t.kind {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.peek().kind == Tok::LParen {
                    let func =
                        Func::from_name(&name).ok_or(ParseError::UnknownIdentifier { name, offset: t.offset })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if Func::from_name(&name).is_some() {
                    let next = self.peek();
                    return Err(ParseError::Syntax {
                        offset: next.offset,
                        expected: "`(` after function name",
                        found: next.kind.describe(),
                    });
                }
                match name.as_str() {
                    "r" => Ok(Node::Var(Var::R)),
                    "s" => Ok(Node::Var(Var::S)),
                    _ if self.params.contains(&name) => Ok(Node::Param(name)),
                    _ => Err(ParseError::UnknownIdentifier { name, offset: t.offset }),
                }
            }
            other => {
                // Step back so End stays addressable for later diagnostics.
                if other != Tok::End {
                    self.pos -= 1;
                }
                Err(ParseError::Syntax {
                    offset: t.offset,
                    expected: "number, identifier or `(`",
                    found: other.describe(),
                })
            }
        }
    }
}
