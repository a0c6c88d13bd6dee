//! Boolean assertions over current-step and next-step propositions.
//!
//! Text grammar (lowest to highest precedence):
//!
//! ```text
//! formula  := implies
//! implies  := or ( "->" implies )?        right associative
//! or       := and ( "|" and )*
//! and      := unary ( "&" unary )*
//! unary    := "!" unary | atom
//! atom     := "true" | "false" | "X" ident | ident | "(" formula ")"
//! ```
//!
//! A prefix `X ` marks the proposition as evaluated on the successor label.

use std::fmt;

use thiserror::Error;

use crate::game::{Game, PropId};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(bool),
    /// Proposition by name; `next` selects the successor label.
    Prop {
        name: String,
        next: bool,
    },
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown proposition `{0}`")]
    UnknownProp(String),
    #[error("next-step proposition `X {0}` not allowed in an initial assertion")]
    NextInInitial(String),
}

impl Formula {
    pub fn prop(name: impl Into<String>) -> Self {
        Formula::Prop { name: name.into(), next: false }
    }

    pub fn next(name: impl Into<String>) -> Self {
        Formula::Prop { name: name.into(), next: true }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn implies(lhs: Formula, rhs: Formula) -> Self {
        Formula::Implies(Box::new(lhs), Box::new(rhs))
    }

    pub fn parse(text: &str) -> Result<Self, FormulaError> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0, len: text.len() };
        let f = p.implies()?;
        match p.tokens.get(p.pos) {
            None => Ok(f),
            Some((at, tok)) => Err(FormulaError::Parse { pos: *at, msg: format!("unexpected {tok:?}") }),
        }
    }

    pub fn mentions_next(&self) -> bool {
        match self {
            Formula::Const(_) => false,
            Formula::Prop { next, .. } => *next,
            Formula::Not(f) => f.mentions_next(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::mentions_next),
            Formula::Implies(a, b) => a.mentions_next() || b.mentions_next(),
        }
    }

    /// Resolves proposition names against the game's proposition table.
    pub fn bind(&self, g: &Game) -> Result<BoundFormula, FormulaError> {
        Ok(match self {
            Formula::Const(b) => BoundFormula::Const(*b),
            Formula::Prop { name, next } => {
                let p = g.prop_by_name(name).ok_or_else(|| FormulaError::UnknownProp(name.clone()))?;
                BoundFormula::Prop { prop: p, next: *next }
            }
            Formula::Not(f) => BoundFormula::Not(Box::new(f.bind(g)?)),
            Formula::And(fs) => BoundFormula::And(fs.iter().map(|f| f.bind(g)).collect::<Result<_, _>>()?),
            Formula::Or(fs) => BoundFormula::Or(fs.iter().map(|f| f.bind(g)).collect::<Result<_, _>>()?),
            Formula::Implies(a, b) => BoundFormula::Implies(Box::new(a.bind(g)?), Box::new(b.bind(g)?)),
        })
    }

    /// Number of nodes, the `|φ|` of the linear-time bound.
    pub fn size(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Prop { .. } => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            Formula::Implies(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, fs: &[Formula], op: &str, empty: &str) -> fmt::Result {
            if fs.is_empty() {
                return f.write_str(empty);
            }
            f.write_str("(")?;
            for (i, sub) in fs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{sub}")?;
            }
            f.write_str(")")
        }
        match self {
            Formula::Const(true) => f.write_str("true"),
            Formula::Const(false) => f.write_str("false"),
            Formula::Prop { name, next: false } => f.write_str(name),
            Formula::Prop { name, next: true } => write!(f, "X {name}"),
            Formula::Not(sub) => write!(f, "!{sub}"),
            Formula::And(fs) => join(f, fs, "&", "true"),
            Formula::Or(fs) => join(f, fs, "|", "false"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
        }
    }
}

/// A formula with proposition ids, evaluable on label pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundFormula {
    Const(bool),
    Prop { prop: PropId, next: bool },
    Not(Box<BoundFormula>),
    And(Vec<BoundFormula>),
    Or(Vec<BoundFormula>),
    Implies(Box<BoundFormula>, Box<BoundFormula>),
}

impl BoundFormula {
    /// Evaluates on the current label `now` and next label `next`. Both
    /// slices must be sorted.
    pub fn eval(&self, now: &[PropId], next: &[PropId]) -> bool {
        match self {
            BoundFormula::Const(b) => *b,
            BoundFormula::Prop { prop, next: false } => now.binary_search(prop).is_ok(),
            BoundFormula::Prop { prop, next: true } => next.binary_search(prop).is_ok(),
            BoundFormula::Not(f) => !f.eval(now, next),
            BoundFormula::And(fs) => fs.iter().all(|f| f.eval(now, next)),
            BoundFormula::Or(fs) => fs.iter().any(|f| f.eval(now, next)),
            BoundFormula::Implies(a, b) => !a.eval(now, next) || b.eval(now, next),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Ident(String),
    Next,
    Not,
    And,
    Or,
    Arrow,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Token)>, FormulaError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'!' => {
                out.push((i, Token::Not));
                i += 1;
            }
            b'&' => {
                out.push((i, Token::And));
                i += 1;
            }
            b'|' => {
                out.push((i, Token::Or));
                i += 1;
            }
            b'(' => {
                out.push((i, Token::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Token::RParen));
                i += 1;
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                out.push((i, Token::Arrow));
                i += 2;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                // `X` on its own is the next-step marker.
                if word == "X" {
                    out.push((start, Token::Next));
                } else {
                    out.push((start, Token::Ident(word.to_string())));
                }
            }
            _ => return Err(FormulaError::Parse { pos: i, msg: format!("unexpected character {:?}", c as char) }),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map(|(p, _)| *p).unwrap_or(self.len)
    }

    fn err<T>(&self, msg: &str) -> Result<T, FormulaError> {
        Err(FormulaError::Parse { pos: self.here(), msg: msg.to_string() })
    }

    fn implies(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Token::Arrow) {
            self.pos += 1;
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut parts = vec![self.and()?];
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        if self.peek() == Some(&Token::Not) {
            self.pos += 1;
            return Ok(Formula::not(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().cloned() {
            Some(Token::Ident(name)) => {
                self.pos += 1;
                Ok(match name.as_str() {
                    "true" => Formula::Const(true),
                    "false" => Formula::Const(false),
                    _ => Formula::prop(name),
                })
            }
            Some(Token::Next) => {
                self.pos += 1;
                match self.peek().cloned() {
                    Some(Token::Ident(name)) if name != "true" && name != "false" => {
                        self.pos += 1;
                        Ok(Formula::next(name))
                    }
                    _ => self.err("expected proposition after X"),
                }
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let f = self.implies()?;
                if self.peek() != Some(&Token::RParen) {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(f)
            }
            Some(_) => self.err("expected proposition, constant or `(`"),
            None => self.err("unexpected end of formula"),
        }
    }
}
