//! Concrete syntax shared by conditions, guards and LTLf formulas.
//!
//! ```text
//! expr   := term (("|" | "->") term)*
//! term   := factor ("&" factor)*
//! factor := "!" factor | "(" expr ")" | atom
//! atom   := "true" | "false" | IDENT | IDENT OP (NUMBER | LABEL)
//! OP     := "<" | "<=" | "=" | "!=" | ">=" | ">"
//! ```
//!
//! `∧ ∨ ¬ → ≤ ≥ ≠` are accepted as synonyms. Labels are resolved through the
//! model's enumeration table for the compared attribute.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::condition::{AttrId, CmpOp, Condition, Signatures};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{kind} at offset {position}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown activity `{0}`")]
    UnknownActivity(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown label `{label}` for attribute `{attribute}`")]
    UnknownLabel { attribute: String, label: String },
    #[error("constant `{0}` is not a finite number")]
    NonFinite(String),
}

/// Label-to-real encodings, one table per attribute.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnumTable {
    tables: BTreeMap<AttrId, BTreeMap<String, f64>>,
}

impl EnumTable {
    pub fn insert(&mut self, attr: AttrId, label: impl Into<String>, value: f64) {
        self.tables
            .entry(attr)
            .or_default()
            .insert(label.into(), value);
    }

    pub fn resolve(&self, attr: AttrId, label: &str) -> Option<f64> {
        self.tables.get(&attr)?.get(label).copied()
    }

    /// The label encoded by `value`, if any.
    pub fn label(&self, attr: AttrId, value: f64) -> Option<&str> {
        self.tables
            .get(&attr)?
            .iter()
            .find(|(_, v)| **v == value)
            .map(|(k, _)| k.as_str())
    }

    pub fn labels(&self, attr: AttrId) -> impl Iterator<Item = (&str, f64)> {
        self.tables
            .get(&attr)
            .into_iter()
            .flat_map(|t| t.iter().map(|(k, v)| (k.as_str(), *v)))
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.tables.values().flat_map(|t| t.values().copied())
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParseContext<'a> {
    pub signatures: &'a Signatures,
    pub enums: &'a EnumTable,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(String),
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::End => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Ge => ">=",
            Tok::Gt => ">",
            Tok::Not => "!",
            Tok::And => "&",
            Tok::Or => "|",
            Tok::Implies => "->",
            Tok::LParen => "(",
            Tok::RParen => ")",
            _ => "",
        }
    }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let syntax = |pos: usize, msg: String| ParseError {
        position: pos,
        kind: ParseErrorKind::Syntax(msg),
    };
    while i < chars.len() {
        let (pos, c) = chars[i];
        let next = chars.get(i + 1).map(|(_, c)| *c);
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let (tok, width) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '&' if next == Some('&') => (Tok::And, 2),
            '&' | '∧' => (Tok::And, 1),
            '|' if next == Some('|') => (Tok::Or, 2),
            '|' | '∨' => (Tok::Or, 1),
            '→' => (Tok::Implies, 1),
            '-' if next == Some('>') => (Tok::Implies, 2),
            '!' if next == Some('=') => (Tok::Ne, 2),
            '!' | '¬' => (Tok::Not, 1),
            '<' if next == Some('=') => (Tok::Le, 2),
            '<' => (Tok::Lt, 1),
            '>' if next == Some('=') => (Tok::Ge, 2),
            '>' => (Tok::Gt, 1),
            '=' if next == Some('=') => (Tok::Eq, 2),
            '=' => (Tok::Eq, 1),
            '≤' => (Tok::Le, 1),
            '≥' => (Tok::Ge, 1),
            '≠' => (Tok::Ne, 1),
            c if c.is_ascii_digit()
                || ((c == '-' || c == '+' || c == '.')
                    && next.is_some_and(|n| n.is_ascii_digit() || n == '.')) =>
            {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() {
                    let d = chars[j].1;
                    let prev = chars[j - 1].1;
                    if d.is_ascii_digit()
                        || d == '.'
                        || d == 'e'
                        || d == 'E'
                        || ((d == '-' || d == '+') && (prev == 'e' || prev == 'E'))
                    {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let end = chars.get(j).map_or(text.len(), |(p, _)| *p);
                let lit = &text[chars[start].0..end];
                out.push((pos, Tok::Number(lit.to_string())));
                i = j;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_') {
                    j += 1;
                }
                let end = chars.get(j).map_or(text.len(), |(p, _)| *p);
                out.push((pos, Tok::Ident(text[chars[start].0..end].to_string())));
                i = j;
                continue;
            }
            other => return Err(syntax(pos, format!("unexpected character `{other}`"))),
        };
        out.push((pos, tok));
        i += width;
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

/// Cursor over a token vector with the atom/condition productions. The LTLf
/// parser builds on the same cursor.
pub(crate) struct Cursor<'a> {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    pub(crate) ctx: ParseContext<'a>,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(text: &str, ctx: ParseContext<'a>) -> Result<Self, ParseError> {
        Ok(Cursor {
            toks: tokenize(text)?,
            idx: 0,
            ctx,
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.idx].1
    }

    pub(crate) fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.idx + ahead).min(self.toks.len() - 1);
        &self.toks[i].1
    }

    pub(crate) fn mark(&self) -> usize {
        self.idx
    }

    pub(crate) fn reset(&mut self, mark: usize) {
        self.idx = mark;
    }

    pub(crate) fn position(&self) -> usize {
        self.toks[self.idx].0
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let tok = self.toks[self.idx].1.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        tok
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            position: self.position(),
            kind,
        }
    }

    pub(crate) fn unexpected(&self, wanted: &str) -> ParseError {
        self.error(ParseErrorKind::Syntax(format!(
            "expected {wanted}, found {}",
            self.peek().describe()
        )))
    }

    pub(crate) fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{}`", tok.symbol())))
        }
    }

    pub(crate) fn expect_end(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    /// `atom` production. The caller has checked that the next token is an
    /// identifier.
    pub(crate) fn atom(&mut self) -> Result<Condition, ParseError> {
        let pos = self.position();
        let name = match self.bump() {
            Tok::Ident(s) => s,
            _ => return Err(self.unexpected("identifier")),
        };
        let op = match self.peek() {
            Tok::Lt | Tok::Le | Tok::Eq | Tok::Ne | Tok::Ge | Tok::Gt => self.bump(),
            _ => {
                return match name.as_str() {
                    "true" => Ok(Condition::True),
                    "false" => Ok(Condition::falsum()),
                    _ => self
                        .ctx
                        .signatures
                        .activity(&name)
                        .map(Condition::Activity)
                        .ok_or(ParseError {
                            position: pos,
                            kind: ParseErrorKind::UnknownActivity(name),
                        }),
                };
            }
        };
        let attr = self.ctx.signatures.attribute(&name).ok_or(ParseError {
            position: pos,
            kind: ParseErrorKind::UnknownAttribute(name.clone()),
        })?;
        let value = self.constant(attr, &name)?;
        let base = |op| Condition::cmp(attr, op, value);
        Ok(match op {
            Tok::Lt => base(CmpOp::Lt),
            Tok::Eq => base(CmpOp::Eq),
            Tok::Gt => base(CmpOp::Gt),
            Tok::Le => base(CmpOp::Gt).negate(),
            Tok::Ge => base(CmpOp::Lt).negate(),
            Tok::Ne => base(CmpOp::Eq).negate(),
            _ => unreachable!(),
        })
    }

    fn constant(&mut self, attr: AttrId, attr_name: &str) -> Result<f64, ParseError> {
        let pos = self.position();
        match self.bump() {
            Tok::Number(lit) => {
                let v: f64 = lit.parse().map_err(|_| ParseError {
                    position: pos,
                    kind: ParseErrorKind::Syntax(format!("malformed number `{lit}`")),
                })?;
                if !v.is_finite() {
                    return Err(ParseError {
                        position: pos,
                        kind: ParseErrorKind::NonFinite(lit),
                    });
                }
                Ok(v)
            }
            Tok::Ident(label) => self.ctx.enums.resolve(attr, &label).ok_or(ParseError {
                position: pos,
                kind: ParseErrorKind::UnknownLabel {
                    attribute: attr_name.to_string(),
                    label,
                },
            }),
            other => Err(ParseError {
                position: pos,
                kind: ParseErrorKind::Syntax(format!(
                    "expected a number or label, found {}",
                    other.describe()
                )),
            }),
        }
    }

    pub(crate) fn cond_expr(&mut self) -> Result<Condition, ParseError> {
        let mut lhs = self.cond_term()?;
        loop {
            if self.eat(&Tok::Or) {
                lhs = lhs.or(self.cond_term()?);
            } else if self.eat(&Tok::Implies) {
                // right associative
                let rhs = self.cond_expr()?;
                return Ok(lhs.implies(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn cond_term(&mut self) -> Result<Condition, ParseError> {
        let mut lhs = self.cond_factor()?;
        while self.eat(&Tok::And) {
            lhs = lhs.and(self.cond_factor()?);
        }
        Ok(lhs)
    }

    fn cond_factor(&mut self) -> Result<Condition, ParseError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(self.cond_factor()?.negate())
            }
            Tok::LParen => {
                self.bump();
                let inner = self.cond_expr()?;
                self.expect(&Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(_) => self.atom(),
            _ => Err(self.unexpected("a condition")),
        }
    }
}

/// Parses a condition over `ctx.signatures`.
pub fn parse_condition(text: &str, ctx: ParseContext<'_>) -> Result<Condition, ParseError> {
    let mut cur = Cursor::new(text, ctx)?;
    let cond = cur.cond_expr()?;
    cur.expect_end()?;
    Ok(cond)
}
