//! Data-aware LTLf constraints.
//!
//! Formulas are kept in a six-constructor core: `true`, condition leaves,
//! strong next, strong until, negation and conjunction. Everything else is
//! sugar expanded by the constructors below. Boolean combinations of leaves
//! collapse into a single leaf or a negated leaf, so each leaf is a maximal
//! propositional subformula.
//!
//! On the empty trace `true` holds, leaves, `X` and `U` fail, and negation
//! and conjunction behave classically. So `!a` holds on the empty trace
//! while the parenthesized condition `(!a)`, a single leaf, does not.

mod automaton;
mod templates;

use std::fmt;

use thiserror::Error;

use crate::condition::{Condition, Event, Signatures};
use crate::syntax::{Cursor, ParseContext, ParseError, Tok};

pub use automaton::{ltlf_to_gfa, AutomatonError, DEFAULT_STATE_BOUND, MAX_ATOMS};
pub use templates::{expand_template, Template, TemplateError};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ltlf {
    True,
    Leaf(Condition),
    Next(Box<Ltlf>),
    Until(Box<Ltlf>, Box<Ltlf>),
    Not(Box<Ltlf>),
    And(Box<Ltlf>, Box<Ltlf>),
}

impl Ltlf {
    pub fn leaf(c: Condition) -> Self {
        Ltlf::Leaf(c)
    }

    pub fn falsum() -> Self {
        Ltlf::Not(Box::new(Ltlf::True))
    }

    pub fn not(self) -> Self {
        match self {
            Ltlf::Not(inner) => *inner,
            other => Ltlf::Not(Box::new(other)),
        }
    }

    fn is_falsum(&self) -> bool {
        matches!(self, Ltlf::Not(inner) if **inner == Ltlf::True)
    }

    /// Propositional parts merge into one leaf. A merged part keeps its
    /// truth on the empty trace: `Leaf` is false there and `¬Leaf` true.
    pub fn and(self, other: Ltlf) -> Self {
        if self.is_falsum() || other.is_falsum() {
            return Ltlf::falsum();
        }
        match (self, other) {
            (Ltlf::True, x) | (x, Ltlf::True) => x,
            (Ltlf::Leaf(a), Ltlf::Leaf(b)) => Ltlf::Leaf(a.and(b)),
            (Ltlf::Leaf(a), Ltlf::Not(b)) | (Ltlf::Not(b), Ltlf::Leaf(a))
                if matches!(*b, Ltlf::Leaf(_)) =>
            {
                let Ltlf::Leaf(b) = *b else { unreachable!() };
                Ltlf::Leaf(a.and(b.negate()))
            }
            (Ltlf::Not(a), Ltlf::Not(b))
                if matches!(*a, Ltlf::Leaf(_)) && matches!(*b, Ltlf::Leaf(_)) =>
            {
                let (Ltlf::Leaf(a), Ltlf::Leaf(b)) = (*a, *b) else { unreachable!() };
                Ltlf::Leaf(a.or(b)).not()
            }
            (a, b) => Ltlf::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(self, other: Ltlf) -> Self {
        self.not().and(other.not()).not()
    }

    pub fn implies(self, other: Ltlf) -> Self {
        self.and(other.not()).not()
    }

    pub fn next(self) -> Self {
        Ltlf::Next(Box::new(self))
    }

    pub fn until(self, other: Ltlf) -> Self {
        Ltlf::Until(Box::new(self), Box::new(other))
    }

    pub fn eventually(self) -> Self {
        Ltlf::True.until(self)
    }

    pub fn always(self) -> Self {
        self.not().eventually().not()
    }

    /// Truth on the empty trace.
    pub fn holds_on_empty(&self) -> bool {
        match self {
            Ltlf::True => true,
            Ltlf::Leaf(_) | Ltlf::Next(_) | Ltlf::Until(..) => false,
            Ltlf::Not(inner) => !inner.holds_on_empty(),
            Ltlf::And(l, r) => l.holds_on_empty() && r.holds_on_empty(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Ltlf::True | Ltlf::Leaf(_) => 0,
            Ltlf::Next(a) | Ltlf::Not(a) => 1 + a.depth(),
            Ltlf::Until(a, b) | Ltlf::And(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Distinct leaves in first-occurrence order.
    pub fn leaves(&self) -> Vec<&Condition> {
        let mut out = Vec::new();
        self.visit_leaves(&mut |c| {
            if !out.contains(&c) {
                out.push(c);
            }
        });
        out
    }

    fn visit_leaves<'a>(&'a self, f: &mut impl FnMut(&'a Condition)) {
        match self {
            Ltlf::True => {}
            Ltlf::Leaf(c) => f(c),
            Ltlf::Next(a) | Ltlf::Not(a) => a.visit_leaves(f),
            Ltlf::Until(a, b) | Ltlf::And(a, b) => {
                a.visit_leaves(f);
                b.visit_leaves(f);
            }
        }
    }

    pub fn display<'a>(&'a self, sigs: &'a Signatures) -> DisplayLtlf<'a> {
        DisplayLtlf { phi: self, sigs }
    }
}

/// Printer whose output parses back to the same tree.
pub struct DisplayLtlf<'a> {
    phi: &'a Ltlf,
    sigs: &'a Signatures,
}

impl fmt::Display for DisplayLtlf<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_ltlf(self.phi, self.sigs, f)
    }
}

fn write_ltlf(phi: &Ltlf, sigs: &Signatures, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match phi {
        Ltlf::True => write!(f, "true"),
        Ltlf::Leaf(c) => write!(f, "({})", c.display(sigs)),
        Ltlf::Next(a) => {
            write!(f, "X ")?;
            write_ltlf(a, sigs, f)
        }
        Ltlf::Not(a) => {
            write!(f, "!")?;
            write_ltlf(a, sigs, f)
        }
        Ltlf::Until(a, b) => {
            write!(f, "(")?;
            write_ltlf(a, sigs, f)?;
            write!(f, " U ")?;
            write_ltlf(b, sigs, f)?;
            write!(f, ")")
        }
        Ltlf::And(a, b) => {
            write!(f, "(")?;
            write_ltlf(a, sigs, f)?;
            write!(f, " & ")?;
            write_ltlf(b, sigs, f)?;
            write!(f, ")")
        }
    }
}

fn keyword(tok: &Tok, word: &str) -> bool {
    matches!(tok, Tok::Ident(s) if s == word)
}

fn is_comparison(tok: &Tok) -> bool {
    matches!(
        tok,
        Tok::Lt | Tok::Le | Tok::Eq | Tok::Ne | Tok::Ge | Tok::Gt
    )
}

fn leaf_or_constant(c: Condition) -> Ltlf {
    match c {
        Condition::True => Ltlf::True,
        Condition::Not(inner) if *inner == Condition::True => Ltlf::falsum(),
        c => Ltlf::Leaf(c),
    }
}

struct LtlfParser<'a> {
    cur: Cursor<'a>,
}

impl LtlfParser<'_> {
    fn expr(&mut self) -> Result<Ltlf, ParseError> {
        let lhs = self.disjunction()?;
        if self.cur.eat(&Tok::Implies) {
            let rhs = self.expr()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Ltlf, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.cur.eat(&Tok::Or) {
            lhs = lhs.or(self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Ltlf, ParseError> {
        let mut lhs = self.until()?;
        while self.cur.eat(&Tok::And) {
            lhs = lhs.and(self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Ltlf, ParseError> {
        let lhs = self.unary()?;
        if keyword(self.cur.peek(), "U") && !is_comparison(self.cur.peek_at(1)) {
            self.cur.bump();
            let rhs = self.until()?;
            return Ok(lhs.until(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ltlf, ParseError> {
        let tok = self.cur.peek().clone();
        if tok == Tok::Not {
            self.cur.bump();
            return Ok(self.unary()?.not());
        }
        let temporal = !is_comparison(self.cur.peek_at(1));
        if temporal && keyword(&tok, "X") {
            self.cur.bump();
            return Ok(self.unary()?.next());
        }
        if temporal && keyword(&tok, "F") {
            self.cur.bump();
            return Ok(self.unary()?.eventually());
        }
        if temporal && keyword(&tok, "G") {
            self.cur.bump();
            return Ok(self.unary()?.always());
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Ltlf, ParseError> {
        match self.cur.peek() {
            Tok::LParen => {
                self.cur.bump();
                // a parenthesized condition is a single leaf
                let mark = self.cur.mark();
                if let Ok(c) = self.cur.cond_expr() {
                    if self.cur.eat(&Tok::RParen) {
                        return Ok(leaf_or_constant(c));
                    }
                }
                self.cur.reset(mark);
                let inner = self.expr()?;
                self.cur.expect(&Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(_) => Ok(leaf_or_constant(self.cur.atom()?)),
            _ => Err(self.cur.unexpected("a formula")),
        }
    }
}

/// Parses an LTLf formula. `X`, `F`, `G` and `U` are operators unless
/// directly followed by a comparison, in which case they name attributes.
pub fn parse_ltlf(text: &str, ctx: ParseContext<'_>) -> Result<Ltlf, ParseError> {
    let mut p = LtlfParser {
        cur: Cursor::new(text, ctx)?,
    };
    let phi = p.expr()?;
    p.cur.expect_end()?;
    Ok(phi)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("position {position} is outside 1..={len}")]
pub struct PositionError {
    pub position: usize,
    pub len: usize,
}

/// Truth table of every subformula at every position of one trace, computed
/// straight from the satisfaction clauses.
struct Table<'a> {
    ops: Vec<Op<'a>>,
}

enum Op<'a> {
    True,
    Leaf(&'a Condition),
    Next(usize),
    Not(usize),
    And(usize, usize),
    Until(usize, usize),
}

impl<'a> Table<'a> {
    fn new(phi: &'a Ltlf) -> Self {
        fn build<'a>(phi: &'a Ltlf, ops: &mut Vec<Op<'a>>) -> usize {
            let op = match phi {
                Ltlf::True => Op::True,
                Ltlf::Leaf(c) => Op::Leaf(c),
                Ltlf::Next(a) => Op::Next(build(a, ops)),
                Ltlf::Not(a) => Op::Not(build(a, ops)),
                Ltlf::And(a, b) => {
                    let a = build(a, ops);
                    Op::And(a, build(b, ops))
                }
                Ltlf::Until(a, b) => {
                    let a = build(a, ops);
                    Op::Until(a, build(b, ops))
                }
            };
            ops.push(op);
            ops.len() - 1
        }
        let mut ops = Vec::new();
        build(phi, &mut ops);
        Table { ops }
    }

    /// Row of the root formula; entry `i` is satisfaction at position `i + 1`.
    fn eval(&self, trace: &[Event]) -> Vec<bool> {
        let n = trace.len();
        let mut vals: Vec<Vec<bool>> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let row: Vec<bool> = match *op {
                Op::True => vec![true; n],
                Op::Leaf(c) => trace.iter().map(|e| c.eval(e)).collect(),
                Op::Next(a) => (0..n).map(|i| i + 1 < n && vals[a][i + 1]).collect(),
                Op::Not(a) => vals[a].iter().map(|v| !v).collect(),
                Op::And(a, b) => (0..n).map(|i| vals[a][i] && vals[b][i]).collect(),
                Op::Until(a, b) => (0..n)
                    .map(|i| (i..n).any(|j| vals[b][j] && (i..j).all(|k| vals[a][k])))
                    .collect(),
            };
            vals.push(row);
        }
        vals.pop().unwrap_or_default()
    }
}

/// `σ, i ⊨ Φ` for a 1-based position `i`.
pub fn eval_ltlf(phi: &Ltlf, trace: &[Event], position: usize) -> Result<bool, PositionError> {
    if position == 0 || position > trace.len() {
        return Err(PositionError {
            position,
            len: trace.len(),
        });
    }
    Ok(Table::new(phi).eval(trace)[position - 1])
}

/// Whole-trace satisfaction, including the empty trace.
pub fn satisfies(phi: &Ltlf, trace: &[Event]) -> bool {
    if trace.is_empty() {
        phi.holds_on_empty()
    } else {
        Table::new(phi).eval(trace)[0]
    }
}

/// Reusable whole-trace evaluator for one formula.
pub struct Evaluator<'a> {
    phi: &'a Ltlf,
    table: Table<'a>,
}

impl<'a> Evaluator<'a> {
    pub fn new(phi: &'a Ltlf) -> Self {
        Evaluator {
            phi,
            table: Table::new(phi),
        }
    }

    pub fn satisfies(&self, trace: &[Event]) -> bool {
        if trace.is_empty() {
            self.phi.holds_on_empty()
        } else {
            self.table.eval(trace)[0]
        }
    }
}

/// A declarative component of a hybrid process.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintDef {
    pub id: String,
    pub name: String,
    pub formula: Ltlf,
    pub cost: u64,
}
