//! Events, traces, and the condition/guard languages over event signatures.
//!
//! Conditions are boolean combinations of activity-name atoms and
//! attribute-to-constant comparisons. Only `<`, `=` and `>` are stored; the
//! remaining operators are rewritten into negations when parsed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use ordered_float::OrderedFloat;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttrId(pub u32);

impl ActivityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl AttrId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignatureError {
    #[error("duplicate activity name `{0}`")]
    DuplicateActivity(String),
    #[error("activity `{activity}` lists attribute `{attribute}` twice")]
    DuplicateAttribute { activity: String, attribute: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EventError {
    #[error("unknown activity `{0}`")]
    UnknownActivity(String),
    #[error("payload of `{activity}` does not match its signature: {detail}")]
    PayloadMismatch { activity: String, detail: String },
    #[error("attribute `{attribute}` carries a non-finite value")]
    NonFinite { attribute: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error("guards may not mention activity names")]
    ActivityInGuard,
    #[error("valuation has no value for variable `{0}`")]
    MissingVariable(String),
    #[error("constant {0} is not part of the collected constant set")]
    ConstantNotCollected(f64),
}

/// An activity name together with the attributes its events carry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub name: String,
    /// Sorted by id.
    pub attributes: Vec<AttrId>,
}

/// The finite set `E` of event signatures, with interned activity and
/// attribute names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signatures {
    activities: Vec<Signature>,
    attributes: Vec<String>,
    activity_index: HashMap<String, ActivityId>,
    attribute_index: HashMap<String, AttrId>,
}

impl Signatures {
    pub fn new<'a, I, A>(defs: I) -> Result<Self, SignatureError>
    where
        I: IntoIterator<Item = (&'a str, A)>,
        A: IntoIterator<Item = &'a str>,
    {
        let mut sigs = Signatures::default();
        for (name, attrs) in defs {
            if sigs.activity_index.contains_key(name) {
                return Err(SignatureError::DuplicateActivity(name.to_string()));
            }
            let mut ids = Vec::new();
            for attr in attrs {
                let id = sigs.intern_attribute(attr);
                if ids.contains(&id) {
                    return Err(SignatureError::DuplicateAttribute {
                        activity: name.to_string(),
                        attribute: attr.to_string(),
                    });
                }
                ids.push(id);
            }
            ids.sort();
            let id = ActivityId(sigs.activities.len() as u32);
            sigs.activity_index.insert(name.to_string(), id);
            sigs.activities.push(Signature {
                name: name.to_string(),
                attributes: ids,
            });
        }
        Ok(sigs)
    }

    fn intern_attribute(&mut self, name: &str) -> AttrId {
        if let Some(&id) = self.attribute_index.get(name) {
            return id;
        }
        let id = AttrId(self.attributes.len() as u32);
        self.attributes.push(name.to_string());
        self.attribute_index.insert(name.to_string(), id);
        id
    }

    pub fn activity(&self, name: &str) -> Option<ActivityId> {
        self.activity_index.get(name).copied()
    }

    pub fn attribute(&self, name: &str) -> Option<AttrId> {
        self.attribute_index.get(name).copied()
    }

    pub fn signature(&self, id: ActivityId) -> &Signature {
        &self.activities[id.index()]
    }

    pub fn activity_name(&self, id: ActivityId) -> &str {
        &self.activities[id.index()].name
    }

    pub fn attribute_name(&self, id: AttrId) -> &str {
        &self.attributes[id.index()]
    }

    pub fn activities(&self) -> impl Iterator<Item = (ActivityId, &Signature)> {
        self.activities
            .iter()
            .enumerate()
            .map(|(i, s)| (ActivityId(i as u32), s))
    }

    pub fn attributes(&self) -> impl Iterator<Item = (AttrId, &str)> {
        self.attributes
            .iter()
            .enumerate()
            .map(|(i, s)| (AttrId(i as u32), s.as_str()))
    }

    pub fn activity_count(&self) -> usize {
        self.activities.len()
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }
}

/// A concrete event `⟨n, ν⟩`. The payload is sorted by attribute id.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub activity: ActivityId,
    pub payload: Vec<(AttrId, f64)>,
}

pub type Trace = Vec<Event>;

impl Event {
    /// Builds an event without checking it against a signature set. The
    /// payload is sorted.
    pub fn new(activity: ActivityId, payload: impl IntoIterator<Item = (AttrId, f64)>) -> Self {
        let mut payload: Vec<_> = payload.into_iter().collect();
        payload.sort_by_key(|(a, _)| *a);
        Event { activity, payload }
    }

    /// Builds an event whose payload covers exactly the attributes of the
    /// activity's signature.
    pub fn checked(
        sigs: &Signatures,
        activity: &str,
        payload: impl IntoIterator<Item = (AttrId, f64)>,
    ) -> Result<Self, EventError> {
        let id = sigs
            .activity(activity)
            .ok_or_else(|| EventError::UnknownActivity(activity.to_string()))?;
        let event = Event::new(id, payload);
        event.check(sigs)?;
        Ok(event)
    }

    pub fn check(&self, sigs: &Signatures) -> Result<(), EventError> {
        if self.activity.index() >= sigs.activity_count() {
            return Err(EventError::UnknownActivity(format!("#{}", self.activity.0)));
        }
        let sig = sigs.signature(self.activity);
        let keys: Vec<AttrId> = self.payload.iter().map(|(a, _)| *a).collect();
        if keys != sig.attributes {
            let expected: Vec<&str> = sig
                .attributes
                .iter()
                .map(|a| sigs.attribute_name(*a))
                .collect();
            let got: Vec<&str> = keys
                .iter()
                .map(|a| {
                    if a.index() < sigs.attribute_count() {
                        sigs.attribute_name(*a)
                    } else {
                        "?"
                    }
                })
                .collect();
            return Err(EventError::PayloadMismatch {
                activity: sig.name.clone(),
                detail: format!("expected attributes {expected:?}, got {got:?}"),
            });
        }
        if let Some((a, _)) = self.payload.iter().find(|(_, v)| !v.is_finite()) {
            return Err(EventError::NonFinite {
                attribute: sigs.attribute_name(*a).to_string(),
            });
        }
        Ok(())
    }

    pub fn value(&self, attr: AttrId) -> Option<f64> {
        self.payload
            .binary_search_by_key(&attr, |(a, _)| *a)
            .ok()
            .map(|i| self.payload[i].1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Eq,
    Gt,
}

impl CmpOp {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
            CmpOp::Gt => ">",
        }
    }
}

/// A condition from the language `L_E`. The `True` constructor stands for
/// the empty conjunction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    True,
    Activity(ActivityId),
    Cmp {
        attr: AttrId,
        op: CmpOp,
        value: OrderedFloat<f64>,
    },
    Not(Box<Condition>),
    And(Box<Condition>, Box<Condition>),
}

impl Condition {
    pub fn cmp(attr: AttrId, op: CmpOp, value: f64) -> Self {
        // -0.0 and 0.0 are the same constant
        let value = if value == 0.0 { 0.0 } else { value };
        Condition::Cmp {
            attr,
            op,
            value: OrderedFloat(value),
        }
    }

    pub fn negate(self) -> Self {
        Condition::Not(Box::new(self))
    }

    pub fn and(self, other: Condition) -> Self {
        Condition::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Condition) -> Self {
        self.negate().and(other.negate()).negate()
    }

    pub fn implies(self, other: Condition) -> Self {
        self.negate().or(other)
    }

    pub fn falsum() -> Self {
        Condition::True.negate()
    }

    /// Left-nested conjunction; `True` for an empty iterator.
    pub fn conjunction(items: impl IntoIterator<Item = Condition>) -> Self {
        items
            .into_iter()
            .reduce(Condition::and)
            .unwrap_or(Condition::True)
    }

    /// Left-nested disjunction; false for an empty iterator.
    pub fn disjunction(items: impl IntoIterator<Item = Condition>) -> Self {
        items
            .into_iter()
            .reduce(Condition::or)
            .unwrap_or_else(Condition::falsum)
    }

    pub fn is_atomic(&self) -> bool {
        matches!(
            self,
            Condition::True | Condition::Activity(_) | Condition::Cmp { .. }
        )
    }

    /// Evaluates the boolean structure, delegating atoms (`Activity` and
    /// `Cmp`) to `atom`.
    pub fn eval_by<E>(
        &self,
        atom: &mut impl FnMut(&Condition) -> Result<bool, E>,
    ) -> Result<bool, E> {
        match self {
            Condition::True => Ok(true),
            Condition::Activity(_) | Condition::Cmp { .. } => atom(self),
            Condition::Not(inner) => Ok(!inner.eval_by(atom)?),
            Condition::And(l, r) => Ok(l.eval_by(atom)? && r.eval_by(atom)?),
        }
    }

    /// `e ⊨ φ`. Comparisons on attributes the event does not carry are false.
    pub fn eval(&self, event: &Event) -> bool {
        let res: Result<bool, std::convert::Infallible> = self.eval_by(&mut |atom| {
            Ok(match atom {
                Condition::Activity(a) => *a == event.activity,
                Condition::Cmp { attr, op, value } => event
                    .value(*attr)
                    .is_some_and(|v| op.holds(v, value.into_inner())),
                _ => unreachable!(),
            })
        });
        match res {
            Ok(b) => b,
            Err(never) => match never {},
        }
    }

    pub fn mentions_activity(&self) -> bool {
        match self {
            Condition::Activity(_) => true,
            Condition::True | Condition::Cmp { .. } => false,
            Condition::Not(c) => c.mentions_activity(),
            Condition::And(l, r) => l.mentions_activity() || r.mentions_activity(),
        }
    }

    pub fn collect_constants(&self, out: &mut BTreeSet<OrderedFloat<f64>>) {
        match self {
            Condition::Cmp { value, .. } => {
                out.insert(*value);
            }
            Condition::True | Condition::Activity(_) => {}
            Condition::Not(c) => c.collect_constants(out),
            Condition::And(l, r) => {
                l.collect_constants(out);
                r.collect_constants(out);
            }
        }
    }

    pub fn collect_attributes(&self, out: &mut BTreeSet<AttrId>) {
        match self {
            Condition::Cmp { attr, .. } => {
                out.insert(*attr);
            }
            Condition::True | Condition::Activity(_) => {}
            Condition::Not(c) => c.collect_attributes(out),
            Condition::And(l, r) => {
                l.collect_attributes(out);
                r.collect_attributes(out);
            }
        }
    }

    pub fn display<'a>(&'a self, sigs: &'a Signatures) -> DisplayCondition<'a> {
        DisplayCondition { cond: self, sigs }
    }
}

/// Printer whose output parses back to the same tree.
pub struct DisplayCondition<'a> {
    cond: &'a Condition,
    sigs: &'a Signatures,
}

impl fmt::Display for DisplayCondition<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_condition(self.cond, self.sigs, f)
    }
}

fn write_condition(c: &Condition, sigs: &Signatures, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match c {
        Condition::True => write!(f, "true"),
        Condition::Activity(a) => write!(f, "{}", sigs.activity_name(*a)),
        Condition::Cmp { attr, op, value } => write!(
            f,
            "{} {} {}",
            sigs.attribute_name(*attr),
            op.symbol(),
            value.into_inner()
        ),
        Condition::Not(inner) => match inner.as_ref() {
            Condition::Activity(_) | Condition::True => {
                write!(f, "!")?;
                write_condition(inner, sigs, f)
            }
            Condition::Cmp { .. } => {
                write!(f, "!(")?;
                write_condition(inner, sigs, f)?;
                write!(f, ")")
            }
            _ => {
                write!(f, "!")?;
                write_condition(inner, sigs, f)
            }
        },
        Condition::And(l, r) => {
            write!(f, "(")?;
            write_condition(l, sigs, f)?;
            write!(f, " & ")?;
            write_condition(r, sigs, f)?;
            write!(f, ")")
        }
    }
}

/// A condition mentioning no activity names, used as a read or write guard.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Guard(Condition);

impl Guard {
    pub fn new(cond: Condition) -> Result<Self, ConditionError> {
        if cond.mentions_activity() {
            return Err(ConditionError::ActivityInGuard);
        }
        Ok(Guard(cond))
    }

    pub fn trivial() -> Self {
        Guard(Condition::True)
    }

    pub fn condition(&self) -> &Condition {
        &self.0
    }

    /// `Var(γ)`.
    pub fn variables(&self) -> BTreeSet<AttrId> {
        let mut out = BTreeSet::new();
        self.0.collect_attributes(&mut out);
        out
    }

    /// True when the guard mentions no variable and holds, i.e. `γ ≡ ⊤`.
    pub fn is_trivial(&self) -> bool {
        self.variables().is_empty() && self.eval_with(|_| None).unwrap_or(false)
    }

    pub fn eval_with(&self, lookup: impl Fn(AttrId) -> Option<f64>) -> Result<bool, AttrId> {
        self.0.eval_by(&mut |atom| match atom {
            Condition::Cmp { attr, op, value } => lookup(*attr)
                .map(|v| op.holds(v, value.into_inner()))
                .ok_or(*attr),
            _ => unreachable!("guards carry no activity atoms"),
        })
    }

    /// `α ⊨ γ` for a valuation defined on every variable of the guard.
    pub fn eval(
        &self,
        valuation: &BTreeMap<AttrId, f64>,
        sigs: &Signatures,
    ) -> Result<bool, ConditionError> {
        self.eval_with(|a| valuation.get(&a).copied())
            .map_err(|a| ConditionError::MissingVariable(sigs.attribute_name(a).to_string()))
    }
}
