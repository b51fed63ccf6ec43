//! Data Petri nets with an initial state and a final marking.
//!
//! Transitions carry a read guard over the values a firing observes and a
//! write guard over the values it assigns. A visible transition labeled with
//! activity `n` writes exactly the attributes of `n`'s signature, taking the
//! values from the event; silent transitions write nothing. The net's
//! variables are the keys of its initial assignment.

mod compile;
mod compliance;
mod semantics;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::abstraction::{collect_constants, Partition};
use crate::condition::{ActivityId, AttrId, Condition, Guard, Signatures};

pub use compile::{
    add_completion, add_deadlock_loops, add_skip_loops, compile_dpnif, dpn_to_gfa, remove_tau,
    CompileError, NetAutomaton, DEFAULT_NET_BOUND,
};
pub use compliance::{trace_complies, ComplianceRun, SilentBudget};
pub use semantics::{AbstractState, Binding, NetView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaceId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransitionId(pub u32);

impl PlaceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TransitionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub name: String,
    /// `None` for a silent transition.
    pub label: Option<ActivityId>,
    pub read: Guard,
    pub write: Guard,
    pub inputs: Vec<(PlaceId, u32)>,
    pub outputs: Vec<(PlaceId, u32)>,
}

impl Transition {
    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }

    pub fn read_vars(&self) -> BTreeSet<AttrId> {
        self.read.variables()
    }

    pub fn write_vars(&self) -> BTreeSet<AttrId> {
        self.write.variables()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dpn {
    places: Vec<String>,
    transitions: Vec<Transition>,
}

impl Dpn {
    pub fn new() -> Self {
        Dpn::default()
    }

    pub fn add_place(&mut self, name: impl Into<String>) -> PlaceId {
        self.places.push(name.into());
        PlaceId((self.places.len() - 1) as u32)
    }

    pub fn add_transition(
        &mut self,
        name: impl Into<String>,
        label: Option<ActivityId>,
        read: Guard,
        write: Guard,
    ) -> TransitionId {
        self.transitions.push(Transition {
            name: name.into(),
            label,
            read,
            write,
            inputs: Vec::new(),
            outputs: Vec::new(),
        });
        TransitionId((self.transitions.len() - 1) as u32)
    }

    /// Arc from a place into a transition; repeated arcs add up.
    pub fn add_input(&mut self, t: TransitionId, p: PlaceId, weight: u32) {
        add_weight(&mut self.transitions[t.index()].inputs, p, weight);
    }

    /// Arc from a transition into a place; repeated arcs add up.
    pub fn add_output(&mut self, t: TransitionId, p: PlaceId, weight: u32) {
        add_weight(&mut self.transitions[t.index()].outputs, p, weight);
    }

    pub fn place(&self, name: &str) -> Option<PlaceId> {
        self.places
            .iter()
            .position(|p| p == name)
            .map(|i| PlaceId(i as u32))
    }

    pub fn place_name(&self, p: PlaceId) -> &str {
        &self.places[p.index()]
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn places(&self) -> impl Iterator<Item = (PlaceId, &str)> {
        self.places
            .iter()
            .enumerate()
            .map(|(i, n)| (PlaceId(i as u32), n.as_str()))
    }

    pub fn transition(&self, t: TransitionId) -> &Transition {
        &self.transitions[t.index()]
    }

    pub fn transition_by_name(&self, name: &str) -> Option<TransitionId> {
        self.transitions
            .iter()
            .position(|t| t.name == name)
            .map(|i| TransitionId(i as u32))
    }

    pub fn transitions(&self) -> impl Iterator<Item = (TransitionId, &Transition)> {
        self.transitions
            .iter()
            .enumerate()
            .map(|(i, t)| (TransitionId(i as u32), t))
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    /// Activities labeling some transition.
    pub fn labels(&self) -> BTreeSet<ActivityId> {
        self.transitions.iter().filter_map(|t| t.label).collect()
    }
}

fn add_weight(arcs: &mut Vec<(PlaceId, u32)>, p: PlaceId, weight: u32) {
    match arcs.iter_mut().find(|(q, _)| *q == p) {
        Some((_, w)) => *w += weight,
        None => {
            arcs.push((p, weight));
            arcs.sort_unstable();
        }
    }
}

/// Token counts per place.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(Vec<u32>);

impl Marking {
    pub fn empty(places: usize) -> Self {
        Marking(vec![0; places])
    }

    /// One token on each listed place.
    pub fn from_places(places: usize, marked: impl IntoIterator<Item = PlaceId>) -> Self {
        let mut m = Marking::empty(places);
        for p in marked {
            m.0[p.index()] += 1;
        }
        m
    }

    pub fn tokens(&self, p: PlaceId) -> u32 {
        self.0[p.index()]
    }

    pub fn marked(&self) -> impl Iterator<Item = PlaceId> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, _)| PlaceId(i as u32))
    }

    pub fn max_tokens(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn enables(&self, t: &Transition) -> bool {
        t.inputs.iter().all(|&(p, w)| self.0[p.index()] >= w)
    }

    /// `M - •t + t•`. The transition must be enabled.
    pub fn fire(&self, t: &Transition) -> Marking {
        let mut next = self.0.clone();
        for &(p, w) in &t.inputs {
            next[p.index()] -= w;
        }
        for &(p, w) in &t.outputs {
            next[p.index()] += w;
        }
        Marking(next)
    }

    pub fn display<'a>(&'a self, net: &'a Dpn) -> impl fmt::Display + 'a {
        DisplayMarking { m: self, net }
    }
}

struct DisplayMarking<'a> {
    m: &'a Marking,
    net: &'a Dpn,
}

impl fmt::Display for DisplayMarking<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (p, n)) in self
            .m
            .0
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .enumerate()
        {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.net.place_name(PlaceId(p as u32)))?;
            if *n > 1 {
                write!(f, "*{n}")?;
            }
        }
        write!(f, "}}")
    }
}

/// A net with an initial state and a final marking.
#[derive(Debug, Clone, PartialEq)]
pub struct Dpnif {
    pub id: String,
    pub net: Dpn,
    pub initial_marking: Marking,
    pub initial_assignment: BTreeMap<AttrId, f64>,
    pub final_marking: Marking,
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Issue {
    ArcWeight {
        transition: String,
        place: String,
        weight: u32,
    },
    UnknownVariable {
        transition: String,
        variable: String,
    },
    WriteMismatch {
        transition: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    SilentWrite {
        transition: String,
    },
    Unsafe {
        place: String,
        witness: Vec<String>,
    },
    ExplorationLimit {
        bound: usize,
    },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::ArcWeight {
                transition,
                place,
                weight,
            } => write!(
                f,
                "arc between `{place}` and `{transition}` has weight {weight}; only 1 is supported"
            ),
            Issue::UnknownVariable {
                transition,
                variable,
            } => write!(
                f,
                "transition `{transition}` uses `{variable}`, which has no initial value"
            ),
            Issue::WriteMismatch {
                transition,
                expected,
                found,
            } => write!(
                f,
                "write guard of `{transition}` must mention exactly [{}], found [{}]",
                expected.join(", "),
                found.join(", ")
            ),
            Issue::SilentWrite { transition } => {
                write!(f, "silent transition `{transition}` must have a trivial write guard")
            }
            Issue::Unsafe { place, witness } => write!(
                f,
                "place `{place}` can hold two tokens after firing [{}]",
                witness.join(", ")
            ),
            Issue::ExplorationLimit { bound } => {
                write!(f, "safety check gave up after {bound} states")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("net `{id}` is invalid: {}", issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct ValidationError {
    pub id: String,
    pub issues: Vec<Issue>,
}

impl Dpnif {
    /// `V`, ascending.
    pub fn variables(&self) -> Vec<AttrId> {
        self.initial_assignment.keys().copied().collect()
    }

    /// Read and write guards of every transition.
    pub fn guards(&self) -> impl Iterator<Item = &Condition> {
        self.net
            .transitions
            .iter()
            .flat_map(|t| [t.read.condition(), t.write.condition()])
    }

    pub fn initial_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.initial_assignment.values().copied()
    }

    /// Structural checks, then 1-safety by exhaustive exploration of the
    /// abstract state space induced by the net's own constants.
    pub fn validate(&self, sigs: &Signatures) -> Result<(), ValidationError> {
        let mut issues = self.structural_issues(sigs);
        if issues.is_empty() {
            issues.extend(self.safety_issue(DEFAULT_NET_BOUND));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ValidationError {
                id: self.id.clone(),
                issues,
            })
        }
    }

    fn structural_issues(&self, sigs: &Signatures) -> Vec<Issue> {
        let mut issues = Vec::new();
        let vars: BTreeSet<AttrId> = self.initial_assignment.keys().copied().collect();
        let names = |set: &BTreeSet<AttrId>| -> Vec<String> {
            set.iter()
                .map(|a| sigs.attribute_name(*a).to_string())
                .collect()
        };
        for t in &self.net.transitions {
            for (p, w) in t.inputs.iter().chain(&t.outputs) {
                if *w > 1 {
                    issues.push(Issue::ArcWeight {
                        transition: t.name.clone(),
                        place: self.net.place_name(*p).to_string(),
                        weight: *w,
                    });
                }
            }
            let used: BTreeSet<AttrId> = t.read_vars().union(&t.write_vars()).copied().collect();
            for v in used.difference(&vars) {
                issues.push(Issue::UnknownVariable {
                    transition: t.name.clone(),
                    variable: sigs.attribute_name(*v).to_string(),
                });
            }
            match t.label {
                Some(n) => {
                    let expected: BTreeSet<AttrId> =
                        sigs.signature(n).attributes.iter().copied().collect();
                    let found = t.write_vars();
                    if expected != found {
                        issues.push(Issue::WriteMismatch {
                            transition: t.name.clone(),
                            expected: names(&expected),
                            found: names(&found),
                        });
                    }
                }
                None => {
                    if !t.write.is_trivial() {
                        issues.push(Issue::SilentWrite {
                            transition: t.name.clone(),
                        });
                    }
                }
            }
        }
        if self.initial_marking.max_tokens() > 1 {
            let p = self
                .initial_marking
                .0
                .iter()
                .position(|&n| n > 1)
                .expect("some place holds two tokens");
            issues.push(Issue::Unsafe {
                place: self.net.place_name(PlaceId(p as u32)).to_string(),
                witness: Vec::new(),
            });
        }
        issues
    }

    fn safety_issue(&self, bound: usize) -> Option<Issue> {
        let constants = collect_constants(self.guards(), self.initial_values());
        let partition = Partition::new(&constants);
        let view = NetView::new(self, &partition).expect("constants collected from the net");
        let start = view.initial();
        let mut parent: HashMap<AbstractState, Option<(AbstractState, TransitionId)>> =
            HashMap::new();
        parent.insert(start.clone(), None);
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            for (t, beta) in view.enabled(&s) {
                let next = view.fire(&s, t, &beta);
                if parent.contains_key(&next) {
                    continue;
                }
                parent.insert(next.clone(), Some((s.clone(), t)));
                if let Some(p) = next.marking.0.iter().position(|&n| n > 1) {
                    let mut witness = Vec::new();
                    let mut cur = next.clone();
                    while let Some(Some((prev, t))) = parent.get(&cur) {
                        witness.push(self.net.transition(*t).name.clone());
                        cur = prev.clone();
                    }
                    witness.reverse();
                    return Some(Issue::Unsafe {
                        place: self.net.place_name(PlaceId(p as u32)).to_string(),
                        witness,
                    });
                }
                if parent.len() > bound {
                    return Some(Issue::ExplorationLimit { bound });
                }
                queue.push_back(next);
            }
        }
        None
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn scenario_nets_are_valid() {
        let sigs = scenario_signatures();
        assert_eq!(peptic_ulcer(&sigs).validate(&sigs), Ok(()));
        assert_eq!(venous_thrombosis(&sigs).validate(&sigs), Ok(()));
    }

    #[test]
    fn missing_write_guard_is_ill_formed() {
        let sigs = scenario_signatures();
        let mut pu = peptic_ulcer(&sigs);
        let t = pu.net.transition_by_name("HPev").unwrap();
        pu.net.transitions[t.index()].write = Guard::trivial();
        let err = pu.validate(&sigs).unwrap_err();
        assert!(matches!(
            &err.issues[..],
            [Issue::WriteMismatch { transition, .. }] if transition == "HPev"
        ));
    }

    #[test]
    fn token_doubling_is_unsafe() {
        let sigs = scenario_signatures();
        let mut net = Dpn::new();
        let a = net.add_place("a");
        let b = net.add_place("b");
        let c = net.add_place("c");
        let split = net.add_transition("split", None, Guard::trivial(), Guard::trivial());
        net.add_input(split, a, 1);
        net.add_output(split, b, 1);
        net.add_output(split, c, 1);
        let join = net.add_transition("merge", None, Guard::trivial(), Guard::trivial());
        net.add_input(join, b, 1);
        net.add_output(join, c, 1);
        let d = Dpnif {
            id: "bad".into(),
            initial_marking: Marking::from_places(3, [a]),
            final_marking: Marking::from_places(3, [c]),
            initial_assignment: BTreeMap::new(),
            net,
            cost: 0,
        };
        let err = d.validate(&sigs).unwrap_err();
        assert_eq!(
            err.issues,
            vec![Issue::Unsafe {
                place: "c".into(),
                witness: vec!["split".into(), "merge".into()],
            }]
        );
    }

    #[test]
    fn heavy_arcs_rejected() {
        let sigs = scenario_signatures();
        let mut net = Dpn::new();
        let a = net.add_place("a");
        let t = net.add_transition("t", None, Guard::trivial(), Guard::trivial());
        net.add_input(t, a, 1);
        net.add_input(t, a, 1);
        let d = Dpnif {
            id: "heavy".into(),
            initial_marking: Marking::from_places(1, [a]),
            final_marking: Marking::empty(1),
            initial_assignment: BTreeMap::new(),
            net,
            cost: 0,
        };
        assert!(matches!(
            d.validate(&sigs).unwrap_err().issues[..],
            [Issue::ArcWeight { weight: 2, .. }]
        ));
    }

    #[test]
    fn silent_writes_and_unknown_variables_reported() {
        let sigs = scenario_signatures();
        let result = sigs.attribute("result").unwrap();
        let ty = sigs.attribute("type").unwrap();
        let mut net = Dpn::new();
        let a = net.add_place("a");
        let t = net.add_transition(
            "t",
            None,
            Guard::new(Condition::cmp(ty, crate::condition::CmpOp::Gt, 0.0)).unwrap(),
            Guard::new(Condition::cmp(result, crate::condition::CmpOp::Gt, 0.0)).unwrap(),
        );
        net.add_input(t, a, 1);
        let d = Dpnif {
            id: "odd".into(),
            initial_marking: Marking::from_places(1, [a]),
            final_marking: Marking::empty(1),
            initial_assignment: BTreeMap::from([(result, 0.0)]),
            net,
            cost: 0,
        };
        let issues = d.validate(&sigs).unwrap_err().issues;
        assert!(issues.contains(&Issue::SilentWrite {
            transition: "t".into()
        }));
        assert!(issues.contains(&Issue::UnknownVariable {
            transition: "t".into(),
            variable: "type".into()
        }));
    }
}
