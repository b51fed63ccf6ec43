//! LTLf to automaton by progression over truth tables.
//!
//! The atoms of a formula are the root, every `Ψ` under some `X Ψ`, every
//! until subformula, and the auxiliary "the trace is not over" (`⊤ U ⊤`).
//! Knowing which atoms hold on the remaining suffix determines the truth of
//! every subformula at the current position given the current event. A state
//! is a boolean function `f` over atom assignments with the invariant
//! "the root holds on `prefix · s` iff `f(atoms(s))`". Reading an event
//! substitutes the one-step unfolding of every atom into `f`; a state
//! accepts iff `f` holds on the assignment of the empty suffix.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::abstraction::{Domain, Letter};
use crate::condition::{Condition, ConditionError};
use crate::gfa::{Dfa, EdgeKind, Gfa, Label};

use super::Ltlf;

pub const DEFAULT_STATE_BOUND: usize = 100_000;

/// Upper bound on the number of atoms; states are tables of `2^atoms` bits.
pub const MAX_ATOMS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutomatonError {
    #[error("formula has {0} temporal atoms, above the limit of {MAX_ATOMS}")]
    TooManyAtoms(usize),
    #[error("formula has {0} distinct leaves, above the limit of 64")]
    TooManyLeaves(usize),
    #[error("automaton exceeds {0} states")]
    TooManyStates(usize),
    #[error(transparent)]
    Condition(#[from] ConditionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    True,
    Leaf(usize),
    Next(usize),
    Until(usize, usize),
    Not(usize),
    And(usize, usize),
}

/// Hash-consed formula graph.
#[derive(Default)]
struct Arena {
    nodes: Vec<Node>,
    ids: HashMap<Node, usize>,
    leaves: Vec<Condition>,
}

impl Arena {
    fn intern(&mut self, node: Node) -> usize {
        if let Some(&id) = self.ids.get(&node) {
            return id;
        }
        self.nodes.push(node);
        self.ids.insert(node, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn add(&mut self, phi: &Ltlf) -> usize {
        let node = match phi {
            Ltlf::True => Node::True,
            Ltlf::Leaf(c) => {
                let i = match self.leaves.iter().position(|l| l == c) {
                    Some(i) => i,
                    None => {
                        self.leaves.push(c.clone());
                        self.leaves.len() - 1
                    }
                };
                Node::Leaf(i)
            }
            Ltlf::Next(a) => Node::Next(self.add(a)),
            Ltlf::Not(a) => Node::Not(self.add(a)),
            Ltlf::Until(a, b) => {
                let a = self.add(a);
                Node::Until(a, self.add(b))
            }
            Ltlf::And(a, b) => {
                let a = self.add(a);
                Node::And(a, self.add(b))
            }
        };
        self.intern(node)
    }

    fn holds_on_empty(&self, id: usize) -> bool {
        match self.nodes[id] {
            Node::True => true,
            Node::Leaf(_) | Node::Next(_) | Node::Until(..) => false,
            Node::Not(a) => !self.holds_on_empty(a),
            Node::And(a, b) => self.holds_on_empty(a) && self.holds_on_empty(b),
        }
    }
}

struct Progression<'a> {
    arena: &'a Arena,
    /// Atom index of a node, if it is an atom.
    atom_of: Vec<Option<usize>>,
    nonempty: usize,
}

impl Progression<'_> {
    fn bit(b: u32, atom: usize) -> bool {
        b >> atom & 1 == 1
    }

    /// Truth of `id` at the current position, given the leaf valuation of
    /// the current event and the atom assignment `b` of the rest.
    fn eval(&self, id: usize, leaves: u64, b: u32) -> bool {
        match self.arena.nodes[id] {
            Node::True => true,
            Node::Leaf(i) => leaves >> i & 1 == 1,
            Node::Not(a) => !self.eval(a, leaves, b),
            Node::And(x, y) => self.eval(x, leaves, b) && self.eval(y, leaves, b),
            Node::Next(a) => {
                Self::bit(b, self.nonempty)
                    && Self::bit(b, self.atom_of[a].expect("next operand is an atom"))
            }
            Node::Until(x, y) => {
                self.eval(y, leaves, b)
                    || (self.eval(x, leaves, b)
                        && Self::bit(b, self.atom_of[id].expect("until is an atom")))
            }
        }
    }
}

/// Compiles a formula to a minimal, deterministic, complete automaton over the
/// domain's letters; letters sharing a leaf valuation share an edge labeled
/// with the corresponding conjunction of leaf literals.
pub fn ltlf_to_gfa(phi: &Ltlf, domain: &Arc<Domain>, bound: usize) -> Result<Gfa, AutomatonError> {
    let mut arena = Arena::default();
    let root = arena.add(phi);
    let t = arena.intern(Node::True);
    let nonempty_node = arena.intern(Node::Until(t, t));

    let mut atoms = vec![root];
    for (id, node) in arena.nodes.iter().enumerate() {
        match *node {
            Node::Next(a) => atoms.push(a),
            Node::Until(..) => atoms.push(id),
            _ => {}
        }
    }
    atoms.push(nonempty_node);
    let mut seen = vec![false; arena.nodes.len()];
    atoms.retain(|&a| !std::mem::replace(&mut seen[a], true));
    let k = atoms.len();
    if k > MAX_ATOMS {
        return Err(AutomatonError::TooManyAtoms(k));
    }
    if arena.leaves.len() > 64 {
        return Err(AutomatonError::TooManyLeaves(arena.leaves.len()));
    }
    let mut atom_of = vec![None; arena.nodes.len()];
    for (i, &a) in atoms.iter().enumerate() {
        atom_of[a] = Some(i);
    }
    let prog = Progression {
        arena: &arena,
        atom_of,
        nonempty: atom_of_index(&atoms, nonempty_node),
    };

    // group letters by leaf valuation
    let mut classes: Vec<(u64, Vec<Letter>)> = Vec::new();
    let mut class_of: HashMap<u64, usize> = HashMap::new();
    for (letter, ev) in domain.letters() {
        let mut val = 0u64;
        for (i, leaf) in arena.leaves.iter().enumerate() {
            if domain.satisfies(&ev, leaf)? {
                val |= 1 << i;
            }
        }
        let idx = *class_of.entry(val).or_insert_with(|| {
            classes.push((val, Vec::new()));
            classes.len() - 1
        });
        classes[idx].1.push(letter);
    }

    let size = 1usize << k;
    // per class, the atom assignment seen "one step earlier"
    let substitutions: Vec<Vec<u32>> = classes
        .iter()
        .map(|(val, _)| {
            (0..size as u32)
                .map(|b| {
                    atoms.iter().enumerate().fold(0u32, |acc, (i, &a)| {
                        acc | (u32::from(prog.eval(a, *val, b)) << i)
                    })
                })
                .collect()
        })
        .collect();
    let empty_suffix = atoms.iter().enumerate().fold(0usize, |acc, (i, &a)| {
        acc | (usize::from(arena.holds_on_empty(a)) << i)
    });

    let words = size.div_ceil(64);
    let get = |t: &[u64], b: usize| t[b / 64] >> (b % 64) & 1 == 1;
    let mut initial = vec![0u64; words];
    let root_atom = 0;
    for b in 0..size {
        if b >> root_atom & 1 == 1 {
            initial[b / 64] |= 1 << (b % 64);
        }
    }

    let mut gfa = Gfa::new(domain.clone());
    let mut ids: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut tables: Vec<Vec<u64>> = Vec::new();
    let accepting = |t: &[u64]| get(t, empty_suffix);
    gfa.add_state("s0", accepting(&initial));
    ids.insert(initial.clone(), 0);
    tables.push(initial);
    let leaf_literals: Vec<Condition> = classes
        .iter()
        .map(|(val, _)| {
            Condition::conjunction(arena.leaves.iter().enumerate().map(|(i, leaf)| {
                if val >> i & 1 == 1 {
                    leaf.clone()
                } else {
                    leaf.clone().negate()
                }
            }))
        })
        .collect();

    let mut q = 0;
    while q < tables.len() {
        for (ci, (_, letters)) in classes.iter().enumerate() {
            let sub = &substitutions[ci];
            let mut next = vec![0u64; words];
            for b in 0..size {
                if get(&tables[q], sub[b] as usize) {
                    next[b / 64] |= 1 << (b % 64);
                }
            }
            let target = match ids.get(&next) {
                Some(&id) => id,
                None => {
                    if tables.len() >= bound {
                        return Err(AutomatonError::TooManyStates(bound));
                    }
                    let id = gfa.add_state(format!("s{}", tables.len()), accepting(&next));
                    ids.insert(next.clone(), id);
                    tables.push(next);
                    id
                }
            };
            gfa.add_guarded_letters(
                q,
                target,
                leaf_literals[ci].clone(),
                EdgeKind::Step,
                letters.clone(),
            );
        }
        q += 1;
    }
    Ok(quotient(&gfa))
}

/// Merges equivalent states, keeping the literal labels of one
/// representative per class. Tables over inconsistent atom assignments can
/// make distinct states that no trace tells apart.
fn quotient(raw: &Gfa) -> Gfa {
    let dfa = Dfa::from_gfa(raw).expect("progression is deterministic and complete");
    let (min, map) = dfa.minimize_with_map();
    let mut out = Gfa::new(raw.domain().clone());
    for c in 0..min.state_count() {
        out.add_state(format!("s{c}"), min.is_final(c));
    }
    out.set_initial(min.initial());
    let mut done = vec![false; min.state_count()];
    for q in 0..raw.state_count() {
        let Some(c) = map[q] else { continue };
        if std::mem::replace(&mut done[c], true) {
            continue;
        }
        for e in raw.edges_from(q) {
            let Label::Guard(guard) = &e.label else {
                unreachable!("no silent moves")
            };
            let target = map[e.to].expect("successor of a reachable state");
            out.add_guarded_letters(c, target, guard.clone(), e.kind, e.letters.clone());
        }
    }
    out
}

fn atom_of_index(atoms: &[usize], node: usize) -> usize {
    atoms
        .iter()
        .position(|&a| a == node)
        .expect("auxiliary atom registered")
}
