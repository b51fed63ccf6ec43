//! Guarded finite-state automata.
//!
//! Every process component compiles to a [`Gfa`]: a finite automaton whose
//! edges carry conditions over the shared [`Domain`]. Each guard is resolved
//! once, when the edge is added, into the sorted set of abstract letters it
//! admits; all algorithms work on those letter sets, and guards are kept for
//! display.

mod dot;
mod ops;
mod product;
mod verdict;

use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use crate::abstraction::{Domain, Letter};
use crate::condition::{Condition, ConditionError};

pub use dot::{gfa_to_dot, product_to_dot};
pub use ops::{complete, determinize, minimize, Dfa};
pub use product::{product, Product, ProductComponent, ProductError, DEFAULT_PRODUCT_BOUND};
pub use verdict::{label_states, reachability_verdicts, LabelError, Verdict};

pub type StateId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Label {
    /// A silent move, consuming no event.
    Tau,
    Guard(Condition),
}

/// Why an edge exists. Purely informational; acceptance ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Step,
    Skip,
    ReadDeadlock,
    WriteDeadlock,
    Completion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: StateId,
    pub to: StateId,
    pub label: Label,
    pub kind: EdgeKind,
    /// Letters admitted by the guard, ascending. Empty for `Tau`.
    pub letters: Vec<Letter>,
}

#[derive(Debug, Clone)]
pub struct Gfa {
    domain: Arc<Domain>,
    initial: StateId,
    finals: Vec<bool>,
    names: Vec<String>,
    edges: Vec<Edge>,
}

impl Gfa {
    /// An automaton with no states yet; the first state added is initial.
    pub fn new(domain: Arc<Domain>) -> Self {
        Gfa {
            domain,
            initial: 0,
            finals: Vec::new(),
            names: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn add_state(&mut self, name: impl Into<String>, accepting: bool) -> StateId {
        self.finals.push(accepting);
        self.names.push(name.into());
        self.finals.len() - 1
    }

    pub fn set_initial(&mut self, q: StateId) {
        assert!(q < self.state_count());
        self.initial = q;
    }

    pub fn set_final(&mut self, q: StateId, accepting: bool) {
        self.finals[q] = accepting;
    }

    pub fn add_tau(&mut self, from: StateId, to: StateId) {
        self.edges.push(Edge {
            from,
            to,
            label: Label::Tau,
            kind: EdgeKind::Step,
            letters: Vec::new(),
        });
    }

    /// Adds a guarded edge. Edges whose guard no letter satisfies are
    /// dropped; the return value says whether the edge was kept.
    pub fn add_edge(
        &mut self,
        from: StateId,
        to: StateId,
        guard: Condition,
        kind: EdgeKind,
    ) -> Result<bool, ConditionError> {
        let letters = self.domain.letters_satisfying(&guard)?;
        Ok(self.push_guarded(from, to, guard, kind, letters))
    }

    /// Adds an edge for a known letter set, rendering its guard.
    pub fn add_letters(
        &mut self,
        from: StateId,
        to: StateId,
        mut letters: Vec<Letter>,
        kind: EdgeKind,
    ) -> bool {
        letters.sort_unstable();
        letters.dedup();
        let guard = self.domain.condition_for_letters(&letters);
        self.push_guarded(from, to, guard, kind, letters)
    }

    /// Adds an edge whose letter set the caller has already resolved.
    pub(crate) fn add_guarded_letters(
        &mut self,
        from: StateId,
        to: StateId,
        guard: Condition,
        kind: EdgeKind,
        letters: Vec<Letter>,
    ) -> bool {
        self.push_guarded(from, to, guard, kind, letters)
    }

    fn push_guarded(
        &mut self,
        from: StateId,
        to: StateId,
        guard: Condition,
        kind: EdgeKind,
        letters: Vec<Letter>,
    ) -> bool {
        assert!(from < self.state_count() && to < self.state_count());
        if letters.is_empty() {
            return false;
        }
        self.edges.push(Edge {
            from,
            to,
            label: Label::Guard(guard),
            kind,
            letters,
        });
        true
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn state_count(&self) -> usize {
        self.finals.len()
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals[q]
    }

    pub fn finals(&self) -> &[bool] {
        &self.finals
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.names[q]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edges_from(&self, q: StateId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == q)
    }

    pub fn has_tau(&self) -> bool {
        self.edges.iter().any(|e| e.label == Label::Tau)
    }

    pub fn moves(&self) -> Moves {
        Moves::new(self)
    }

    /// Existential acceptance of an abstract trace.
    pub fn accepts(&self, word: &[Letter]) -> bool {
        self.moves().accepts(self, word)
    }

    /// Every state has, for every letter, an outgoing guarded edge admitting
    /// it.
    pub fn is_complete(&self) -> bool {
        self.uncovered().iter().all(Vec::is_empty)
    }

    /// Per state, the letters no outgoing guarded edge admits.
    pub fn uncovered(&self) -> Vec<Vec<Letter>> {
        let l = self.domain.letter_count();
        let mut covered = vec![vec![false; l]; self.state_count()];
        for e in &self.edges {
            for &x in &e.letters {
                covered[e.from][x] = true;
            }
        }
        covered
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, c)| !**c)
                    .map(|(x, _)| x)
                    .collect()
            })
            .collect()
    }

    /// No silent edges and at most one successor per state and letter.
    pub fn is_deterministic(&self) -> bool {
        if self.has_tau() {
            return false;
        }
        let l = self.domain.letter_count();
        let mut seen = vec![usize::MAX; self.state_count() * l];
        for e in &self.edges {
            for &x in &e.letters {
                let slot = &mut seen[e.from * l + x];
                if *slot != usize::MAX && *slot != e.to {
                    return false;
                }
                *slot = e.to;
            }
        }
        true
    }

    /// States reachable from the initial state, through any edge.
    pub fn reachable(&self) -> Vec<bool> {
        let mut adj = vec![Vec::new(); self.state_count()];
        for e in &self.edges {
            adj[e.from].push(e.to);
        }
        let mut seen = vec![false; self.state_count()];
        if self.state_count() == 0 {
            return seen;
        }
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(q) = queue.pop_front() {
            for &r in &adj[q] {
                if !seen[r] {
                    seen[r] = true;
                    queue.push_back(r);
                }
            }
        }
        seen
    }

    /// Drops states that are unreachable or cannot reach a final state.
    /// Ids are reassigned in ascending order of the survivors. The initial
    /// state is always kept.
    pub fn trim(&self) -> Gfa {
        let fwd = self.reachable();
        let mut rev = vec![Vec::new(); self.state_count()];
        for e in &self.edges {
            rev[e.to].push(e.from);
        }
        let mut co = self.finals.clone();
        let mut queue: VecDeque<StateId> = (0..self.state_count()).filter(|&q| co[q]).collect();
        while let Some(q) = queue.pop_front() {
            for &p in &rev[q] {
                if !co[p] {
                    co[p] = true;
                    queue.push_back(p);
                }
            }
        }
        let keep: Vec<bool> = (0..self.state_count())
            .map(|q| q == self.initial || (fwd[q] && co[q]))
            .collect();
        self.restrict(&keep)
    }

    pub(crate) fn restrict(&self, keep: &[bool]) -> Gfa {
        let mut map = vec![usize::MAX; self.state_count()];
        let mut out = Gfa::new(self.domain.clone());
        for q in 0..self.state_count() {
            if keep[q] {
                map[q] = out.add_state(self.names[q].clone(), self.finals[q]);
            }
        }
        out.initial = map[self.initial];
        for e in &self.edges {
            if keep[e.from] && keep[e.to] {
                out.edges.push(Edge {
                    from: map[e.from],
                    to: map[e.to],
                    ..e.clone()
                });
            }
        }
        out
    }
}

/// Letter-indexed successor lists with silent closures.
#[derive(Debug, Clone)]
pub struct Moves {
    letters: usize,
    succ: Vec<Vec<StateId>>,
    closure: Vec<Vec<StateId>>,
}

impl Moves {
    fn new(gfa: &Gfa) -> Self {
        let l = gfa.domain.letter_count();
        let n = gfa.state_count();
        let mut succ = vec![Vec::new(); n * l];
        let mut tau = vec![Vec::new(); n];
        for e in &gfa.edges {
            match e.label {
                Label::Tau => tau[e.from].push(e.to),
                Label::Guard(_) => {
                    for &x in &e.letters {
                        succ[e.from * l + x].push(e.to);
                    }
                }
            }
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        let closure = (0..n)
            .map(|q| {
                let mut seen = vec![false; n];
                seen[q] = true;
                let mut stack = vec![q];
                while let Some(p) = stack.pop() {
                    for &r in &tau[p] {
                        if !seen[r] {
                            seen[r] = true;
                            stack.push(r);
                        }
                    }
                }
                (0..n).filter(|&r| seen[r]).collect()
            })
            .collect();
        Moves {
            letters: l,
            succ,
            closure,
        }
    }

    pub fn successors(&self, q: StateId, letter: Letter) -> &[StateId] {
        &self.succ[q * self.letters + letter]
    }

    /// The silent closure of `q`, including `q`.
    pub fn closure(&self, q: StateId) -> &[StateId] {
        &self.closure[q]
    }

    /// Silent closure of a set, sorted.
    pub fn close(&self, set: impl IntoIterator<Item = StateId>) -> Vec<StateId> {
        let mut out: Vec<StateId> = set
            .into_iter()
            .flat_map(|q| self.closure[q].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Closed successor set of a closed set.
    pub fn step(&self, set: &[StateId], letter: Letter) -> Vec<StateId> {
        self.close(
            set.iter()
                .flat_map(|&q| self.successors(q, letter).iter().copied()),
        )
    }

    pub fn accepts(&self, gfa: &Gfa, word: &[Letter]) -> bool {
        if gfa.state_count() == 0 {
            return false;
        }
        let mut set = self.close([gfa.initial]);
        for &x in word {
            set = self.step(&set, x);
            if set.is_empty() {
                return false;
            }
        }
        set.iter().any(|&q| gfa.finals[q])
    }
}
