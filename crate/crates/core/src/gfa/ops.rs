use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use crate::abstraction::{Domain, Letter};

use super::{EdgeKind, Gfa, StateId};

/// A deterministic, complete automaton as a dense transition table.
#[derive(Debug, Clone)]
pub struct Dfa {
    domain: Arc<Domain>,
    initial: StateId,
    finals: Vec<bool>,
    delta: Vec<StateId>,
}

impl Dfa {
    /// Reads off the table of a deterministic, complete automaton.
    pub fn from_gfa(gfa: &Gfa) -> Option<Dfa> {
        if gfa.state_count() == 0 || !gfa.is_deterministic() {
            return None;
        }
        let l = gfa.domain().letter_count();
        let mut delta = vec![usize::MAX; gfa.state_count() * l];
        for e in gfa.edges() {
            for &x in &e.letters {
                delta[e.from * l + x] = e.to;
            }
        }
        if delta.contains(&usize::MAX) {
            return None;
        }
        Some(Dfa {
            domain: gfa.domain().clone(),
            initial: gfa.initial(),
            finals: gfa.finals().to_vec(),
            delta,
        })
    }

    /// One edge per (source, target) pair with the rendered letter set.
    pub fn to_gfa(&self) -> Gfa {
        let l = self.letters();
        let mut g = Gfa::new(self.domain.clone());
        for q in 0..self.state_count() {
            g.add_state(format!("q{q}"), self.finals[q]);
        }
        g.set_initial(self.initial);
        for q in 0..self.state_count() {
            let mut by_target: Vec<(StateId, Vec<Letter>)> = Vec::new();
            for x in 0..l {
                let t = self.step(q, x);
                match by_target.iter_mut().find(|(s, _)| *s == t) {
                    Some((_, ls)) => ls.push(x),
                    None => by_target.push((t, vec![x])),
                }
            }
            for (t, ls) in by_target {
                g.add_letters(q, t, ls, EdgeKind::Step);
            }
        }
        g
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn letters(&self) -> usize {
        self.domain.letter_count()
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

    pub fn step(&self, q: StateId, letter: Letter) -> StateId {
        self.delta[q * self.letters() + letter]
    }

    pub fn row(&self, q: StateId) -> &[StateId] {
        let l = self.letters();
        &self.delta[q * l..(q + 1) * l]
    }

    pub fn run(&self, word: &[Letter]) -> StateId {
        word.iter().fold(self.initial, |q, &x| self.step(q, x))
    }

    pub fn accepts(&self, word: &[Letter]) -> bool {
        self.finals[self.run(word)]
    }

    /// Reachable states renumbered in breadth-first order from the initial
    /// state, exploring letters in ascending order, with the old-to-new map.
    fn canonical(&self) -> (Dfa, Vec<Option<StateId>>) {
        let l = self.letters();
        let mut map = vec![None; self.state_count()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([self.initial]);
        map[self.initial] = Some(0);
        order.push(self.initial);
        while let Some(q) = queue.pop_front() {
            for x in 0..l {
                let t = self.step(q, x);
                if map[t].is_none() {
                    map[t] = Some(order.len());
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        let mut delta = Vec::with_capacity(order.len() * l);
        for &q in &order {
            delta.extend(self.row(q).iter().map(|&t| map[t].expect("reachable")));
        }
        let dfa = Dfa {
            domain: self.domain.clone(),
            initial: 0,
            finals: order.iter().map(|&q| self.finals[q]).collect(),
            delta,
        };
        (dfa, map)
    }

    /// The minimal equivalent automaton, canonically numbered.
    pub fn minimize(&self) -> Dfa {
        self.minimize_with_map().0
    }

    /// Like [`Dfa::minimize`], also mapping every reachable state to its
    /// class.
    pub fn minimize_with_map(&self) -> (Dfa, Vec<Option<StateId>>) {
        let (dfa, reach) = self.canonical();
        let n = dfa.state_count();
        let l = dfa.letters();
        let mut class: Vec<usize> = dfa.finals.iter().map(|&f| usize::from(f)).collect();
        let mut count = class.iter().copied().max().map_or(0, |m| m + 1);
        loop {
            let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
            let mut next = vec![0; n];
            for q in 0..n {
                let mut sig = Vec::with_capacity(l + 1);
                sig.push(class[q]);
                sig.extend(dfa.row(q).iter().map(|&t| class[t]));
                let fresh = ids.len();
                next[q] = *ids.entry(sig).or_insert(fresh);
            }
            let new_count = ids.len();
            class = next;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        let mut finals = vec![false; count];
        let mut delta = vec![0; count * l];
        for q in 0..n {
            finals[class[q]] = dfa.finals[q];
            for x in 0..l {
                delta[class[q] * l + x] = class[dfa.step(q, x)];
            }
        }
        let quotient = Dfa {
            domain: dfa.domain.clone(),
            initial: class[dfa.initial],
            finals,
            delta,
        };
        let (min, renumber) = quotient.canonical();
        let map = reach
            .iter()
            .map(|r| r.map(|q| renumber[class[q]].expect("quotient is reachable")))
            .collect();
        (min, map)
    }
}

/// Subset construction. The result is deterministic and complete: the empty
/// subset becomes a rejecting sink when some letter has no successor.
pub fn determinize(gfa: &Gfa) -> Gfa {
    subset_dfa(gfa).to_gfa()
}

pub(crate) fn subset_dfa(gfa: &Gfa) -> Dfa {
    let moves = gfa.moves();
    let l = gfa.domain().letter_count();
    let start = if gfa.state_count() == 0 {
        Vec::new()
    } else {
        moves.close([gfa.initial()])
    };
    let mut ids: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut sets = vec![start.clone()];
    ids.insert(start, 0);
    let mut delta = Vec::new();
    let mut i = 0;
    while i < sets.len() {
        let set = sets[i].clone();
        for x in 0..l {
            let next = moves.step(&set, x);
            let id = match ids.get(&next) {
                Some(&id) => id,
                None => {
                    let id = sets.len();
                    ids.insert(next.clone(), id);
                    sets.push(next);
                    id
                }
            };
            delta.push(id);
        }
        i += 1;
    }
    Dfa {
        domain: gfa.domain().clone(),
        initial: 0,
        finals: sets
            .iter()
            .map(|s| s.iter().any(|&q| gfa.is_final(q)))
            .collect(),
        delta,
    }
}

/// Routes every letter a state cannot read to a fresh rejecting trap.
/// Returns the input unchanged when it is already complete.
pub fn complete(gfa: &Gfa) -> Gfa {
    let uncovered = gfa.uncovered();
    if uncovered.iter().all(Vec::is_empty) {
        return gfa.clone();
    }
    let mut out = gfa.clone();
    let trap = out.add_state("trap", false);
    let all: Vec<Letter> = (0..gfa.domain().letter_count()).collect();
    out.add_letters(trap, trap, all, EdgeKind::Completion);
    for (q, letters) in uncovered.into_iter().enumerate() {
        if !letters.is_empty() {
            out.add_letters(q, trap, letters, EdgeKind::Completion);
        }
    }
    out
}

/// The minimal deterministic complete automaton for the same language.
pub fn minimize(gfa: &Gfa) -> Gfa {
    match Dfa::from_gfa(gfa) {
        Some(dfa) => dfa.minimize().to_gfa(),
        None => subset_dfa(gfa).minimize().to_gfa(),
    }
}
