use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::abstraction::{Domain, Letter};

use super::{label_states, Dfa, Gfa, LabelError, StateId, Verdict};

pub const DEFAULT_PRODUCT_BOUND: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProductError {
    #[error("component `{0}` is built over a different domain")]
    DomainMismatch(String),
    #[error("product exceeds {0} states")]
    TooManyStates(usize),
    #[error("component `{id}`: {source}")]
    Label { id: String, source: LabelError },
}

/// A local automaton entering the product: minimal, deterministic, complete,
/// with its state verdicts.
#[derive(Debug, Clone)]
pub struct ProductComponent {
    pub id: String,
    pub dfa: Dfa,
    pub verdicts: Vec<Verdict>,
}

impl ProductComponent {
    pub fn new(id: impl Into<String>, gfa: &Gfa) -> Result<Self, ProductError> {
        let id = id.into();
        let verdicts = label_states(gfa).map_err(|source| ProductError::Label {
            id: id.clone(),
            source,
        })?;
        let dfa = Dfa::from_gfa(gfa).expect("labeling succeeded");
        Ok(ProductComponent { id, dfa, verdicts })
    }
}

/// Reachable synchronous product, one edge per abstract letter.
#[derive(Debug, Clone)]
pub struct Product {
    domain: Arc<Domain>,
    components: Vec<ProductComponent>,
    tuples: Vec<StateId>,
    delta: Vec<StateId>,
    accepting: Vec<bool>,
    global: Vec<Verdict>,
}

pub fn product(
    domain: Arc<Domain>,
    components: Vec<ProductComponent>,
    bound: usize,
) -> Result<Product, ProductError> {
    for c in &components {
        if !Arc::ptr_eq(c.dfa.domain(), &domain) {
            return Err(ProductError::DomainMismatch(c.id.clone()));
        }
    }
    let n = components.len();
    let l = domain.letter_count();
    let start: Vec<StateId> = components.iter().map(|c| c.dfa.initial()).collect();
    let mut ids: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut tuples = start.clone();
    ids.insert(start, 0);
    let mut delta = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    let mut count = 1;
    while let Some(q) = queue.pop_front() {
        let here: Vec<StateId> = tuples[q * n..(q + 1) * n].to_vec();
        for x in 0..l {
            let next: Vec<StateId> = components
                .iter()
                .zip(&here)
                .map(|(c, &s)| c.dfa.step(s, x))
                .collect();
            let id = match ids.get(&next) {
                Some(&id) => id,
                None => {
                    if count >= bound {
                        return Err(ProductError::TooManyStates(bound));
                    }
                    let id = count;
                    count += 1;
                    tuples.extend_from_slice(&next);
                    ids.insert(next, id);
                    queue.push_back(id);
                    id
                }
            };
            // states are dequeued in id order, so rows are appended in order
            delta.push(id);
        }
    }
    let accepting: Vec<bool> = (0..count)
        .map(|q| {
            components
                .iter()
                .enumerate()
                .all(|(i, c)| c.dfa.is_final(tuples[q * n + i]))
        })
        .collect();
    let mut p = Product {
        domain,
        components,
        tuples,
        delta,
        accepting,
        global: Vec::new(),
    };
    p.global = p.compute_global();
    Ok(p)
}

impl Product {
    fn compute_global(&self) -> Vec<Verdict> {
        let live = self.coreachable();
        (0..self.state_count())
            .map(|q| {
                let locals = self.local_verdicts(q);
                if !live[q] {
                    Verdict::PermanentlyViolated
                } else if locals.iter().all(|&v| v == Verdict::PermanentlySatisfied) {
                    Verdict::PermanentlySatisfied
                } else if locals.iter().all(|&v| v == Verdict::TemporarilySatisfied) {
                    Verdict::TemporarilySatisfied
                } else {
                    Verdict::TemporarilyViolated
                }
            })
            .collect()
    }

    /// States from which an accepting state is reachable.
    pub fn coreachable(&self) -> Vec<bool> {
        let n = self.state_count();
        let mut rev = vec![Vec::new(); n];
        for q in 0..n {
            for &t in self.row(q) {
                rev[t].push(q);
            }
        }
        let mut live = self.accepting.clone();
        let mut queue: VecDeque<StateId> = (0..n).filter(|&q| live[q]).collect();
        while let Some(q) = queue.pop_front() {
            for &p in &rev[q] {
                if !live[p] {
                    live[p] = true;
                    queue.push_back(p);
                }
            }
        }
        live
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn components(&self) -> &[ProductComponent] {
        &self.components
    }

    pub fn initial(&self) -> StateId {
        0
    }

    pub fn state_count(&self) -> usize {
        self.accepting.len()
    }

    pub fn locals(&self, q: StateId) -> &[StateId] {
        let n = self.components.len();
        &self.tuples[q * n..(q + 1) * n]
    }

    pub fn local_verdicts(&self, q: StateId) -> Vec<Verdict> {
        self.components
            .iter()
            .zip(self.locals(q))
            .map(|(c, &s)| c.verdicts[s])
            .collect()
    }

    pub fn local_final(&self, q: StateId, component: usize) -> bool {
        self.components[component]
            .dfa
            .is_final(self.locals(q)[component])
    }

    pub fn global(&self, q: StateId) -> Verdict {
        self.global[q]
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting[q]
    }

    /// Globally permanently violated although no single component is.
    pub fn is_conflict(&self, q: StateId) -> bool {
        self.global[q] == Verdict::PermanentlyViolated
            && !self
                .local_verdicts(q)
                .contains(&Verdict::PermanentlyViolated)
    }

    pub fn step(&self, q: StateId, letter: Letter) -> StateId {
        self.delta[q * self.domain.letter_count() + letter]
    }

    pub fn row(&self, q: StateId) -> &[StateId] {
        let l = self.domain.letter_count();
        &self.delta[q * l..(q + 1) * l]
    }

    pub fn run(&self, word: &[Letter]) -> StateId {
        word.iter().fold(0, |q, &x| self.step(q, x))
    }

    pub fn accepts(&self, word: &[Letter]) -> bool {
        self.accepting[self.run(word)]
    }
}
