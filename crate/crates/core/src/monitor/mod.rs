//! Violation costs over the product, monitoring sessions, and best-next-event
//! recommendations.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::abstraction::{Domain, Letter};
use crate::condition::{Event, EventError};
use crate::gfa::{Product, StateId, Verdict};

/// Violation cost per component id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CostModel {
    costs: BTreeMap<String, u64>,
}

impl CostModel {
    pub fn new(costs: impl IntoIterator<Item = (String, u64)>) -> Self {
        CostModel {
            costs: costs.into_iter().collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<u64> {
        self.costs.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.costs.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CostError {
    #[error("no violation cost for component `{0}`")]
    Missing(String),
    #[error("violation costs overflow a 64-bit sum")]
    Overflow,
}

/// Current and best reachable cost per product state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostAnnotation {
    pub cur: Vec<u64>,
    pub best: Vec<u64>,
    /// Iterations computed, the last of which changed nothing.
    pub rounds: usize,
}

/// Minimum of `cur` over the states reachable from each state, by the
/// iteration `best' (q) = min({best(q') | q → q'} ∪ {cur(q)})` from
/// `best = cur`. `on_round` sees every iterate, starting with the initial
/// one.
pub fn cost_fixpoint_with<F, I>(
    cur: &[u64],
    successors: F,
    mut on_round: impl FnMut(&[u64]),
) -> CostAnnotation
where
    F: Fn(usize) -> I,
    I: IntoIterator<Item = usize>,
{
    let n = cur.len();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|q| {
            let mut s: Vec<usize> = successors(q).into_iter().collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let mut best = cur.to_vec();
    on_round(&best);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let next: Vec<u64> = (0..n)
            .map(|q| {
                succ[q]
                    .iter()
                    .map(|&r| best[r])
                    .fold(cur[q], u64::min)
            })
            .collect();
        assert!(
            next.iter().zip(&best).all(|(a, b)| a <= b),
            "cost iterates must not increase"
        );
        on_round(&next);
        if next == best {
            break;
        }
        best = next;
    }
    CostAnnotation {
        cur: cur.to_vec(),
        best,
        rounds,
    }
}

pub fn cost_fixpoint<F, I>(cur: &[u64], successors: F) -> CostAnnotation
where
    F: Fn(usize) -> I,
    I: IntoIterator<Item = usize>,
{
    cost_fixpoint_with(cur, successors, |_| {})
}

/// Per-component costs aligned with the product's components.
fn component_costs(product: &Product, costs: &CostModel) -> Result<Vec<u64>, CostError> {
    let list = product
        .components()
        .iter()
        .map(|c| costs.get(&c.id).ok_or_else(|| CostError::Missing(c.id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    list.iter()
        .try_fold(0u64, |acc, c| acc.checked_add(*c))
        .ok_or(CostError::Overflow)?;
    Ok(list)
}

/// `cost_cur(q)` charges every component whose local state is not final;
/// `cost_best` is its fixpoint minimum over reachable states.
pub fn annotate_costs(product: &Product, costs: &CostModel) -> Result<CostAnnotation, CostError> {
    let per = component_costs(product, costs)?;
    let cur: Vec<u64> = (0..product.state_count())
        .map(|q| {
            per.iter()
                .enumerate()
                .filter(|(i, _)| !product.local_final(q, *i))
                .map(|(_, c)| c)
                .sum()
        })
        .collect();
    Ok(cost_fixpoint(&cur, |q| product.row(q).iter().copied()))
}

/// The product with its verdicts and costs; immutable and shared between
/// sessions.
#[derive(Debug)]
pub struct MonitorAutomaton {
    product: Product,
    costs: CostAnnotation,
    component_costs: Vec<u64>,
}

impl MonitorAutomaton {
    pub fn new(product: Product, costs: &CostModel) -> Result<Self, CostError> {
        let annotation = annotate_costs(&product, costs)?;
        let component_costs = component_costs(&product, costs)?;
        Ok(MonitorAutomaton {
            product,
            costs: annotation,
            component_costs,
        })
    }

    pub fn product(&self) -> &Product {
        &self.product
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.product.domain()
    }

    pub fn costs(&self) -> &CostAnnotation {
        &self.costs
    }

    pub fn component_cost(&self, i: usize) -> u64 {
        self.component_costs[i]
    }

    pub fn cost_cur(&self, q: StateId) -> u64 {
        self.costs.cur[q]
    }

    pub fn cost_best(&self, q: StateId) -> u64 {
        self.costs.best[q]
    }

    pub fn component_ids(&self) -> impl Iterator<Item = &str> {
        self.product.components().iter().map(|c| c.id.as_str())
    }

    pub fn start(self: &Arc<Self>) -> MonitorSession {
        MonitorSession::new(self.clone())
    }

    /// Snapshot text for the state set, taken at the lowest-cost member.
    fn snapshot(
        &self,
        step: usize,
        event: Option<EventEcho>,
        frontier: &[StateId],
        conflict_before: bool,
    ) -> VerdictSnapshot {
        let q = self.focus(frontier)[0];
        let p = &self.product;
        let components = p
            .components()
            .iter()
            .zip(p.locals(q))
            .zip(p.local_verdicts(q))
            .map(|((c, &state), verdict)| ComponentVerdict {
                id: c.id.clone(),
                verdict,
                state,
            })
            .collect();
        let conflict = p.is_conflict(q);
        VerdictSnapshot {
            step,
            event,
            global: p.global(q),
            components,
            cost_cur: self.cost_cur(q),
            cost_best: self.cost_best(q),
            conflict,
            first_conflict: conflict && !conflict_before,
        }
    }

    /// `q̂`: the frontier states of minimal best cost, ascending.
    fn focus(&self, frontier: &[StateId]) -> Vec<StateId> {
        let min = frontier
            .iter()
            .map(|&q| self.cost_best(q))
            .min()
            .expect("frontier is never empty");
        frontier
            .iter()
            .copied()
            .filter(|&q| self.cost_best(q) == min)
            .collect()
    }

    pub fn echo(&self, e: &Event) -> EventEcho {
        let domain = self.domain();
        let sigs = domain.signatures();
        let attrs = e
            .payload
            .iter()
            .map(|(a, v)| {
                let value = match domain.enums().label(*a, *v) {
                    Some(label) => serde_json::Value::String(label.to_string()),
                    None => number(*v),
                };
                (sigs.attribute_name(*a).to_string(), value)
            })
            .collect();
        EventEcho {
            name: sigs.activity_name(e.activity).to_string(),
            attrs,
        }
    }
}

fn number(v: f64) -> serde_json::Value {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        serde_json::Value::from(v as i64)
    } else {
        serde_json::Number::from_f64(v)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

/// An event as reported back: activity name and payload, with enumeration
/// values shown by label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventEcho {
    pub name: String,
    pub attrs: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentVerdict {
    pub id: String,
    pub verdict: Verdict,
    /// State of the component's minimal automaton.
    pub state: StateId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictSnapshot {
    pub step: usize,
    pub event: Option<EventEcho>,
    pub global: Verdict,
    pub components: Vec<ComponentVerdict>,
    pub cost_cur: u64,
    pub cost_best: u64,
    /// Globally violated while no component is.
    pub conflict: bool,
    /// The conflict appears with this step.
    pub first_conflict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecommendationStatus {
    AtBest,
    Improvable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestEvent {
    pub activity: String,
    /// Region per payload attribute, enumeration labels decoded.
    pub regions: BTreeMap<String, String>,
    /// One concrete event inside the regions.
    pub sample: EventEcho,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub status: RecommendationStatus,
    pub best_cost: u64,
    pub events: Vec<BestEvent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<&'static str>,
}

const GROUNDING_NOTE: &str =
    "any payload within the listed regions is equally good; samples are one choice each";

/// A run over an event stream.
#[derive(Debug, Clone)]
pub struct MonitorSession {
    monitor: Arc<MonitorAutomaton>,
    frontier: Vec<StateId>,
    history: Vec<Event>,
    log: Vec<VerdictSnapshot>,
}

impl MonitorSession {
    pub fn new(monitor: Arc<MonitorAutomaton>) -> Self {
        let frontier = vec![monitor.product().initial()];
        let initial = monitor.snapshot(0, None, &frontier, false);
        MonitorSession {
            monitor,
            frontier,
            history: Vec::new(),
            log: vec![initial],
        }
    }

    pub fn monitor(&self) -> &Arc<MonitorAutomaton> {
        &self.monitor
    }

    pub fn frontier(&self) -> &[StateId] {
        &self.frontier
    }

    pub fn history(&self) -> &[Event] {
        &self.history
    }

    /// Snapshots so far, the initial one first.
    pub fn log(&self) -> &[VerdictSnapshot] {
        &self.log
    }

    pub fn current(&self) -> &VerdictSnapshot {
        self.log.last().expect("log starts with the initial snapshot")
    }

    fn advance(&self, e: &Event) -> Result<(Vec<StateId>, VerdictSnapshot), EventError> {
        let domain = self.monitor.domain();
        e.check(domain.signatures())?;
        let letter = domain.letter_of(e);
        let next: BTreeSet<StateId> = self
            .frontier
            .iter()
            .map(|&q| self.monitor.product().step(q, letter))
            .collect();
        let next: Vec<StateId> = next.into_iter().collect();
        let seen = self.log.iter().any(|s| s.conflict);
        let snap = self.monitor.snapshot(
            self.history.len() + 1,
            Some(self.monitor.echo(e)),
            &next,
            seen,
        );
        Ok((next, snap))
    }

    pub fn step(&mut self, e: Event) -> Result<VerdictSnapshot, EventError> {
        let (next, snap) = self.advance(&e)?;
        self.frontier = next;
        self.history.push(e);
        self.log.push(snap.clone());
        Ok(snap)
    }

    /// The snapshot `step` would return, leaving the session untouched.
    pub fn what_if(&self, e: &Event) -> Result<VerdictSnapshot, EventError> {
        self.advance(e).map(|(_, snap)| snap)
    }

    /// Events leading to a successor that keeps the best reachable cost,
    /// unless the current cost already is the best.
    pub fn recommend(&self) -> Recommendation {
        let m = &self.monitor;
        let focus = m.focus(&self.frontier);
        let best = m.cost_best(focus[0]);
        if focus.iter().any(|&q| m.cost_cur(q) == best) {
            return Recommendation {
                status: RecommendationStatus::AtBest,
                best_cost: best,
                events: Vec::new(),
                note: None,
            };
        }
        let mut letters: BTreeSet<Letter> = BTreeSet::new();
        for &q in &focus {
            for (x, &r) in m.product().row(q).iter().enumerate() {
                if m.cost_best(r) == best {
                    letters.insert(x);
                }
            }
        }
        let domain = m.domain();
        let sigs = domain.signatures();
        let events = letters
            .into_iter()
            .map(|x| {
                let ev = domain.decode(x);
                let regions = sigs
                    .signature(ev.activity)
                    .attributes
                    .iter()
                    .zip(&ev.regions)
                    .map(|(a, r)| {
                        (
                            sigs.attribute_name(*a).to_string(),
                            domain.describe_region(*a, *r),
                        )
                    })
                    .collect();
                BestEvent {
                    activity: sigs.activity_name(ev.activity).to_string(),
                    regions,
                    sample: m.echo(&domain.sample_event(x)),
                }
            })
            .collect();
        Recommendation {
            status: RecommendationStatus::Improvable,
            best_cost: best,
            events,
            note: Some(GROUNDING_NOTE),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_reaches_zero_in_two_rounds_of_change() {
        let cur = [5, 5, 0];
        let succ = [vec![1], vec![2], vec![]];
        let mut iterates = Vec::new();
        let a = cost_fixpoint_with(&cur, |q| succ[q].clone(), |b| iterates.push(b.to_vec()));
        assert_eq!(a.best, vec![0, 0, 0]);
        assert_eq!(
            iterates,
            vec![vec![5, 5, 0], vec![5, 0, 0], vec![0, 0, 0], vec![0, 0, 0]]
        );
        assert_eq!(a.rounds, 3);
    }

    #[test]
    fn cycles_do_not_lower_costs_below_reachable() {
        let cur = [3, 7, 2, 9];
        let succ = [vec![1], vec![0], vec![3], vec![3]];
        let a = cost_fixpoint(&cur, |q| succ[q].clone());
        assert_eq!(a.best, vec![3, 3, 2, 9]);
    }

    #[test]
    fn all_final_costs_nothing() {
        let a = cost_fixpoint(&[0], |_| vec![0]);
        assert_eq!((a.cur[0], a.best[0]), (0, 0));
    }
}
