use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Dfa, Gfa};

/// Runtime-verification verdict of a state: temporarily or permanently
/// satisfied or violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "TS")]
    TemporarilySatisfied,
    #[serde(rename = "TV")]
    TemporarilyViolated,
    #[serde(rename = "PS")]
    PermanentlySatisfied,
    #[serde(rename = "PV")]
    PermanentlyViolated,
}

impl Verdict {
    pub fn code(self) -> &'static str {
        match self {
            Verdict::TemporarilySatisfied => "TS",
            Verdict::TemporarilyViolated => "TV",
            Verdict::PermanentlySatisfied => "PS",
            Verdict::PermanentlyViolated => "PV",
        }
    }

    pub fn is_permanent(self) -> bool {
        matches!(
            self,
            Verdict::PermanentlySatisfied | Verdict::PermanentlyViolated
        )
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LabelError {
    #[error("automaton is not deterministic")]
    NotDeterministic,
    #[error("automaton is not complete")]
    NotComplete,
    #[error("automaton is not minimal")]
    NotMinimal,
}

/// Labels the states of a minimal deterministic complete automaton: a state
/// whose outgoing edges are all self-loops is permanent, and finality decides
/// between satisfied and violated.
pub fn label_states(gfa: &Gfa) -> Result<Vec<Verdict>, LabelError> {
    if !gfa.is_deterministic() {
        return Err(LabelError::NotDeterministic);
    }
    let dfa = Dfa::from_gfa(gfa).ok_or(LabelError::NotComplete)?;
    if dfa.minimize().state_count() != dfa.state_count() {
        return Err(LabelError::NotMinimal);
    }
    Ok((0..dfa.state_count())
        .map(|q| {
            let sink = dfa.row(q).iter().all(|&t| t == q);
            match (dfa.is_final(q), sink) {
                (true, true) => Verdict::PermanentlySatisfied,
                (false, true) => Verdict::PermanentlyViolated,
                (true, false) => Verdict::TemporarilySatisfied,
                (false, false) => Verdict::TemporarilyViolated,
            }
        })
        .collect())
}

/// Verdicts from reachability: permanent when no state of the opposite
/// finality is reachable. Sound for any complete automaton without silent
/// edges, deterministic or not.
pub fn reachability_verdicts(gfa: &Gfa) -> Vec<Verdict> {
    let n = gfa.state_count();
    let mut adj = vec![Vec::new(); n];
    for e in gfa.edges() {
        adj[e.from].push(e.to);
    }
    (0..n)
        .map(|q| {
            let mut seen = vec![false; n];
            seen[q] = true;
            let mut queue = VecDeque::from([q]);
            let (mut final_seen, mut nonfinal_seen) = (false, false);
            while let Some(p) = queue.pop_front() {
                if gfa.is_final(p) {
                    final_seen = true;
                } else {
                    nonfinal_seen = true;
                }
                for &r in &adj[p] {
                    if !seen[r] {
                        seen[r] = true;
                        queue.push_back(r);
                    }
                }
            }
            match (gfa.is_final(q), final_seen, nonfinal_seen) {
                (true, _, false) => Verdict::PermanentlySatisfied,
                (true, _, true) => Verdict::TemporarilySatisfied,
                (false, false, _) => Verdict::PermanentlyViolated,
                (false, true, _) => Verdict::TemporarilyViolated,
            }
        })
        .collect()
}
