//! From a net to a complete guarded automaton over the shared abstract
//! alphabet: explore the abstract state space, remove silent moves, let
//! events the net never mentions pass, and route events the net cannot
//! accept to a violation sink.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::abstraction::{AbstractEvent, Domain, Letter};
use crate::condition::{ActivityId, AttrId, Condition, ConditionError};
use crate::gfa::{EdgeKind, Gfa, Label, StateId};

use super::{AbstractState, Dpnif, NetView, ValidationError};

pub const DEFAULT_NET_BOUND: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Constant(#[from] ConditionError),
    #[error("net `{id}` puts a second token on `{place}`")]
    Unsafe { id: String, place: String },
    #[error("transition `{transition}` does not write the payload of its activity")]
    IllFormed { transition: String },
    #[error("net `{id}` has more than {bound} abstract states")]
    TooManyStates { id: String, bound: usize },
}

/// A compiled net. `states[q]` is the abstract state behind automaton state
/// `q`; the violation sink has none.
#[derive(Debug, Clone)]
pub struct NetAutomaton {
    pub gfa: Gfa,
    pub states: Vec<Option<AbstractState>>,
    pub violation: Option<StateId>,
}

impl NetAutomaton {
    fn trap(&mut self) -> StateId {
        if let Some(q) = self.violation {
            return q;
        }
        let q = self.gfa.add_state("violation", false);
        let all: Vec<Letter> = (0..self.gfa.domain().letter_count()).collect();
        self.gfa.add_letters(q, q, all, EdgeKind::Completion);
        self.states.push(None);
        self.violation = Some(q);
        q
    }
}

fn region_guard(
    view: &NetView,
    domain: &Domain,
    label: ActivityId,
    s: &AbstractState,
    vars: impl IntoIterator<Item = AttrId>,
) -> Condition {
    let mut guard = Condition::Activity(label);
    for v in vars {
        let r = view.region(s, v).expect("written variable is in V");
        let c = domain.partition().region(r).to_condition(v);
        if c != Condition::True {
            guard = guard.and(c);
        }
    }
    guard
}

/// The abstract state space of the net as an automaton with silent edges.
/// A visible firing becomes an edge admitting exactly the letter whose
/// payload regions are the written ones; states whose marking is final
/// accept.
pub fn dpn_to_gfa(
    dpn: &Dpnif,
    domain: &Arc<Domain>,
    bound: usize,
) -> Result<NetAutomaton, CompileError> {
    let view = NetView::new(dpn, domain.partition())?;
    let sigs = domain.signatures();
    let mut gfa = Gfa::new(domain.clone());
    let mut states = Vec::new();
    let mut ids: HashMap<AbstractState, StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut seen_edges = HashSet::new();

    let start = view.initial();
    let q0 = gfa.add_state(view.describe(&start, domain), view.is_final(&start));
    ids.insert(start.clone(), q0);
    states.push(Some(start.clone()));
    queue.push_back(start);

    while let Some(s) = queue.pop_front() {
        let from = ids[&s];
        for (t, beta) in view.enabled(&s) {
            let next = view.fire(&s, t, &beta);
            if let Some(p) = next.marking.marked().find(|p| next.marking.tokens(*p) > 1) {
                return Err(CompileError::Unsafe {
                    id: dpn.id.clone(),
                    place: dpn.net.place_name(p).to_string(),
                });
            }
            let to = match ids.get(&next) {
                Some(&q) => q,
                None => {
                    if ids.len() >= bound {
                        return Err(CompileError::TooManyStates {
                            id: dpn.id.clone(),
                            bound,
                        });
                    }
                    let q = gfa.add_state(view.describe(&next, domain), view.is_final(&next));
                    ids.insert(next.clone(), q);
                    states.push(Some(next.clone()));
                    queue.push_back(next.clone());
                    q
                }
            };
            let tr = dpn.net.transition(t);
            match tr.label {
                None => {
                    if seen_edges.insert((from, to, None)) {
                        gfa.add_tau(from, to);
                    }
                }
                Some(label) => {
                    let regions = sigs
                        .signature(label)
                        .attributes
                        .iter()
                        .map(|a| view.region(&next, *a))
                        .collect::<Option<Vec<_>>>()
                        .filter(|_| {
                            let attrs = &sigs.signature(label).attributes;
                            tr.write_vars().iter().eq(attrs.iter())
                        })
                        .ok_or_else(|| CompileError::IllFormed {
                            transition: tr.name.clone(),
                        })?;
                    let letter = domain.encode(&AbstractEvent {
                        activity: label,
                        regions,
                    });
                    if seen_edges.insert((from, to, Some(letter))) {
                        let guard = region_guard(&view, domain, label, &next, tr.write_vars());
                        gfa.add_guarded_letters(from, to, guard, EdgeKind::Step, vec![letter]);
                    }
                }
            }
        }
    }
    Ok(NetAutomaton {
        gfa,
        states,
        violation: None,
    })
}

/// Replaces silent edges by their effect: a state gets the visible edges of
/// every state in its silent closure and accepts if the closure does.
/// States left unreachable are dropped.
pub fn remove_tau(a: &NetAutomaton) -> NetAutomaton {
    let moves = a.gfa.moves();
    let n = a.gfa.state_count();
    let mut by_source: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in a.gfa.edges().iter().enumerate() {
        if e.label != Label::Tau {
            by_source[e.from].push(i);
        }
    }
    let mut gfa = Gfa::new(a.gfa.domain().clone());
    for q in 0..n {
        let accepting = moves.closure(q).iter().any(|&p| a.gfa.is_final(p));
        gfa.add_state(a.gfa.state_name(q), accepting);
    }
    gfa.set_initial(a.gfa.initial());
    for q in 0..n {
        let mut added = HashSet::new();
        for &p in moves.closure(q) {
            for &i in &by_source[p] {
                let e = &a.gfa.edges()[i];
                if !added.insert((e.to, &e.letters)) {
                    continue;
                }
                if let Label::Guard(g) = &e.label {
                    gfa.add_guarded_letters(q, e.to, g.clone(), e.kind, e.letters.clone());
                }
            }
        }
    }
    let keep = gfa.reachable();
    let states = a
        .states
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(s, _)| s.clone())
        .collect();
    let violation = a
        .violation
        .filter(|&v| keep[v])
        .map(|v| keep[..v].iter().filter(|k| **k).count());
    NetAutomaton {
        gfa: gfa.restrict(&keep),
        states,
        violation,
    }
}

/// Adds to every state a self-loop admitting the activities no transition
/// of the net is labeled with, so that the net ignores them.
pub fn add_skip_loops(a: &NetAutomaton, dpn: &Dpnif) -> NetAutomaton {
    let domain = a.gfa.domain().clone();
    let used = dpn.net.labels();
    let unused: Vec<ActivityId> = domain
        .signatures()
        .activities()
        .map(|(id, _)| id)
        .filter(|id| !used.contains(id))
        .collect();
    let mut out = a.clone();
    if unused.is_empty() {
        return out;
    }
    let guard = Condition::disjunction(unused.iter().map(|&n| Condition::Activity(n)));
    let letters: Vec<Letter> = unused.iter().flat_map(|&n| domain.letters_of(n)).collect();
    for q in 0..a.gfa.state_count() {
        out.gfa
            .add_guarded_letters(q, q, guard.clone(), EdgeKind::Skip, letters.clone());
    }
    out
}

/// Routes events stopped by a data condition to the violation sink. An
/// enabled transition whose read guard fails on the current assignment
/// blocks every event of its activity; one whose read guard holds blocks the
/// payloads its write guard rejects.
pub fn add_deadlock_loops(a: &NetAutomaton, dpn: &Dpnif) -> Result<NetAutomaton, CompileError> {
    let domain = a.gfa.domain().clone();
    let view = NetView::new(dpn, domain.partition())?;
    let sigs = domain.signatures();
    let mut out = a.clone();
    for (q, s) in a.states.iter().enumerate() {
        let Some(s) = s else { continue };
        for (_, t) in dpn.net.transitions() {
            let Some(label) = t.label else { continue };
            if !s.marking.enables(t) {
                continue;
            }
            if !view.read_holds(s, t) {
                let trap = out.trap();
                out.gfa.add_guarded_letters(
                    q,
                    trap,
                    Condition::Activity(label),
                    EdgeKind::ReadDeadlock,
                    domain.letters_of(label).collect(),
                );
                continue;
            }
            if t.write.is_trivial() {
                continue;
            }
            let reads = t.read_vars();
            let writes = t.write_vars();
            let attrs = &sigs.signature(label).attributes;
            let mut blocked = Vec::new();
            for letter in domain.letters_of(label) {
                let ev = domain.decode(letter);
                let payload = |v| {
                    attrs
                        .iter()
                        .position(|a| *a == v)
                        .map(|i| ev.regions[i])
                };
                let mut agrees = true;
                let mut beta = Vec::new();
                for v in reads.union(&writes) {
                    let r = if writes.contains(v) {
                        let r = payload(*v).ok_or_else(|| CompileError::IllFormed {
                            transition: t.name.clone(),
                        })?;
                        if reads.contains(v) && Some(r) != view.region(s, *v) {
                            agrees = false;
                        }
                        r
                    } else {
                        view.region(s, *v).expect("read variable is in V")
                    };
                    beta.push((*v, r));
                }
                if !agrees || !view.guards_hold(t, &beta) {
                    blocked.push(letter);
                }
            }
            if !blocked.is_empty() {
                let trap = out.trap();
                out.gfa.add_letters(q, trap, blocked, EdgeKind::WriteDeadlock);
            }
        }
    }
    Ok(out)
}

/// Sends every letter a state does not admit to the violation sink.
pub fn add_completion(a: &NetAutomaton) -> NetAutomaton {
    let mut out = a.clone();
    for (q, letters) in a.gfa.uncovered().into_iter().enumerate() {
        if !letters.is_empty() {
            let trap = out.trap();
            out.gfa.add_letters(q, trap, letters, EdgeKind::Completion);
        }
    }
    out
}

/// Validation followed by the full pipeline. The result is complete and
/// accepts exactly the abstractions of traces the net accepts once events
/// of activities it never mentions are removed.
pub fn compile_dpnif(
    dpn: &Dpnif,
    domain: &Arc<Domain>,
    bound: usize,
) -> Result<NetAutomaton, CompileError> {
    dpn.validate(domain.signatures())?;
    let raw = dpn_to_gfa(dpn, domain, bound)?;
    let silent_free = remove_tau(&raw);
    let skipping = add_skip_loops(&silent_free, dpn);
    let guarded = add_deadlock_loops(&skipping, dpn)?;
    Ok(add_completion(&guarded))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{trace_complies, SilentBudget};
    use super::*;
    use crate::abstraction::{collect_constants, Partition};
    use crate::syntax::EnumTable;

    fn scenario_domain() -> (Arc<Domain>, Dpnif, Dpnif) {
        let sigs = scenario_signatures();
        let pu = peptic_ulcer(&sigs);
        let vt = venous_thrombosis(&sigs);
        let constants = collect_constants(
            pu.guards().chain(vt.guards()),
            pu.initial_values().chain(vt.initial_values()),
        );
        let domain =
            Domain::new(sigs, EnumTable::default(), Partition::new(&constants)).unwrap();
        (Arc::new(domain), pu, vt)
    }

    fn word(domain: &Domain, steps: &[(&str, Option<f64>)]) -> Vec<Letter> {
        let sigs = domain.signatures();
        steps
            .iter()
            .map(|(n, v)| {
                let act = sigs.activity(n).unwrap();
                let payload = sigs.signature(act).attributes.first().map(|a| (*a, v.unwrap()));
                domain.letter_of(&crate::condition::Event::new(act, payload))
            })
            .collect()
    }

    #[test]
    fn peptic_ulcer_compiles_to_a_complete_automaton() {
        let (domain, pu, _) = scenario_domain();
        let a = compile_dpnif(&pu, &domain, DEFAULT_NET_BOUND).unwrap();
        assert!(a.gfa.is_complete());
        assert!(!a.gfa.has_tau());
        let ok = word(
            &domain,
            &[("HPte", None), ("HPev", Some(1.0)), ("AT", None), ("PUev", None)],
        );
        assert!(a.gfa.accepts(&ok));
        let wrong = word(
            &domain,
            &[("HPte", None), ("HPev", Some(1.0)), ("GAR", None), ("PUev", None)],
        );
        assert!(!a.gfa.accepts(&wrong));
    }

    #[test]
    fn unrelated_events_are_skipped() {
        let (domain, pu, _) = scenario_domain();
        let a = compile_dpnif(&pu, &domain, DEFAULT_NET_BOUND).unwrap();
        let moves = a.gfa.moves();
        let run = |w: &[Letter]| {
            let mut set = moves.close([a.gfa.initial()]);
            for &x in w {
                set = moves.step(&set, x);
            }
            set
        };
        let plain = word(&domain, &[("HPte", None), ("HPev", Some(1.0))]);
        let with_vt = word(
            &domain,
            &[("HPte", None), ("IntD", Some(2.0)), ("HPev", Some(1.0))],
        );
        assert_eq!(run(&plain), run(&with_vt));
    }

    #[test]
    fn blocked_read_goes_to_the_violation_sink() {
        let (domain, pu, _) = scenario_domain();
        let a = compile_dpnif(&pu, &domain, DEFAULT_NET_BOUND).unwrap();
        let moves = a.gfa.moves();
        let mut set = moves.close([a.gfa.initial()]);
        for x in word(&domain, &[("HPte", None), ("HPev", Some(1.0)), ("GAR", None)]) {
            set = moves.step(&set, x);
        }
        assert_eq!(set, vec![a.violation.unwrap()]);
        let read_blocks = a
            .gfa
            .edges()
            .iter()
            .filter(|e| e.kind == EdgeKind::ReadDeadlock)
            .count();
        let write_blocks = a
            .gfa
            .edges()
            .iter()
            .filter(|e| e.kind == EdgeKind::WriteDeadlock)
            .count();
        // GAR after a positive result, AT after a negative one; HPev's
        // payload outside {0, 1}
        assert_eq!(read_blocks, 2);
        assert_eq!(write_blocks, 1);
    }

    #[test]
    fn silent_transitions_are_removed() {
        use crate::condition::Guard;
        use super::super::{Dpn, Marking};
        let (domain, _, _) = scenario_domain();
        let sigs = domain.signatures();
        let mut net = Dpn::new();
        let p: Vec<_> = (0..3).map(|i| net.add_place(format!("p{i}"))).collect();
        let skip = net.add_transition("skip", None, Guard::trivial(), Guard::trivial());
        net.add_input(skip, p[0], 1);
        net.add_output(skip, p[1], 1);
        let at = net.add_transition("AT", sigs.activity("AT"), Guard::trivial(), Guard::trivial());
        net.add_input(at, p[1], 1);
        net.add_output(at, p[2], 1);
        let tail = net.add_transition("tail", None, Guard::trivial(), Guard::trivial());
        net.add_input(tail, p[2], 1);
        net.add_output(tail, p[0], 1);
        let d = Dpnif {
            id: "loop".into(),
            initial_marking: Marking::from_places(3, [p[0]]),
            final_marking: Marking::from_places(3, [p[0]]),
            initial_assignment: Default::default(),
            net,
            cost: 0,
        };
        let a = compile_dpnif(&d, &domain, DEFAULT_NET_BOUND).unwrap();
        for n in 0..4 {
            let w = word(&domain, &vec![("AT", None); n]);
            assert!(a.gfa.accepts(&w));
            let tr: Vec<_> = w.iter().map(|&l| domain.sample_event(l)).collect();
            assert!(trace_complies(&tr, &d, SilentBudget::Saturate));
        }
    }
}
