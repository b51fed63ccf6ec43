//! Concrete trace compliance, used as the reference the compiled automata
//! are checked against.

use std::collections::HashSet;

use crate::condition::{AttrId, Event};

use super::{Dpnif, Marking, Transition};

/// How many silent firings may run before, between and after events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SilentBudget {
    PerGap(usize),
    /// Until no new configuration appears. Silent firings never change the
    /// assignment, so this always terminates on a bounded net.
    Saturate,
}

impl SilentBudget {
    /// One silent firing per transition in each gap.
    pub fn per_transition(dpn: &Dpnif) -> Self {
        SilentBudget::PerGap(dpn.net.transition_count())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Config {
    marking: Marking,
    /// Values in ascending variable order, as bit patterns so the set can
    /// hash them.
    values: Vec<u64>,
}

fn bits(v: f64) -> u64 {
    // 0.0 and -0.0 compare equal and must not split configurations
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

#[derive(Clone)]
struct Runner<'a> {
    dpn: &'a Dpnif,
    vars: Vec<AttrId>,
}

impl Runner<'_> {
    fn value(&self, c: &Config, v: AttrId) -> Option<f64> {
        self.vars
            .binary_search(&v)
            .ok()
            .map(|i| f64::from_bits(c.values[i]))
    }

    fn silent_steps(&self, c: &Config) -> Vec<Config> {
        let mut out = Vec::new();
        for (_, t) in self.dpn.net.transitions() {
            if !t.is_silent() || !c.marking.enables(t) {
                continue;
            }
            if t.read.eval_with(|v| self.value(c, v)) == Ok(true) {
                out.push(Config {
                    marking: c.marking.fire(t),
                    values: c.values.clone(),
                });
            }
        }
        out
    }

    fn close(&self, start: HashSet<Config>, budget: SilentBudget) -> HashSet<Config> {
        let limit = match budget {
            SilentBudget::PerGap(k) => k,
            SilentBudget::Saturate => usize::MAX,
        };
        let mut all = start.clone();
        let mut frontier: Vec<Config> = start.into_iter().collect();
        let mut depth = 0;
        while !frontier.is_empty() && depth < limit {
            let mut next = Vec::new();
            for c in &frontier {
                for d in self.silent_steps(c) {
                    if all.insert(d.clone()) {
                        next.push(d);
                    }
                }
            }
            frontier = next;
            depth += 1;
        }
        all
    }

    /// Firings of `t` that consume `e`: the binding takes the payload on
    /// written variables and the current value on read ones, and both must
    /// agree where a variable is read and written.
    fn consume(&self, c: &Config, t: &Transition, e: &Event) -> Option<Config> {
        if t.label != Some(e.activity) || !c.marking.enables(t) {
            return None;
        }
        let writes = t.write_vars();
        for v in t.read_vars().intersection(&writes) {
            if e.value(*v).map(bits) != self.value(c, *v).map(bits) {
                return None;
            }
        }
        let beta = |v: AttrId| {
            if writes.contains(&v) {
                e.value(v)
            } else {
                self.value(c, v)
            }
        };
        if t.read.eval_with(beta) != Ok(true) || t.write.eval_with(beta) != Ok(true) {
            return None;
        }
        let mut values = c.values.clone();
        for v in &writes {
            let i = self.vars.binary_search(v).ok()?;
            values[i] = bits(e.value(*v)?);
        }
        Some(Config {
            marking: c.marking.fire(t),
            values,
        })
    }
}

/// The set of configurations a trace prefix can reach, advanced one event
/// at a time.
#[derive(Clone)]
pub struct ComplianceRun<'a> {
    runner: Runner<'a>,
    budget: SilentBudget,
    current: HashSet<Config>,
}

impl<'a> ComplianceRun<'a> {
    pub fn new(dpn: &'a Dpnif, budget: SilentBudget) -> Self {
        let runner = Runner {
            dpn,
            vars: dpn.variables(),
        };
        let start = Config {
            marking: dpn.initial_marking.clone(),
            values: dpn.initial_values().map(bits).collect(),
        };
        let current = runner.close(HashSet::from([start]), budget);
        ComplianceRun {
            runner,
            budget,
            current,
        }
    }

    /// Consume one event. Returns false once no run survives; every later
    /// step keeps it false.
    pub fn step(&mut self, e: &Event) -> bool {
        let mut next = HashSet::new();
        for c in &self.current {
            for (_, t) in self.runner.dpn.net.transitions() {
                if let Some(d) = self.runner.consume(c, t, e) {
                    next.insert(d);
                }
            }
        }
        self.current = if next.is_empty() {
            next
        } else {
            self.runner.close(next, self.budget)
        };
        self.is_alive()
    }

    pub fn is_alive(&self) -> bool {
        !self.current.is_empty()
    }

    /// Whether the prefix consumed so far complies.
    pub fn accepts(&self) -> bool {
        self.current
            .iter()
            .any(|c| c.marking == self.runner.dpn.final_marking)
    }
}

/// Whether some run of the net, interleaving silent firings within the
/// budget, consumes the trace event by event and ends in the final marking.
pub fn trace_complies(trace: &[Event], dpn: &Dpnif, budget: SilentBudget) -> bool {
    let mut run = ComplianceRun::new(dpn, budget);
    trace.iter().all(|e| run.step(e)) && run.accepts()
}
