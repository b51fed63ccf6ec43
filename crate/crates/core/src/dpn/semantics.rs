//! Firing rule over abstract states: markings paired with one region per
//! variable.

use std::collections::BTreeSet;

use crate::abstraction::{eval_guard_region, Partition, RegionId};
use crate::condition::{AttrId, ConditionError};

use super::{Dpnif, Marking, Transition, TransitionId};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractState {
    pub marking: Marking,
    /// One region per variable, in ascending variable order.
    pub regions: Vec<RegionId>,
}

/// Regions for the variables a firing reads or writes, ascending by variable.
pub type Binding = Vec<(AttrId, RegionId)>;

/// A net seen through a partition that covers all of its constants.
pub struct NetView<'a> {
    dpn: &'a Dpnif,
    vars: Vec<AttrId>,
    partition: &'a Partition,
}

impl<'a> NetView<'a> {
    pub fn new(dpn: &'a Dpnif, partition: &'a Partition) -> Result<Self, ConditionError> {
        let mut constants = BTreeSet::new();
        for g in dpn.guards() {
            g.collect_constants(&mut constants);
        }
        constants.extend(dpn.initial_values().map(ordered_float::OrderedFloat));
        for c in constants {
            if partition.point(c.into_inner()).is_none() {
                return Err(ConditionError::ConstantNotCollected(c.into_inner()));
            }
        }
        Ok(NetView {
            dpn,
            vars: dpn.variables(),
            partition,
        })
    }

    pub fn dpn(&self) -> &'a Dpnif {
        self.dpn
    }

    pub fn partition(&self) -> &'a Partition {
        self.partition
    }

    pub fn variables(&self) -> &[AttrId] {
        &self.vars
    }

    pub fn initial(&self) -> AbstractState {
        AbstractState {
            marking: self.dpn.initial_marking.clone(),
            regions: self
                .dpn
                .initial_assignment
                .values()
                .map(|&v| self.partition.locate(v))
                .collect(),
        }
    }

    pub fn is_final(&self, s: &AbstractState) -> bool {
        s.marking == self.dpn.final_marking
    }

    pub fn region(&self, s: &AbstractState, v: AttrId) -> Option<RegionId> {
        self.vars
            .binary_search(&v)
            .ok()
            .map(|i| s.regions[i])
    }

    /// Whether the read guard holds on the current regions. Reads see only
    /// the current assignment, so this decides the read part independently
    /// of any event.
    pub fn read_holds(&self, s: &AbstractState, t: &Transition) -> bool {
        eval_guard_region(t.read.condition(), |v| self.region(s, v), self.partition)
            .expect("read guards stay within the net's variables")
    }

    /// Whether `β̃` satisfies both guards of `t`.
    pub fn guards_hold(&self, t: &Transition, beta: &Binding) -> bool {
        let lookup = |v: AttrId| {
            beta.binary_search_by_key(&v, |(a, _)| *a)
                .ok()
                .map(|i| beta[i].1)
        };
        let holds = |g: &crate::condition::Guard| {
            eval_guard_region(g.condition(), lookup, self.partition)
                .expect("guards stay within the net's variables")
        };
        holds(&t.read) && holds(&t.write)
    }

    /// Every binding of `t`'s read and write variables that agrees with the
    /// state on the read variables, whether or not it satisfies the guards.
    pub fn bindings(&self, s: &AbstractState, t: &Transition) -> Vec<Binding> {
        let reads = t.read_vars();
        let writes = t.write_vars();
        let mut out = vec![Binding::new()];
        for v in reads.union(&writes) {
            if reads.contains(v) {
                let r = self.region(s, *v).expect("read variable has a value");
                for b in &mut out {
                    b.push((*v, r));
                }
            } else {
                out = out
                    .into_iter()
                    .flat_map(|b| {
                        self.partition.regions().map(move |(r, _)| {
                            let mut b = b.clone();
                            b.push((*v, r));
                            b
                        })
                    })
                    .collect();
            }
        }
        out
    }

    /// `(t, β̃)` pairs enabled in `s`.
    pub fn enabled(&self, s: &AbstractState) -> Vec<(TransitionId, Binding)> {
        let mut out = Vec::new();
        for (id, t) in self.dpn.net.transitions() {
            if !s.marking.enables(t) || !self.read_holds(s, t) {
                continue;
            }
            for beta in self.bindings(s, t) {
                if self.guards_hold(t, &beta) {
                    out.push((id, beta));
                }
            }
        }
        out
    }

    /// The successor after firing an enabled `(t, β̃)`: written variables
    /// take their regions from the binding.
    pub fn fire(&self, s: &AbstractState, t: TransitionId, beta: &Binding) -> AbstractState {
        let tr = self.dpn.net.transition(t);
        let writes = tr.write_vars();
        let mut regions = s.regions.clone();
        for (v, r) in beta {
            if writes.contains(v) {
                let i = self.vars.binary_search(v).expect("written variable is in V");
                regions[i] = *r;
            }
        }
        AbstractState {
            marking: s.marking.fire(tr),
            regions,
        }
    }

    /// Compact state text such as `{p2} result=[1]`.
    pub fn describe(&self, s: &AbstractState, domain: &crate::abstraction::Domain) -> String {
        let mut out = s.marking.display(&self.dpn.net).to_string();
        for (v, r) in self.vars.iter().zip(&s.regions) {
            out.push_str(&format!(
                " {}={}",
                domain.signatures().attribute_name(*v),
                domain.describe_region(*v, *r)
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::abstraction::collect_constants;

    #[test]
    fn evaluation_result_is_bound_by_the_write_guard() {
        let sigs = scenario_signatures();
        let pu = peptic_ulcer(&sigs);
        let c = collect_constants(pu.guards(), pu.initial_values());
        let p = Partition::new(&c);
        let view = NetView::new(&pu, &p).unwrap();
        let s0 = view.initial();
        let en = view.enabled(&s0);
        assert_eq!(en.len(), 1);
        let s1 = view.fire(&s0, en[0].0, &en[0].1);
        let en = view.enabled(&s1);
        let result = sigs.attribute("result").unwrap();
        // HPev may write 0 or 1 and nothing else
        let written: Vec<_> = en.iter().map(|(_, b)| b[0].1).collect();
        assert_eq!(
            written,
            vec![p.point(0.0).unwrap(), p.point(1.0).unwrap()]
        );
        assert!(en.iter().all(|(_, b)| b[0].0 == result));
    }

    #[test]
    fn missing_constants_rejected() {
        let sigs = scenario_signatures();
        let pu = peptic_ulcer(&sigs);
        let p = Partition::new(&crate::abstraction::ConstantSet::new([0.0]));
        assert_eq!(
            NetView::new(&pu, &p).err(),
            Some(ConditionError::ConstantNotCollected(1.0))
        );
    }
}
