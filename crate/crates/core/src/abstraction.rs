//! Interval abstraction of attribute values.
//!
//! The constants `c_1 < … < c_m` mentioned anywhere in a model split the
//! reals into `2m + 1` regions: the open intervals between consecutive
//! constants, the unbounded ends, and one point region per constant. Two
//! values in the same region satisfy exactly the same comparisons against
//! those constants, so every data question becomes a finite one.
//!
//! Region ids are laid out in ascending order, which makes comparisons cheap:
//! with `p = 2j + 1` the id of the point region of `c_j`, a region `r`
//! satisfies `a < c_j` iff `r < p`, `a = c_j` iff `r == p` and `a > c_j` iff
//! `r > p`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use ordered_float::OrderedFloat;
use thiserror::Error;

use crate::condition::{ActivityId, AttrId, CmpOp, Condition, ConditionError, Event, Signatures};
use crate::syntax::EnumTable;

/// Sorted, duplicate-free finite constants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstantSet(Vec<f64>);

impl ConstantSet {
    pub fn new(values: impl IntoIterator<Item = f64>) -> Self {
        let mut v: Vec<OrderedFloat<f64>> = values
            .into_iter()
            .filter(|x| x.is_finite())
            .map(|x| OrderedFloat(if x == 0.0 { 0.0 } else { x }))
            .collect();
        v.sort();
        v.dedup();
        ConstantSet(v.into_iter().map(OrderedFloat::into_inner).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionId(pub u32);

impl RegionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// `(-∞, ∞)`, only when there are no constants.
    All,
    /// `(-∞, c)`
    Below(f64),
    /// `[c, c]`
    Point(f64),
    /// `(lo, hi)`
    Between(f64, f64),
    /// `(c, ∞)`
    Above(f64),
}

impl Region {
    pub fn contains(&self, v: f64) -> bool {
        match *self {
            Region::All => true,
            Region::Below(c) => v < c,
            Region::Point(c) => v == c,
            Region::Between(lo, hi) => lo < v && v < hi,
            Region::Above(c) => v > c,
        }
    }

    /// A representative value: the constant for points, the midpoint of
    /// bounded intervals, one unit past the endpoint for unbounded ones.
    pub fn sample(&self) -> f64 {
        match *self {
            Region::All => 0.0,
            Region::Below(c) => (c - 1.0).min(c.next_down()),
            Region::Point(c) => c,
            Region::Between(lo, hi) => {
                let mid = lo + (hi - lo) / 2.0;
                if lo < mid && mid < hi {
                    mid
                } else {
                    hi.next_down()
                }
            }
            Region::Above(c) => (c + 1.0).max(c.next_up()),
        }
    }

    /// The formula `φ_v` characterising membership of `attr` in the region.
    pub fn to_condition(&self, attr: AttrId) -> Condition {
        match *self {
            Region::All => Condition::True,
            Region::Below(c) => Condition::cmp(attr, CmpOp::Lt, c),
            Region::Point(c) => Condition::cmp(attr, CmpOp::Eq, c),
            Region::Between(lo, hi) => {
                Condition::cmp(attr, CmpOp::Gt, lo).and(Condition::cmp(attr, CmpOp::Lt, hi))
            }
            Region::Above(c) => Condition::cmp(attr, CmpOp::Gt, c),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::All => write!(f, "(-inf,inf)"),
            Region::Below(c) => write!(f, "(-inf,{c})"),
            Region::Point(c) => write!(f, "[{c},{c}]"),
            Region::Between(lo, hi) => write!(f, "({lo},{hi})"),
            Region::Above(c) => write!(f, "({c},inf)"),
        }
    }
}

/// `P_C`: the ordered list of regions induced by a constant set.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    constants: Vec<f64>,
}

impl Partition {
    pub fn new(constants: &ConstantSet) -> Self {
        Partition {
            constants: constants.values().to_vec(),
        }
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    pub fn len(&self) -> usize {
        2 * self.constants.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn region(&self, id: RegionId) -> Region {
        let m = self.constants.len();
        let i = id.index();
        assert!(i < self.len(), "region {i} out of range");
        if m == 0 {
            return Region::All;
        }
        if i % 2 == 1 {
            return Region::Point(self.constants[i / 2]);
        }
        let j = i / 2;
        if j == 0 {
            Region::Below(self.constants[0])
        } else if j == m {
            Region::Above(self.constants[m - 1])
        } else {
            Region::Between(self.constants[j - 1], self.constants[j])
        }
    }

    pub fn regions(&self) -> impl Iterator<Item = (RegionId, Region)> + '_ {
        (0..self.len()).map(|i| (RegionId(i as u32), self.region(RegionId(i as u32))))
    }

    /// The unique region containing `v`.
    pub fn locate(&self, v: f64) -> RegionId {
        match self
            .constants
            .binary_search_by(|c| c.partial_cmp(&v).expect("finite values"))
        {
            Ok(j) => RegionId((2 * j + 1) as u32),
            Err(j) => RegionId((2 * j) as u32),
        }
    }

    /// The point region `[c, c]`, if `c` is one of the constants.
    pub fn point(&self, c: f64) -> Option<RegionId> {
        self.constants
            .binary_search_by(|x| x.partial_cmp(&c).expect("finite values"))
            .ok()
            .map(|j| RegionId((2 * j + 1) as u32))
    }

    /// Whether every value of region `r` satisfies `· op c`.
    pub fn compare(&self, r: RegionId, op: CmpOp, c: f64) -> Result<bool, ConditionError> {
        let p = self.point(c).ok_or(ConditionError::ConstantNotCollected(c))?;
        Ok(match op {
            CmpOp::Lt => r < p,
            CmpOp::Eq => r == p,
            CmpOp::Gt => r > p,
        })
    }

    /// A condition on `attr` describing the contiguous run of regions
    /// `lo..=hi`.
    pub fn run_condition(&self, attr: AttrId, lo: RegionId, hi: RegionId) -> Condition {
        let (lo, hi) = (lo.index(), hi.index());
        if lo == hi {
            return self.region(RegionId(lo as u32)).to_condition(attr);
        }
        let mut parts = Vec::new();
        if lo > 0 {
            if lo % 2 == 1 {
                parts.push(Condition::cmp(attr, CmpOp::Lt, self.constants[lo / 2]).negate());
            } else {
                parts.push(Condition::cmp(attr, CmpOp::Gt, self.constants[lo / 2 - 1]));
            }
        }
        if hi + 1 < self.len() {
            if hi % 2 == 1 {
                parts.push(Condition::cmp(attr, CmpOp::Gt, self.constants[hi / 2]).negate());
            } else {
                parts.push(Condition::cmp(attr, CmpOp::Lt, self.constants[hi / 2]));
            }
        }
        Condition::conjunction(parts)
    }
}

/// Evaluates a condition on an abstract event given as an activity and a
/// region lookup. Comparisons on attributes the lookup does not cover are
/// false.
pub fn eval_condition_region(
    cond: &Condition,
    activity: ActivityId,
    regions: impl Fn(AttrId) -> Option<RegionId>,
    partition: &Partition,
) -> Result<bool, ConditionError> {
    cond.eval_by(&mut |atom| match atom {
        Condition::Activity(a) => Ok(*a == activity),
        Condition::Cmp { attr, op, value } => match regions(*attr) {
            Some(r) => partition.compare(r, *op, value.into_inner()),
            None => Ok(false),
        },
        _ => unreachable!(),
    })
}

/// Evaluates a guard on a region assignment. Variables outside the
/// assignment are reported as missing.
pub fn eval_guard_region(
    cond: &Condition,
    regions: impl Fn(AttrId) -> Option<RegionId>,
    partition: &Partition,
) -> Result<bool, GuardRegionError> {
    cond.eval_by(&mut |atom| match atom {
        Condition::Cmp { attr, op, value } => {
            let r = regions(*attr).ok_or(GuardRegionError::Missing(*attr))?;
            partition
                .compare(r, *op, value.into_inner())
                .map_err(GuardRegionError::Condition)
        }
        Condition::Activity(_) => Err(GuardRegionError::Condition(ConditionError::ActivityInGuard)),
        _ => unreachable!(),
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuardRegionError {
    #[error("region assignment misses variable #{}", .0.0)]
    Missing(AttrId),
    #[error(transparent)]
    Condition(ConditionError),
}

/// An event whose payload has been replaced by regions, one per attribute of
/// the activity's signature (in signature order).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractEvent {
    pub activity: ActivityId,
    pub regions: Vec<RegionId>,
}

/// Index of an abstract event in a [`Domain`]'s alphabet.
pub type Letter = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("abstract alphabet would have {0} letters, above the limit of {MAX_LETTERS}")]
    AlphabetTooLarge(u128),
}

pub const MAX_LETTERS: usize = 1 << 20;

/// Signatures, enumeration labels and the shared partition, together with
/// the finite alphabet of abstract events they induce.
#[derive(Debug, Clone)]
pub struct Domain {
    signatures: Signatures,
    enums: EnumTable,
    partition: Partition,
    offsets: Vec<usize>,
    letter_count: usize,
}

impl Domain {
    pub fn new(
        signatures: Signatures,
        enums: EnumTable,
        partition: Partition,
    ) -> Result<Self, DomainError> {
        let k = partition.len() as u128;
        let mut offsets = Vec::with_capacity(signatures.activity_count());
        let mut total: u128 = 0;
        for (_, sig) in signatures.activities() {
            offsets.push(total as usize);
            total += k.saturating_pow(sig.attributes.len() as u32);
            if total > MAX_LETTERS as u128 {
                return Err(DomainError::AlphabetTooLarge(total));
            }
        }
        Ok(Domain {
            signatures,
            enums,
            partition,
            offsets,
            letter_count: total as usize,
        })
    }

    pub fn signatures(&self) -> &Signatures {
        &self.signatures
    }

    pub fn enums(&self) -> &EnumTable {
        &self.enums
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn letter_count(&self) -> usize {
        self.letter_count
    }

    pub fn letters_of(&self, activity: ActivityId) -> Range<Letter> {
        let start = self.offsets[activity.index()];
        let end = self
            .offsets
            .get(activity.index() + 1)
            .copied()
            .unwrap_or(self.letter_count);
        start..end
    }

    pub fn letter_activity(&self, letter: Letter) -> ActivityId {
        let i = self.offsets.partition_point(|&o| o <= letter) - 1;
        ActivityId(i as u32)
    }

    pub fn decode(&self, letter: Letter) -> AbstractEvent {
        let activity = self.letter_activity(letter);
        let sig = self.signatures.signature(activity);
        let k = self.partition.len();
        let mut rest = letter - self.offsets[activity.index()];
        let mut regions = vec![RegionId(0); sig.attributes.len()];
        for slot in regions.iter_mut().rev() {
            *slot = RegionId((rest % k) as u32);
            rest /= k;
        }
        AbstractEvent { activity, regions }
    }

    pub fn encode(&self, event: &AbstractEvent) -> Letter {
        let k = self.partition.len();
        let local = event
            .regions
            .iter()
            .fold(0usize, |acc, r| acc * k + r.index());
        self.offsets[event.activity.index()] + local
    }

    pub fn letters(&self) -> impl Iterator<Item = (Letter, AbstractEvent)> + '_ {
        (0..self.letter_count).map(|l| (l, self.decode(l)))
    }

    pub fn abstract_event(&self, event: &Event) -> AbstractEvent {
        let sig = self.signatures.signature(event.activity);
        let regions = sig
            .attributes
            .iter()
            .map(|a| {
                let v = event.value(*a).expect("event checked against its signature");
                self.partition.locate(v)
            })
            .collect();
        AbstractEvent {
            activity: event.activity,
            regions,
        }
    }

    pub fn letter_of(&self, event: &Event) -> Letter {
        self.encode(&self.abstract_event(event))
    }

    /// `σ^{P_C}` as letters.
    pub fn abstract_trace(&self, trace: &[Event]) -> Vec<Letter> {
        trace.iter().map(|e| self.letter_of(e)).collect()
    }

    pub fn region_of(&self, event: &AbstractEvent, attr: AttrId) -> Option<RegionId> {
        let sig = self.signatures.signature(event.activity);
        sig.attributes
            .iter()
            .position(|a| *a == attr)
            .map(|i| event.regions[i])
    }

    pub fn satisfies(&self, event: &AbstractEvent, cond: &Condition) -> Result<bool, ConditionError> {
        eval_condition_region(
            cond,
            event.activity,
            |a| self.region_of(event, a),
            &self.partition,
        )
    }

    /// Letters satisfying `cond`, ascending.
    pub fn letters_satisfying(&self, cond: &Condition) -> Result<Vec<Letter>, ConditionError> {
        let mut out = Vec::new();
        for (l, ev) in self.letters() {
            if self.satisfies(&ev, cond)? {
                out.push(l);
            }
        }
        Ok(out)
    }

    /// A concrete event abstracting to the letter.
    pub fn sample_event(&self, letter: Letter) -> Event {
        let ev = self.decode(letter);
        let sig = self.signatures.signature(ev.activity);
        Event::new(
            ev.activity,
            sig.attributes
                .iter()
                .zip(&ev.regions)
                .map(|(a, r)| (*a, self.partition.region(*r).sample())),
        )
    }

    /// Region assignment of the letter as a map.
    pub fn assignment(&self, event: &AbstractEvent) -> BTreeMap<AttrId, RegionId> {
        let sig = self.signatures.signature(event.activity);
        sig.attributes
            .iter()
            .copied()
            .zip(event.regions.iter().copied())
            .collect()
    }

    /// The condition satisfied by exactly the given letter.
    pub fn letter_condition(&self, letter: Letter) -> Condition {
        let ev = self.decode(letter);
        let sig = self.signatures.signature(ev.activity);
        let mut cond = Condition::Activity(ev.activity);
        for (a, r) in sig.attributes.iter().zip(&ev.regions) {
            let rc = self.partition.region(*r).to_condition(*a);
            if rc != Condition::True {
                cond = cond.and(rc);
            }
        }
        cond
    }

    /// A compact condition satisfied by exactly the given set of letters.
    /// Whole activities collapse to their name atom; single-attribute
    /// activities have contiguous region runs merged into interval bounds.
    pub fn condition_for_letters(&self, letters: &[Letter]) -> Condition {
        if letters.len() == self.letter_count {
            return Condition::True;
        }
        let mut by_activity: BTreeMap<ActivityId, Vec<Letter>> = BTreeMap::new();
        for &l in letters {
            by_activity.entry(self.letter_activity(l)).or_default().push(l);
        }
        let mut disjuncts = Vec::new();
        for (act, mut ls) in by_activity {
            ls.sort_unstable();
            ls.dedup();
            let range = self.letters_of(act);
            let atom = Condition::Activity(act);
            if ls.len() == range.len() {
                disjuncts.push(atom);
                continue;
            }
            let sig = self.signatures.signature(act);
            let payload = if sig.attributes.len() == 1 {
                let attr = sig.attributes[0];
                let regions: Vec<usize> = ls.iter().map(|l| l - range.start).collect();
                let mut runs = Vec::new();
                let mut start = regions[0];
                let mut prev = regions[0];
                for &r in &regions[1..] {
                    if r != prev + 1 {
                        runs.push((start, prev));
                        start = r;
                    }
                    prev = r;
                }
                runs.push((start, prev));
                Condition::disjunction(runs.into_iter().map(|(lo, hi)| {
                    self.partition
                        .run_condition(attr, RegionId(lo as u32), RegionId(hi as u32))
                }))
            } else {
                Condition::disjunction(ls.iter().map(|&l| {
                    let ev = self.decode(l);
                    Condition::conjunction(
                        sig.attributes
                            .iter()
                            .zip(&ev.regions)
                            .map(|(a, r)| self.partition.region(*r).to_condition(*a)),
                    )
                }))
            };
            disjuncts.push(atom.and(payload));
        }
        Condition::disjunction(disjuncts)
    }

    /// Human-readable region text, decoding enumeration labels on points.
    pub fn describe_region(&self, attr: AttrId, region: RegionId) -> String {
        let r = self.partition.region(region);
        if let Region::Point(c) = r {
            if let Some(label) = self.enums.label(attr, c) {
                return format!("{label} ({c})");
            }
        }
        r.to_string()
    }
}

/// Collects the constants used by the given conditions together with extra
/// values (initial assignments).
pub fn collect_constants<'a>(
    conditions: impl IntoIterator<Item = &'a Condition>,
    extra: impl IntoIterator<Item = f64>,
) -> ConstantSet {
    let mut set = std::collections::BTreeSet::new();
    for c in conditions {
        c.collect_constants(&mut set);
    }
    ConstantSet::new(set.into_iter().map(OrderedFloat::into_inner).chain(extra))
}

/// Satisfiability of a condition over the abstract alphabet, with a witness.
pub fn sat_condition_abstract(
    cond: &Condition,
    domain: &Domain,
) -> Result<Option<AbstractEvent>, ConditionError> {
    for (_, ev) in domain.letters() {
        if domain.satisfies(&ev, cond)? {
            return Ok(Some(ev));
        }
    }
    Ok(None)
}
