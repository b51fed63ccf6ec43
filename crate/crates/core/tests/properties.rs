mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use hymon::abstraction::{
    eval_condition_region, sat_condition_abstract, ConstantSet, Domain, Partition, Region,
};
use hymon::condition::{AttrId, CmpOp, Condition, Event, Signatures};
use hymon::declare::{ltlf_to_gfa, parse_ltlf, DEFAULT_STATE_BOUND};
use hymon::gfa::{minimize, product, Dfa, ProductComponent};
use hymon::syntax::{parse_condition, EnumTable, ParseContext};

use common::*;

fn sigs() -> Signatures {
    Signatures::new([("a", vec!["x", "y"]), ("b", vec!["x"]), ("c", vec![])]).unwrap()
}

fn constant() -> impl Strategy<Value = f64> {
    prop_oneof![(-6i32..6).prop_map(f64::from), (-24i32..24).prop_map(|n| f64::from(n) / 4.0)]
}

fn condition(pool: Vec<f64>) -> impl Strategy<Value = Condition> {
    let s = sigs();
    let acts: Vec<_> = s.activities().map(|(id, _)| id).collect();
    let attrs: Vec<AttrId> = s.attributes().map(|(id, _)| id).collect();
    let op = prop_oneof![Just(CmpOp::Lt), Just(CmpOp::Eq), Just(CmpOp::Gt)];
    let leaf = prop_oneof![
        Just(Condition::True),
        proptest::sample::select(acts).prop_map(Condition::Activity),
        (proptest::sample::select(attrs), op, proptest::sample::select(pool))
            .prop_map(|(a, o, v)| Condition::cmp(a, o, v)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Condition::negate),
            (inner.clone(), inner).prop_map(|(l, r)| l.and(r)),
        ]
    })
}

fn pool() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(constant(), 1..4)
}

fn domain_for(pool: &[f64]) -> Arc<Domain> {
    let partition = Partition::new(&ConstantSet::new(pool.iter().copied()));
    Arc::new(Domain::new(sigs(), EnumTable::default(), partition).unwrap())
}

/// A value inside `region`, placed by `t` in `[0, 1)`.
fn value_in(region: Region, t: f64) -> f64 {
    match region {
        Region::All => t * 100.0 - 50.0,
        Region::Below(c) => c - 1.0 - t * 10.0,
        Region::Point(c) => c,
        Region::Between(lo, hi) => {
            let v = lo + (hi - lo) * (0.01 + 0.98 * t);
            if lo < v && v < hi {
                v
            } else {
                region.sample()
            }
        }
        Region::Above(c) => c + 1.0 + t * 10.0,
    }
}

fn event_strategy() -> impl Strategy<Value = (usize, f64, f64)> {
    (0usize..3, -10.0f64..10.0, -10.0f64..10.0)
}

fn make_event(s: &Signatures, (act, x, y): (usize, f64, f64)) -> Event {
    let (id, sig) = s.activities().nth(act).unwrap();
    let values = [x, y];
    Event::new(id, sig.attributes.iter().enumerate().map(|(i, a)| (*a, values[i])))
}

proptest! {
    #[test]
    fn exactly_one_region_contains_each_value(cs in proptest::collection::vec(constant(), 0..6), v in -10.0f64..10.0, pick in 0usize..6) {
        let p = Partition::new(&ConstantSet::new(cs.iter().copied()));
        // probe the constants themselves as well as arbitrary values
        let probe = if pick < cs.len() { cs[pick] } else { v };
        let holders: Vec<_> = p.regions().filter(|(_, r)| r.contains(probe)).map(|(id, _)| id).collect();
        prop_assert_eq!(holders.len(), 1);
        prop_assert_eq!(holders[0], p.locate(probe));
    }

    #[test]
    fn region_equivalent_events_agree(pool in pool(), phi_seed in any::<u64>(), raw in event_strategy(), t in (0.0f64..1.0, 0.0f64..1.0)) {
        let d = domain_for(&pool);
        let s = d.signatures();
        let phi = sample_condition(&pool, phi_seed);
        let e = make_event(s, raw);
        let p = d.partition();
        let moved = Event::new(
            e.activity,
            s.signature(e.activity).attributes.iter().enumerate().map(|(i, a)| {
                let r = p.region(p.locate(e.value(*a).unwrap()));
                (*a, value_in(r, if i == 0 { t.0 } else { t.1 }))
            }),
        );
        prop_assert_eq!(d.abstract_event(&e), d.abstract_event(&moved));
        prop_assert_eq!(phi.eval(&e), phi.eval(&moved));
    }

    #[test]
    fn concrete_and_region_evaluation_agree(pool in pool(), seed in any::<u64>(), raw in event_strategy(), snap in any::<bool>()) {
        let d = domain_for(&pool);
        let s = d.signatures();
        let phi = sample_condition(&pool, seed);
        let mut e = make_event(s, raw);
        if snap {
            // land exactly on constants, where strict comparisons flip
            let c = d.partition().constants()[0];
            e = Event::new(e.activity, e.payload.iter().map(|(a, _)| (*a, c)));
        }
        let abs = d.abstract_event(&e);
        let by_region = eval_condition_region(&phi, abs.activity, |a| d.region_of(&abs, a), d.partition()).unwrap();
        prop_assert_eq!(phi.eval(&e), by_region);
        prop_assert_eq!(d.satisfies(&abs, &phi).unwrap(), by_region);
    }

    #[test]
    fn abstract_satisfiability_matches_sampling(pool in pool(), seed in any::<u64>()) {
        let d = domain_for(&pool);
        let phi = sample_condition(&pool, seed);
        let sampled = (0..d.letter_count()).any(|x| phi.eval(&d.sample_event(x)));
        prop_assert_eq!(sat_condition_abstract(&phi, &d).unwrap().is_some(), sampled);
    }

    #[test]
    fn printed_conditions_parse_back(pool in pool(), seed in any::<u64>()) {
        let s = sigs();
        let phi = sample_condition(&pool, seed);
        let text = phi.display(&s).to_string();
        let enums = EnumTable::default();
        let back = parse_condition(&text, ParseContext { signatures: &s, enums: &enums }).unwrap();
        prop_assert_eq!(back, phi, "{}", text);
    }

    #[test]
    fn printed_formulas_parse_back(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let alphabet = formula_alphabet(&mut rng);
        let phi = random_formula(&mut rng, &alphabet, 4);
        let s = alphabet.domain.signatures();
        let text = phi.display(s).to_string();
        let enums = EnumTable::default();
        let back = parse_ltlf(&text, ParseContext { signatures: s, enums: &enums }).unwrap();
        prop_assert_eq!(back, phi, "{}", text);
    }

    #[test]
    fn negated_formula_accepts_the_complement(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let alphabet = formula_alphabet(&mut rng);
        let phi = random_formula(&mut rng, &alphabet, 3);
        let d = &alphabet.domain;
        let pos = Dfa::from_gfa(&minimize(&ltlf_to_gfa(&phi, d, DEFAULT_STATE_BOUND).unwrap())).unwrap();
        let neg = ltlf_to_gfa(&phi.clone().not(), d, DEFAULT_STATE_BOUND).unwrap();
        let moves = neg.moves();
        let mut ok = true;
        for_each_word(d.letter_count(), 4, |w| ok &= moves.accepts(&neg, w) != pos.accepts(w));
        prop_assert!(ok);
    }

    #[test]
    fn product_accepts_what_every_component_accepts(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let domain = plain_domain(2);
        let gfas: Vec<_> = (0..3).map(|_| minimize(&random_gfa(&mut rng, &domain, 4, true))).collect();
        let parts = gfas.iter().enumerate().map(|(i, g)| ProductComponent::new(format!("K{i}"), g).unwrap()).collect();
        let p = product(domain.clone(), parts, 10_000).unwrap();
        let mut ok = true;
        for_each_word(domain.letter_count(), 5, |w| {
            ok &= p.accepts(w) == gfas.iter().all(|g| g.accepts(w));
        });
        prop_assert!(ok);
    }
}

fn phi_seed_bytes(seed: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (i, b) in out.iter_mut().enumerate() {
        *b = (seed >> ((i % 8) * 8)) as u8 ^ i as u8;
    }
    out
}

/// A condition drawn deterministically from `seed` with constants of `pool`.
fn sample_condition(pool: &[f64], seed: u64) -> Condition {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::{RngAlgorithm, TestRng, TestRunner};
    let mut runner = TestRunner::new_with_rng(
        Default::default(),
        TestRng::from_seed(RngAlgorithm::ChaCha, &phi_seed_bytes(seed)),
    );
    condition(pool.to_vec()).new_tree(&mut runner).unwrap().current()
}
