//! Generators and oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use hymon::abstraction::{collect_constants, ConstantSet, Domain, Letter, Partition};
use hymon::condition::{ActivityId, AttrId, CmpOp, Condition, Guard, Signatures};
use hymon::declare::Ltlf;
use hymon::dpn::{Dpn, Dpnif, Marking};
use hymon::gfa::{EdgeKind, Gfa, StateId, Verdict};
use hymon::model::{compile, load_model, Bounds, CompiledModel};
use hymon::syntax::EnumTable;

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Every model shipped with the repository or kept as a test fixture.
pub fn test_model_paths() -> Vec<PathBuf> {
    let root = workspace_root();
    let mut out = Vec::new();
    for dir in [root.join("models"), root.join("fixtures/models")] {
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
            .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        out.extend(files);
    }
    out
}

pub fn compiled_test_models() -> Vec<(String, CompiledModel)> {
    test_model_paths()
        .into_iter()
        .map(|p| {
            let m = load_model(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            let c = compile(&m, Bounds::default())
                .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            (p.file_stem().unwrap().to_string_lossy().into_owned(), c)
        })
        .collect()
}

fn random_op(rng: &mut StdRng) -> CmpOp {
    *[CmpOp::Lt, CmpOp::Eq, CmpOp::Gt].choose(rng).unwrap()
}

/// A random condition over `vars` with constants from `pool`, nesting at
/// most `depth` connectives.
pub fn random_condition(rng: &mut StdRng, vars: &[AttrId], pool: &[f64], depth: usize) -> Condition {
    if depth == 0 || rng.gen_bool(0.4) {
        let v = *vars.choose(rng).unwrap();
        return Condition::cmp(v, random_op(rng), *pool.choose(rng).unwrap());
    }
    match rng.gen_range(0..3) {
        0 => random_condition(rng, vars, pool, depth - 1).negate(),
        1 => random_condition(rng, vars, pool, depth - 1)
            .and(random_condition(rng, vars, pool, depth - 1)),
        _ => random_condition(rng, vars, pool, depth - 1)
            .or(random_condition(rng, vars, pool, depth - 1)),
    }
}

/// Activities a random net may use: two plain ones and one writer per
/// variable.
const NET_ACTIVITIES: [(&str, Option<&str>); 4] =
    [("a", None), ("b", None), ("c", Some("x")), ("d", Some("y"))];

pub struct RandomNet {
    pub dpn: Dpnif,
    pub domain: Arc<Domain>,
}

/// Markings reachable when guards are ignored, or `None` if some firing
/// puts a second token on a place.
fn control_flow_markings(net: &Dpn, start: &Marking) -> Option<Vec<Marking>> {
    let mut seen = HashSet::from([start.clone()]);
    let mut order = vec![start.clone()];
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(m) = queue.pop_front() {
        for (_, t) in net.transitions() {
            if m.enables(t) {
                let n = m.fire(t);
                if n.max_tokens() > 1 {
                    return None;
                }
                if seen.insert(n.clone()) {
                    order.push(n.clone());
                    queue.push_back(n);
                }
            }
        }
    }
    Some(order)
}

/// A random 1-safe, well-formed net with at most six places, six
/// transitions, two variables and three constants. `extra` activities are
/// added to the signatures without being used by the net.
pub fn random_net(rng: &mut StdRng, extra: &[(&str, Vec<&str>)]) -> RandomNet {
    loop {
        if let Some(n) = try_random_net(rng, extra) {
            return n;
        }
    }
}

fn try_random_net(rng: &mut StdRng, extra: &[(&str, Vec<&str>)]) -> Option<RandomNet> {
    let places = rng.gen_range(2..=6);
    let transitions = rng.gen_range(1..=6);
    let mut pool: Vec<f64> = (0..=5).map(f64::from).collect();
    pool.shuffle(rng);
    pool.truncate(rng.gen_range(1..=3));
    let labels: Vec<Option<usize>> = (0..transitions)
        .map(|_| {
            if rng.gen_bool(0.2) {
                None
            } else {
                Some(rng.gen_range(0..NET_ACTIVITIES.len()))
            }
        })
        .collect();
    let used: BTreeSet<usize> = labels.iter().flatten().copied().collect();
    if used.is_empty() {
        return None;
    }
    let mut defs: Vec<(&str, Vec<&str>)> = used
        .iter()
        .map(|&i| (NET_ACTIVITIES[i].0, NET_ACTIVITIES[i].1.into_iter().collect()))
        .collect();
    defs.extend(extra.iter().cloned());
    let sigs = Signatures::new(defs).unwrap();
    let vars: Vec<AttrId> = used
        .iter()
        .filter_map(|&i| NET_ACTIVITIES[i].1)
        .map(|v| sigs.attribute(v).unwrap())
        .collect();

    let mut net = Dpn::new();
    let ps: Vec<_> = (0..places).map(|i| net.add_place(format!("p{i}"))).collect();
    for (i, label) in labels.iter().enumerate() {
        let activity = label.map(|l| sigs.activity(NET_ACTIVITIES[l].0).unwrap());
        let read = if !vars.is_empty() && rng.gen_bool(0.5) {
            Guard::new(random_condition(rng, &vars, &pool, 2)).unwrap()
        } else {
            Guard::trivial()
        };
        let write = match label.and_then(|l| NET_ACTIVITIES[l].1) {
            Some(v) => {
                let v = sigs.attribute(v).unwrap();
                let mut c = random_condition(rng, &[v], &pool, 2);
                if rng.gen_bool(0.2) {
                    // a write that admits every value
                    c = c.clone().or(c.negate());
                }
                Guard::new(c).unwrap()
            }
            None => Guard::trivial(),
        };
        let name = match label {
            Some(l) => format!("{}{i}", NET_ACTIVITIES[*l].0),
            None => format!("tau{i}"),
        };
        let t = net.add_transition(name, activity, read, write);
        let mut shuffled = ps.clone();
        shuffled.shuffle(rng);
        let ins = if rng.gen_bool(0.7) { 1 } else { 2 };
        let outs = *[0, 1, 1, 1, 2, 2].choose(rng).unwrap();
        for p in &shuffled[..ins] {
            net.add_input(t, *p, 1);
        }
        shuffled.shuffle(rng);
        for p in &shuffled[..outs] {
            net.add_output(t, *p, 1);
        }
    }
    let marked = rng.gen_range(1..=2.min(places));
    let mut shuffled = ps.clone();
    shuffled.shuffle(rng);
    let initial = Marking::from_places(places, shuffled[..marked].iter().copied());
    let reachable = control_flow_markings(&net, &initial)?;
    // prefer a final marking some firing leads to
    let final_marking = reachable[1.min(reachable.len() - 1)..].choose(rng).unwrap().clone();
    let initial_assignment: BTreeMap<AttrId, f64> = vars
        .iter()
        .map(|v| (*v, *pool.choose(rng).unwrap()))
        .collect();
    let dpn = Dpnif {
        id: "N".into(),
        net,
        initial_marking: initial,
        initial_assignment,
        final_marking,
        cost: 1,
    };
    dpn.validate(&sigs).ok()?;
    let constants = collect_constants(dpn.guards(), dpn.initial_values());
    assert!(constants.len() <= 3);
    let domain = Domain::new(sigs, EnumTable::default(), Partition::new(&constants)).unwrap();
    Some(RandomNet {
        dpn,
        domain: Arc::new(domain),
    })
}

/// The alphabet used by the formula tests: `a` carries `x`, `b` carries
/// nothing.
pub struct FormulaAlphabet {
    pub domain: Arc<Domain>,
    pub pool: Vec<f64>,
}

pub fn formula_alphabet(rng: &mut StdRng) -> FormulaAlphabet {
    let sigs = Signatures::new([("a", vec!["x"]), ("b", vec![])]).unwrap();
    let mut pool = vec![1.0, 2.0, 3.0];
    pool.shuffle(rng);
    pool.truncate(rng.gen_range(1..=2));
    let partition = Partition::new(&ConstantSet::new(pool.iter().copied()));
    FormulaAlphabet {
        domain: Arc::new(Domain::new(sigs, EnumTable::default(), partition).unwrap()),
        pool,
    }
}

fn random_leaf(rng: &mut StdRng, sigs: &Signatures, pool: &[f64]) -> Ltlf {
    let a = sigs.activity("a").unwrap();
    let b = sigs.activity("b").unwrap();
    let x = sigs.attribute("x").unwrap();
    let data = |rng: &mut StdRng| Condition::cmp(x, random_op(rng), *pool.choose(rng).unwrap());
    match rng.gen_range(0..6) {
        0 => Ltlf::True,
        1 => Ltlf::leaf(Condition::Activity(a)),
        2 => Ltlf::leaf(Condition::Activity(b)),
        3 => Ltlf::leaf(data(rng)),
        4 => Ltlf::leaf(Condition::Activity(a).and(data(rng))),
        _ => Ltlf::leaf(data(rng).or(Condition::Activity(b))),
    }
}

/// A random formula of depth at most `depth` over the formula alphabet.
pub fn random_formula(rng: &mut StdRng, alphabet: &FormulaAlphabet, depth: usize) -> Ltlf {
    let sigs = alphabet.domain.signatures();
    if depth == 0 || rng.gen_bool(0.2) {
        return random_leaf(rng, sigs, &alphabet.pool);
    }
    let sub = |rng: &mut StdRng| random_formula(rng, alphabet, depth - 1);
    match rng.gen_range(0..4) {
        0 => sub(rng).not(),
        1 => {
            let l = sub(rng);
            l.and(sub(rng))
        }
        2 => sub(rng).next(),
        _ => {
            let l = sub(rng);
            l.until(sub(rng))
        }
    }
}

/// Plain activities without attributes, for random automata.
pub fn plain_domain(activities: usize) -> Arc<Domain> {
    let names: Vec<String> = (0..activities).map(|i| format!("e{i}")).collect();
    let sigs = Signatures::new(names.iter().map(|n| (n.as_str(), Vec::<&str>::new()))).unwrap();
    let partition = Partition::new(&ConstantSet::new([]));
    Arc::new(Domain::new(sigs, EnumTable::default(), partition).unwrap())
}

/// A random automaton with up to `max_states` states. With `nondeterministic`
/// it may have several or no successors per letter and silent edges;
/// otherwise it is deterministic and complete.
pub fn random_gfa(
    rng: &mut StdRng,
    domain: &Arc<Domain>,
    max_states: usize,
    nondeterministic: bool,
) -> Gfa {
    let n = rng.gen_range(1..=max_states);
    let l = domain.letter_count();
    let mut g = Gfa::new(domain.clone());
    for i in 0..n {
        g.add_state(format!("s{i}"), rng.gen_bool(0.4));
    }
    g.set_initial(0);
    for q in 0..n {
        let mut by_target: BTreeMap<StateId, Vec<Letter>> = BTreeMap::new();
        for x in 0..l {
            let count = if nondeterministic { rng.gen_range(0..=2) } else { 1 };
            for _ in 0..count {
                by_target.entry(rng.gen_range(0..n)).or_default().push(x);
            }
        }
        for (to, letters) in by_target {
            g.add_letters(q, to, letters, EdgeKind::Step);
        }
        if nondeterministic && rng.gen_bool(0.2) {
            g.add_tau(q, rng.gen_range(0..n));
        }
    }
    g
}

/// States from which a final state is reachable, by backward search over
/// every edge.
pub fn coreachable(n: usize, edges: impl IntoIterator<Item = (StateId, StateId)>, finals: &[bool]) -> Vec<bool> {
    let mut back = vec![Vec::new(); n];
    for (from, to) in edges {
        back[to].push(from);
    }
    let mut live = finals.to_vec();
    let mut stack: Vec<StateId> = (0..n).filter(|&q| live[q]).collect();
    while let Some(q) = stack.pop() {
        for &p in &back[q] {
            if !live[p] {
                live[p] = true;
                stack.push(p);
            }
        }
    }
    live
}

/// Verdicts by the definitions: a state is permanent when every reachable
/// state has its own finality.
pub fn verdict_oracle(gfa: &Gfa) -> Vec<Verdict> {
    let n = gfa.state_count();
    let mut adj = vec![Vec::new(); n];
    for e in gfa.edges() {
        adj[e.from].push(e.to);
    }
    (0..n)
        .map(|q| {
            let mut seen = vec![false; n];
            seen[q] = true;
            let mut stack = vec![q];
            let mut mixed = false;
            while let Some(p) = stack.pop() {
                mixed |= gfa.is_final(p) != gfa.is_final(q);
                for &r in &adj[p] {
                    if !seen[r] {
                        seen[r] = true;
                        stack.push(r);
                    }
                }
            }
            match (gfa.is_final(q), mixed) {
                (true, false) => Verdict::PermanentlySatisfied,
                (true, true) => Verdict::TemporarilySatisfied,
                (false, false) => Verdict::PermanentlyViolated,
                (false, true) => Verdict::TemporarilyViolated,
            }
        })
        .collect()
}

/// Calls `visit` on every word over `letters` letters of length at most
/// `max_len`, shortest first within each branch.
pub fn for_each_word(letters: usize, max_len: usize, mut visit: impl FnMut(&[Letter])) {
    fn go(word: &mut Vec<Letter>, letters: usize, left: usize, visit: &mut dyn FnMut(&[Letter])) {
        visit(word);
        if left == 0 {
            return;
        }
        for x in 0..letters {
            word.push(x);
            go(word, letters, left - 1, visit);
            word.pop();
        }
    }
    go(&mut Vec::new(), letters, max_len, &mut visit);
}

pub fn activity_of(domain: &Domain, letter: Letter) -> ActivityId {
    domain.letter_activity(letter)
}
