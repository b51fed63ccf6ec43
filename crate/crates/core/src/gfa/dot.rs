use std::fmt::Write;

use super::{Gfa, Label, Product, StateId, Verdict};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering of a local automaton, optionally with verdicts.
pub fn gfa_to_dot(name: &str, gfa: &Gfa, verdicts: Option<&[Verdict]>) -> String {
    let sigs = gfa.domain().signatures();
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  init [shape=point];").unwrap();
    for q in 0..gfa.state_count() {
        let mut label = gfa.state_name(q).to_string();
        if let Some(v) = verdicts {
            write!(label, "\\n{}", v[q]).unwrap();
        }
        let shape = if gfa.is_final(q) { "doublecircle" } else { "circle" };
        writeln!(out, "  s{q} [label=\"{}\", shape={shape}];", escape(&label)).unwrap();
    }
    writeln!(out, "  init -> s{};", gfa.initial()).unwrap();
    for e in gfa.edges() {
        let text = match &e.label {
            Label::Tau => "τ".to_string(),
            Label::Guard(g) => g.display(sigs).to_string(),
        };
        writeln!(
            out,
            "  s{} -> s{} [label=\"{}\"];",
            e.from,
            e.to,
            escape(&text)
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// Graphviz rendering of a product. `costs` holds `(cost_cur, cost_best)`
/// per state when available.
pub fn product_to_dot(name: &str, product: &Product, costs: Option<(&[u64], &[u64])>) -> String {
    let domain = product.domain();
    let sigs = domain.signatures();
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  init [shape=point];").unwrap();
    for q in 0..product.state_count() {
        let locals: Vec<String> = product
            .locals(q)
            .iter()
            .zip(product.local_verdicts(q))
            .map(|(s, v)| format!("{s}:{v}"))
            .collect();
        let mut label = format!("p{q} ({})\\n{}", locals.join(","), product.global(q));
        if product.is_conflict(q) {
            label.push_str(" conflict");
        }
        if let Some((cur, best)) = costs {
            write!(label, "\\ncur={} best={}", cur[q], best[q]).unwrap();
        }
        let shape = if product.is_accepting(q) {
            "doublecircle"
        } else {
            "circle"
        };
        writeln!(out, "  p{q} [label=\"{}\", shape={shape}];", escape(&label)).unwrap();
    }
    writeln!(out, "  init -> p{};", product.initial()).unwrap();
    for q in 0..product.state_count() {
        let mut by_target: Vec<(StateId, Vec<usize>)> = Vec::new();
        for (x, &t) in product.row(q).iter().enumerate() {
            match by_target.iter_mut().find(|(s, _)| *s == t) {
                Some((_, ls)) => ls.push(x),
                None => by_target.push((t, vec![x])),
            }
        }
        for (t, letters) in by_target {
            let guard = domain.condition_for_letters(&letters);
            writeln!(
                out,
                "  p{q} -> p{t} [label=\"{}\"];",
                escape(&guard.display(sigs).to_string())
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}
