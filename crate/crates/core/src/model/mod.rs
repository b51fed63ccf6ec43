//! Hybrid process models: the on-disk format, name resolution, and the
//! compilation of all components into one monitor.

mod replay;
mod trace;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{collect_constants, Domain, DomainError, Partition};
use crate::condition::{ActivityId, AttrId, Condition, ConditionError, Guard, SignatureError, Signatures};
use crate::declare::{
    expand_template, ltlf_to_gfa, parse_ltlf, AutomatonError, ConstraintDef, Template,
    TemplateError, DEFAULT_STATE_BOUND,
};
use crate::dpn::{compile_dpnif, CompileError, Dpn, Dpnif, Marking, DEFAULT_NET_BOUND};
use crate::gfa::{
    minimize, product, Gfa, ProductComponent, ProductError, Verdict, DEFAULT_PRODUCT_BOUND,
};
use crate::monitor::{CostError, CostModel, MonitorAutomaton};
use crate::syntax::{parse_condition, EnumTable, ParseContext, ParseError};

pub use replay::{replay, FinalVerdicts, ReplayReport};
pub use trace::{parse_trace, read_trace, EventInputError, RawEvent, TraceError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub signatures: Vec<SignatureSpec>,
    /// Attribute name to label-to-value table.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub enums: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub dpns: Vec<DpnSpec>,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    /// Violation cost per component id.
    #[serde(default)]
    pub costs: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureSpec {
    pub name: String,
    #[serde(default)]
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpnSpec {
    pub id: String,
    pub places: Vec<String>,
    pub transitions: Vec<TransitionSpec>,
    pub initial_marking: Vec<String>,
    #[serde(default)]
    pub initial_assignment: BTreeMap<String, ValueSpec>,
    pub final_marking: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub name: String,
    /// Activity name; absent for a silent transition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "trivial_guard")]
    pub read: String,
    #[serde(default = "trivial_guard")]
    pub write: String,
    pub inputs: Vec<ArcSpec>,
    pub outputs: Vec<ArcSpec>,
}

fn trivial_guard() -> String {
    "true".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArcSpec {
    Place(String),
    Weighted { place: String, weight: u32 },
}

impl ArcSpec {
    fn parts(&self) -> (&str, u32) {
        match self {
            ArcSpec::Place(p) => (p, 1),
            ArcSpec::Weighted { place, weight } => (place, *weight),
        }
    }
}

/// A number, or an enumeration label of the attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueSpec {
    Number(f64),
    Label(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Raw LTLf; exclusive with `template`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation_condition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_condition: Option<String>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed model: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error("{context}: {source}")]
    Parse { context: String, source: ParseError },
    #[error("{context}: unknown {what} `{name}`")]
    Unknown {
        context: String,
        what: &'static str,
        name: String,
    },
    #[error("{context}: {source}")]
    Guard {
        context: String,
        source: ConditionError,
    },
    #[error("constraint `{id}`: {source}")]
    Template { id: String, source: TemplateError },
    #[error("constraint `{id}`: {reason}")]
    ConstraintShape { id: String, reason: &'static str },
    #[error("component id `{0}` is used twice")]
    DuplicateId(String),
    #[error("cost given for unknown component `{0}`")]
    UnknownCost(String),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("constraint `{id}`: {source}")]
    Automaton { id: String, source: AutomatonError },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Product(#[from] ProductError),
}

/// A resolved model: every name bound, every guard and formula parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridProcessModel {
    pub name: Option<String>,
    pub signatures: Signatures,
    pub enums: EnumTable,
    pub dpns: Vec<Dpnif>,
    pub constraints: Vec<ConstraintDef>,
}

impl HybridProcessModel {
    pub fn cost_model(&self) -> CostModel {
        CostModel::new(
            self.dpns
                .iter()
                .map(|d| (d.id.clone(), d.cost))
                .chain(self.constraints.iter().map(|c| (c.id.clone(), c.cost))),
        )
    }

    pub fn component_ids(&self) -> impl Iterator<Item = &str> {
        self.dpns
            .iter()
            .map(|d| d.id.as_str())
            .chain(self.constraints.iter().map(|c| c.id.as_str()))
    }

    fn context(&self) -> ParseContext<'_> {
        ParseContext {
            signatures: &self.signatures,
            enums: &self.enums,
        }
    }
}

pub fn load_model(path: &Path) -> Result<HybridProcessModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}

pub fn parse_model(text: &str) -> Result<HybridProcessModel, ModelError> {
    let file: ModelFile = serde_json::from_str(text)?;
    resolve(&file)
}

fn unknown(context: impl Into<String>, what: &'static str, name: &str) -> ModelError {
    ModelError::Unknown {
        context: context.into(),
        what,
        name: name.to_string(),
    }
}

fn resolve_value(
    value: &ValueSpec,
    attr: AttrId,
    enums: &EnumTable,
    context: &str,
) -> Result<f64, ModelError> {
    match value {
        ValueSpec::Number(v) => Ok(*v),
        ValueSpec::Label(l) => enums
            .resolve(attr, l)
            .ok_or_else(|| unknown(context, "label", l)),
    }
}

pub fn resolve(file: &ModelFile) -> Result<HybridProcessModel, ModelError> {
    let signatures = Signatures::new(
        file.signatures
            .iter()
            .map(|s| (s.name.as_str(), s.attributes.iter().map(String::as_str))),
    )?;
    let mut enums = EnumTable::default();
    for (attr, table) in &file.enums {
        let id = signatures
            .attribute(attr)
            .ok_or_else(|| unknown("enums", "attribute", attr))?;
        for (label, v) in table {
            enums.insert(id, label.clone(), *v);
        }
    }
    let mut model = HybridProcessModel {
        name: file.name.clone(),
        signatures,
        enums,
        dpns: Vec::new(),
        constraints: Vec::new(),
    };
    let mut ids = BTreeSet::new();
    let cost = |id: &str| file.costs.get(id).copied().ok_or_else(|| CostError::Missing(id.to_string()));
    for spec in &file.dpns {
        if !ids.insert(spec.id.clone()) {
            return Err(ModelError::DuplicateId(spec.id.clone()));
        }
        let d = resolve_dpn(&model, spec, cost(&spec.id)?)?;
        model.dpns.push(d);
    }
    for spec in &file.constraints {
        if !ids.insert(spec.id.clone()) {
            return Err(ModelError::DuplicateId(spec.id.clone()));
        }
        let c = resolve_constraint(&model, spec, cost(&spec.id)?)?;
        model.constraints.push(c);
    }
    if let Some(extra) = file.costs.keys().find(|k| !ids.contains(*k)) {
        return Err(ModelError::UnknownCost(extra.clone()));
    }
    file.costs
        .values()
        .try_fold(0u64, |acc, c| acc.checked_add(*c))
        .ok_or(CostError::Overflow)?;
    Ok(model)
}

fn resolve_dpn(model: &HybridProcessModel, spec: &DpnSpec, cost: u64) -> Result<Dpnif, ModelError> {
    let ctx = model.context();
    let sigs = &model.signatures;
    let mut net = Dpn::new();
    for p in &spec.places {
        if net.place(p).is_some() {
            return Err(ModelError::DuplicateId(format!("{}.{p}", spec.id)));
        }
        net.add_place(p.clone());
    }
    let place = |net: &Dpn, name: &str, context: &str| {
        net.place(name)
            .ok_or_else(|| unknown(context.to_string(), "place", name))
    };
    for t in &spec.transitions {
        let context = format!("net `{}`, transition `{}`", spec.id, t.name);
        let label = match &t.label {
            Some(n) => Some(
                sigs.activity(n)
                    .ok_or_else(|| unknown(context.clone(), "activity", n))?,
            ),
            None => None,
        };
        let guard = |text: &str, which: &str| -> Result<Guard, ModelError> {
            let c = parse_condition(text, ctx).map_err(|source| ModelError::Parse {
                context: format!("{context}, {which} guard"),
                source,
            })?;
            Guard::new(c).map_err(|source| ModelError::Guard {
                context: format!("{context}, {which} guard"),
                source,
            })
        };
        let read = guard(&t.read, "read")?;
        let write = guard(&t.write, "write")?;
        let id = net.add_transition(t.name.clone(), label, read, write);
        for a in &t.inputs {
            let (p, w) = a.parts();
            let p = place(&net, p, &context)?;
            net.add_input(id, p, w);
        }
        for a in &t.outputs {
            let (p, w) = a.parts();
            let p = place(&net, p, &context)?;
            net.add_output(id, p, w);
        }
    }
    let context = format!("net `{}`", spec.id);
    let marking = |names: &[String]| -> Result<Marking, ModelError> {
        let ps = names
            .iter()
            .map(|n| place(&net, n, &context))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Marking::from_places(net.place_count(), ps))
    };
    let initial_marking = marking(&spec.initial_marking)?;
    let final_marking = marking(&spec.final_marking)?;
    let mut initial_assignment = BTreeMap::new();
    for (name, v) in &spec.initial_assignment {
        let attr = sigs
            .attribute(name)
            .ok_or_else(|| unknown(context.clone(), "attribute", name))?;
        initial_assignment.insert(attr, resolve_value(v, attr, &model.enums, &context)?);
    }
    Ok(Dpnif {
        id: spec.id.clone(),
        net,
        initial_marking,
        initial_assignment,
        final_marking,
        cost,
    })
}

fn resolve_constraint(
    model: &HybridProcessModel,
    spec: &ConstraintSpec,
    cost: u64,
) -> Result<ConstraintDef, ModelError> {
    let ctx = model.context();
    let context = format!("constraint `{}`", spec.id);
    let shape = |reason| ModelError::ConstraintShape {
        id: spec.id.clone(),
        reason,
    };
    let parse_cond = |text: &Option<String>, which: &str| -> Result<Option<Condition>, ModelError> {
        text.as_deref()
            .map(|t| {
                parse_condition(t, ctx).map_err(|source| ModelError::Parse {
                    context: format!("{context}, {which} condition"),
                    source,
                })
            })
            .transpose()
    };
    let activity = |name: &Option<String>| -> Result<Option<ActivityId>, ModelError> {
        name.as_deref()
            .map(|n| {
                model
                    .signatures
                    .activity(n)
                    .ok_or_else(|| unknown(context.clone(), "activity", n))
            })
            .transpose()
    };
    let formula = match (&spec.formula, &spec.template) {
        (Some(text), None) => {
            if spec.activation.is_some()
                || spec.target.is_some()
                || spec.activation_condition.is_some()
                || spec.target_condition.is_some()
            {
                return Err(shape("template fields given with a raw formula"));
            }
            parse_ltlf(text, ctx).map_err(|source| ModelError::Parse {
                context: context.clone(),
                source,
            })?
        }
        (None, Some(name)) => {
            let template: Template = name.parse().map_err(|source| ModelError::Template {
                id: spec.id.clone(),
                source,
            })?;
            let activation = activity(&spec.activation)?.ok_or_else(|| shape("missing activation"))?;
            expand_template(
                template,
                activation,
                activity(&spec.target)?,
                parse_cond(&spec.activation_condition, "activation")?,
                parse_cond(&spec.target_condition, "target")?,
            )
            .map_err(|source| ModelError::Template {
                id: spec.id.clone(),
                source,
            })?
        }
        _ => return Err(shape("exactly one of `formula` and `template` is required")),
    };
    Ok(ConstraintDef {
        id: spec.id.clone(),
        name: spec.name.clone().unwrap_or_else(|| spec.id.clone()),
        formula,
        cost,
    })
}

/// The model as a file, with templates expanded into formulas.
pub fn print_model(model: &HybridProcessModel) -> ModelFile {
    let sigs = &model.signatures;
    let signatures = sigs
        .activities()
        .map(|(_, s)| SignatureSpec {
            name: s.name.clone(),
            attributes: s
                .attributes
                .iter()
                .map(|a| sigs.attribute_name(*a).to_string())
                .collect(),
        })
        .collect();
    let mut enums = BTreeMap::new();
    for (attr, name) in sigs.attributes() {
        let table: BTreeMap<String, f64> = model
            .enums
            .labels(attr)
            .map(|(l, v)| (l.to_string(), v))
            .collect();
        if !table.is_empty() {
            enums.insert(name.to_string(), table);
        }
    }
    let dpns = model.dpns.iter().map(|d| print_dpn(d, sigs)).collect();
    let constraints = model
        .constraints
        .iter()
        .map(|c| ConstraintSpec {
            id: c.id.clone(),
            name: (c.name != c.id).then(|| c.name.clone()),
            formula: Some(c.formula.display(sigs).to_string()),
            template: None,
            activation: None,
            target: None,
            activation_condition: None,
            target_condition: None,
        })
        .collect();
    let costs = model
        .cost_model()
        .iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    ModelFile {
        name: model.name.clone(),
        signatures,
        enums,
        dpns,
        constraints,
        costs,
    }
}

fn print_dpn(d: &Dpnif, sigs: &Signatures) -> DpnSpec {
    let net = &d.net;
    let arcs = |list: &[(crate::dpn::PlaceId, u32)]| {
        list.iter()
            .map(|&(p, w)| {
                let place = net.place_name(p).to_string();
                if w == 1 {
                    ArcSpec::Place(place)
                } else {
                    ArcSpec::Weighted { place, weight: w }
                }
            })
            .collect()
    };
    let names = |m: &Marking| {
        m.marked()
            .flat_map(|p| std::iter::repeat_n(net.place_name(p).to_string(), m.tokens(p) as usize))
            .collect()
    };
    DpnSpec {
        id: d.id.clone(),
        places: net.places().map(|(_, n)| n.to_string()).collect(),
        transitions: net
            .transitions()
            .map(|(_, t)| TransitionSpec {
                name: t.name.clone(),
                label: t.label.map(|a| sigs.activity_name(a).to_string()),
                read: t.read.condition().display(sigs).to_string(),
                write: t.write.condition().display(sigs).to_string(),
                inputs: arcs(&t.inputs),
                outputs: arcs(&t.outputs),
            })
            .collect(),
        initial_marking: names(&d.initial_marking),
        initial_assignment: d
            .initial_assignment
            .iter()
            .map(|(a, v)| (sigs.attribute_name(*a).to_string(), ValueSpec::Number(*v)))
            .collect(),
        final_marking: names(&d.final_marking),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Net,
    Constraint,
}

#[derive(Debug, Clone)]
pub struct CompiledComponent {
    pub id: String,
    pub kind: ComponentKind,
    /// Complete automaton before determinization.
    pub automaton: Gfa,
    /// Minimal deterministic complete automaton entering the product.
    pub minimal: Gfa,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub net_states: usize,
    pub formula_states: usize,
    pub product_states: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            net_states: DEFAULT_NET_BOUND,
            formula_states: DEFAULT_STATE_BOUND,
            product_states: DEFAULT_PRODUCT_BOUND,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompiledModel {
    pub model: HybridProcessModel,
    pub domain: Arc<Domain>,
    pub components: Vec<CompiledComponent>,
    pub monitor: Arc<MonitorAutomaton>,
}

/// Constants of every guard, formula and initial assignment in the model.
pub fn model_constants(model: &HybridProcessModel) -> crate::abstraction::ConstantSet {
    let conditions = model
        .dpns
        .iter()
        .flat_map(|d| d.guards())
        .chain(model.constraints.iter().flat_map(|c| c.formula.leaves()));
    let values = model.dpns.iter().flat_map(|d| d.initial_values());
    collect_constants(conditions, values)
}

pub fn compile(model: &HybridProcessModel, bounds: Bounds) -> Result<CompiledModel, ModelError> {
    let partition = Partition::new(&model_constants(model));
    let domain = Arc::new(Domain::new(
        model.signatures.clone(),
        model.enums.clone(),
        partition,
    )?);
    let mut components = Vec::new();
    for d in &model.dpns {
        let automaton = compile_dpnif(d, &domain, bounds.net_states)?.gfa;
        components.push((d.id.clone(), ComponentKind::Net, automaton));
    }
    for c in &model.constraints {
        let automaton = ltlf_to_gfa(&c.formula, &domain, bounds.formula_states).map_err(
            |source| ModelError::Automaton {
                id: c.id.clone(),
                source,
            },
        )?;
        components.push((c.id.clone(), ComponentKind::Constraint, automaton));
    }
    let mut compiled = Vec::new();
    let mut locals = Vec::new();
    for (id, kind, automaton) in components {
        let minimal = minimize(&automaton);
        let local = ProductComponent::new(id.clone(), &minimal)?;
        compiled.push(CompiledComponent {
            id,
            kind,
            automaton,
            minimal,
            verdicts: local.verdicts.clone(),
        });
        locals.push(local);
    }
    let product = product(domain.clone(), locals, bounds.product_states)?;
    let monitor = MonitorAutomaton::new(product, &model.cost_model())?;
    Ok(CompiledModel {
        model: model.clone(),
        domain,
        components: compiled,
        monitor: Arc::new(monitor),
    })
}
