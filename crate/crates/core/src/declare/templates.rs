//! Standard Declare patterns as pure-future LTLf.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::condition::{ActivityId, Condition};

use super::Ltlf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Template {
    Existence,
    RespondedExistence,
    Response,
    AlternateResponse,
    ChainResponse,
    Precedence,
    ChainPrecedence,
    NotCoexistence,
    NotResponse,
    NotChainResponse,
}

impl Template {
    pub const ALL: [Template; 10] = [
        Template::Existence,
        Template::RespondedExistence,
        Template::Response,
        Template::AlternateResponse,
        Template::ChainResponse,
        Template::Precedence,
        Template::ChainPrecedence,
        Template::NotCoexistence,
        Template::NotResponse,
        Template::NotChainResponse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::Existence => "existence",
            Template::RespondedExistence => "responded-existence",
            Template::Response => "response",
            Template::AlternateResponse => "alternate-response",
            Template::ChainResponse => "chain-response",
            Template::Precedence => "precedence",
            Template::ChainPrecedence => "chain-precedence",
            Template::NotCoexistence => "not-coexistence",
            Template::NotResponse => "not-response",
            Template::NotChainResponse => "not-chain-response",
        }
    }

    /// Whether the pattern relates an activation to a target.
    pub fn is_binary(self) -> bool {
        self != Template::Existence
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("unknown template `{0}`")]
    Unknown(String),
    #[error("template `{0}` needs a target")]
    MissingTarget(Template),
    #[error("template `{0}` takes no target")]
    UnexpectedTarget(Template),
}

impl FromStr for Template {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Template::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| TemplateError::Unknown(s.to_string()))
    }
}

fn side(activity: ActivityId, cond: Option<Condition>) -> Ltlf {
    let atom = Condition::Activity(activity);
    Ltlf::Leaf(match cond {
        Some(Condition::True) | None => atom,
        Some(c) => atom.and(c),
    })
}

/// Instantiates a pattern. The activation is `activation ∧ activation_cond`
/// and likewise for the target.
pub fn expand_template(
    template: Template,
    activation: ActivityId,
    target: Option<ActivityId>,
    activation_cond: Option<Condition>,
    target_cond: Option<Condition>,
) -> Result<Ltlf, TemplateError> {
    let act = side(activation, activation_cond);
    if !template.is_binary() {
        if target.is_some() {
            return Err(TemplateError::UnexpectedTarget(template));
        }
        return Ok(act.eventually());
    }
    let tgt = side(
        target.ok_or(TemplateError::MissingTarget(template))?,
        target_cond,
    );
    Ok(match template {
        Template::Existence => unreachable!(),
        Template::RespondedExistence => act.eventually().implies(tgt.eventually()),
        Template::Response => act.implies(tgt.eventually()).always(),
        Template::AlternateResponse => act
            .clone()
            .implies(act.not().until(tgt).next())
            .always(),
        Template::ChainResponse => act.implies(tgt.next()).always(),
        Template::Precedence => act.clone().not().until(tgt).or(act.not().always()),
        // the first event is not an activation
        Template::ChainPrecedence => act
            .clone()
            .not()
            .and(act.next().implies(tgt).always()),
        Template::NotCoexistence => act.eventually().and(tgt.eventually()).not(),
        Template::NotResponse => act.implies(tgt.eventually().next().not()).always(),
        Template::NotChainResponse => act.implies(tgt.next().not()).always(),
    })
}
