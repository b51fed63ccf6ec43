//! Line-delimited traces: one `{"name": ..., "attrs": {...}}` record per
//! line. Attribute values are numbers or enumeration labels. Blank lines are
//! ignored.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::condition::{Event, EventError};

use super::{HybridProcessModel, ValueSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEvent {
    pub name: String,
    #[serde(default)]
    pub attrs: BTreeMap<String, ValueSpec>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EventInputError {
    #[error(transparent)]
    Event(#[from] EventError),
    #[error("`{activity}` has no attribute `{attribute}`")]
    UnknownAttribute { activity: String, attribute: String },
    #[error("unknown label `{label}` for attribute `{attribute}`")]
    UnknownLabel { attribute: String, label: String },
}

impl RawEvent {
    pub fn resolve(&self, model: &HybridProcessModel) -> Result<Event, EventInputError> {
        let sigs = &model.signatures;
        let mut payload = Vec::new();
        for (name, value) in &self.attrs {
            let attr = sigs
                .attribute(name)
                .ok_or_else(|| EventInputError::UnknownAttribute {
                    activity: self.name.clone(),
                    attribute: name.clone(),
                })?;
            let v = match value {
                ValueSpec::Number(v) => *v,
                ValueSpec::Label(l) => model.enums.resolve(attr, l).ok_or_else(|| {
                    EventInputError::UnknownLabel {
                        attribute: name.clone(),
                        label: l.clone(),
                    }
                })?,
            };
            payload.push((attr, v));
        }
        Ok(Event::checked(sigs, &self.name, payload)?)
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

/// Reads and resolves a whole trace.
pub fn read_trace(
    reader: impl BufRead,
    model: &HybridProcessModel,
) -> Result<Vec<Event>, TraceError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| TraceError::Line {
            line: i + 1,
            message,
        };
        let raw: RawEvent = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        out.push(raw.resolve(model).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

pub fn parse_trace(text: &str, model: &HybridProcessModel) -> Result<Vec<Event>, TraceError> {
    read_trace(text.as_bytes(), model)
}
