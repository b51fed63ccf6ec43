//! Offline replay of a trace through a compiled model.

use serde::Serialize;

use crate::condition::{Event, EventError};
use crate::gfa::Verdict;
use crate::monitor::{ComponentVerdict, MonitorSession, VerdictSnapshot};

use super::CompiledModel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalVerdicts {
    pub global: Verdict,
    pub components: Vec<ComponentVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    /// The initial snapshot, then one per event.
    pub snapshots: Vec<VerdictSnapshot>,
    #[serde(rename = "final")]
    pub final_verdicts: FinalVerdicts,
    pub first_conflict: Option<usize>,
    /// Cost of the components left unsatisfied by the completed trace.
    pub total_cost: u64,
}

impl ReplayReport {
    /// 0 when permanently satisfied, 1 when permanently violated, 2 while
    /// still open.
    pub fn exit_code(&self) -> i32 {
        match self.final_verdicts.global {
            Verdict::PermanentlySatisfied => 0,
            Verdict::PermanentlyViolated => 1,
            _ => 2,
        }
    }
}

pub fn replay(model: &CompiledModel, trace: &[Event]) -> Result<ReplayReport, EventError> {
    let mut session = MonitorSession::new(model.monitor.clone());
    for e in trace {
        session.step(e.clone())?;
    }
    let snapshots = session.log().to_vec();
    let last = snapshots.last().expect("initial snapshot");
    Ok(ReplayReport {
        final_verdicts: FinalVerdicts {
            global: last.global,
            components: last.components.clone(),
        },
        first_conflict: snapshots.iter().position(|s| s.first_conflict),
        total_cost: last.cost_cur,
        snapshots,
    })
}
