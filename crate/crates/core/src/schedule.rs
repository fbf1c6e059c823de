//! Timed per-assembler action schedules embedded in platform-specific
//! process models.

use serde::{Deserialize, Serialize};

use crate::ids::AssemblerId;
use crate::time::Time;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub entries: Vec<ScheduledAction>,
    pub makespan: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledAction {
    pub action_instance_id: String,
    pub assembler_id: AssemblerId,
    pub start: Time,
    pub finish: Time,
}

impl ScheduledAction {
    pub fn duration(&self) -> Time {
        self.finish - self.start
    }
}

impl Schedule {
    /// Builds a schedule with entries in canonical (start, assembler, action)
    /// order and the makespan filled in.
    pub fn from_entries(mut entries: Vec<ScheduledAction>) -> Schedule {
        entries.sort_by(|a, b| {
            (a.start, &a.assembler_id, &a.action_instance_id).cmp(&(b.start, &b.assembler_id, &b.action_instance_id))
        });
        let makespan = makespan_of(&entries);
        Schedule { entries, makespan }
    }

    pub fn entry(&self, action_instance_id: &str) -> Option<&ScheduledAction> {
        self.entries.iter().find(|e| e.action_instance_id == action_instance_id)
    }
}

fn makespan_of(entries: &[ScheduledAction]) -> Time {
    entries.iter().map(|e| e.finish).max().unwrap_or_default()
}

/// Latest finish over all entries; zero for an empty schedule.
pub fn makespan(schedule: &Schedule) -> Time {
    makespan_of(&schedule.entries)
}
