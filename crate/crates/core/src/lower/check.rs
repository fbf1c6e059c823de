use std::collections::HashMap;
use std::fmt;

use crate::schedule::Schedule;

use super::instance::Instance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleViolation {
    Coverage { action: String, times: usize },
    UnknownEntry { action: String },
    UnknownAssembler { action: String, assembler: String },
    Skill { action: String, assembler: String },
    Duration { action: String },
    Precedence { before: String, after: String },
    Overlap { assembler: String, first: String, second: String },
    Makespan,
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleViolation::Coverage { action, times } => write!(f, "{action} scheduled {times} times"),
            ScheduleViolation::UnknownEntry { action } => write!(f, "{action} is not an action of the model"),
            ScheduleViolation::UnknownAssembler { action, assembler } => {
                write!(f, "{action} placed on unknown assembler {assembler}")
            }
            ScheduleViolation::Skill { action, assembler } => write!(f, "{assembler} lacks the skill for {action}"),
            ScheduleViolation::Duration { action } => write!(f, "{action} duration disagrees with the table"),
            ScheduleViolation::Precedence { before, after } => write!(f, "{after} starts before {before} hands over"),
            ScheduleViolation::Overlap {
                assembler,
                first,
                second,
            } => write!(f, "{first} and {second} overlap on {assembler}"),
            ScheduleViolation::Makespan => write!(f, "makespan is not the latest finish"),
        }
    }
}

/// Checks coverage, skills, durations, precedence (with hand-over transit),
/// per-assembler non-overlap and the recorded makespan.
pub fn check_schedule(inst: &Instance, schedule: &Schedule) -> Vec<ScheduleViolation> {
    let mut out = Vec::new();
    let mut by_action: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, e) in schedule.entries.iter().enumerate() {
        by_action.entry(e.action_instance_id.as_str()).or_default().push(i);
    }
    for e in &schedule.entries {
        if inst.graph.index_of(&e.action_instance_id).is_none() {
            out.push(ScheduleViolation::UnknownEntry {
                action: e.action_instance_id.clone(),
            });
        }
    }
    let mut at = vec![None; inst.len()];
    for (v, node) in inst.graph.nodes.iter().enumerate() {
        let hits = by_action.get(node.id.as_str()).map_or(0, Vec::len);
        if hits != 1 {
            out.push(ScheduleViolation::Coverage {
                action: node.id.clone(),
                times: hits,
            });
            continue;
        }
        let e = &schedule.entries[by_action[node.id.as_str()][0]];
        let Some(a) = inst.assemblers.iter().position(|x| *x == e.assembler_id) else {
            out.push(ScheduleViolation::UnknownAssembler {
                action: node.id.clone(),
                assembler: e.assembler_id.to_string(),
            });
            continue;
        };
        match inst.duration[v][a] {
            None => out.push(ScheduleViolation::Skill {
                action: node.id.clone(),
                assembler: e.assembler_id.to_string(),
            }),
            Some(d) if e.finish.checked_sub(e.start) != Some(d) => {
                out.push(ScheduleViolation::Duration { action: node.id.clone() })
            }
            Some(_) => {}
        }
        at[v] = Some((a, e.start, e.finish));
    }
    for v in 0..inst.len() {
        let Some((av, sv, _)) = at[v] else { continue };
        for &(u, handover) in &inst.preds[v] {
            let Some((au, _, fu)) = at[u] else { continue };
            let ok = inst.delay(handover, au, av).is_some_and(|d| fu + d <= sv);
            if !ok {
                out.push(ScheduleViolation::Precedence {
                    before: inst.graph.nodes[u].id.clone(),
                    after: inst.graph.nodes[v].id.clone(),
                });
            }
        }
    }
    for a in 0..inst.assemblers.len() {
        let mut jobs: Vec<(usize, _, _)> = (0..inst.len())
            .filter_map(|v| at[v].filter(|x| x.0 == a).map(|x| (v, x.1, x.2)))
            .collect();
        jobs.sort_by_key(|j| (j.1, j.2));
        for w in jobs.windows(2) {
            if w[0].2 > w[1].1 {
                out.push(ScheduleViolation::Overlap {
                    assembler: inst.assemblers[a].to_string(),
                    first: inst.graph.nodes[w[0].0].id.clone(),
                    second: inst.graph.nodes[w[1].0].id.clone(),
                });
            }
        }
    }
    if schedule.makespan != crate::schedule::makespan(schedule) {
        out.push(ScheduleViolation::Makespan);
    }
    out
}
