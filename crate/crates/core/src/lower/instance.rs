use crate::apm::{flatten_to_action_graph, ActionGraph, AssemblyProcessModel};
use crate::aspm::{PlatformModel, Routes};
use crate::catalog::ActionCatalog;
use crate::ids::AssemblerId;
use crate::schedule::{Schedule, ScheduledAction};
use crate::time::Time;

use super::LowerError;

/// Scheduling view of a process model on a platform. Holds the action
/// precedence graph with per-assembler durations and transit times.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: ActionGraph,
    /// Assembler ids, sorted.
    pub assemblers: Vec<AssemblerId>,
    /// `duration[action][assembler]`; `None` if the assembler cannot run it.
    pub duration: Vec<Vec<Option<Time>>>,
    /// `transit[from][to]` for cross-assembler hand-over; `None` if no route.
    pub transit: Vec<Vec<Option<Time>>>,
    /// `preds[v]` = (u, hand-over applies) for every edge u -> v.
    pub preds: Vec<Vec<(usize, bool)>>,
    /// Topological order of the actions.
    pub topo: Vec<usize>,
}

impl Instance {
    pub fn new(
        apm: &AssemblyProcessModel,
        platform: &PlatformModel,
        catalog: &ActionCatalog,
    ) -> Result<Instance, LowerError> {
        let graph = flatten_to_action_graph(apm);
        let sites = platform.assemblers();
        let assemblers: Vec<AssemblerId> = sites.iter().map(|s| s.assembler.id.clone()).collect();
        let table = platform.duration_table();
        let mut duration = Vec::with_capacity(graph.len());
        for node in &graph.nodes {
            let skill = catalog
                .skill_of(&node.action)
                .ok_or_else(|| LowerError::UnknownAction(node.action.clone()))?;
            duration.push(
                sites
                    .iter()
                    .map(|s| {
                        if s.assembler.skills.contains(skill) {
                            table.get(skill, &s.assembler.id)
                        } else {
                            None
                        }
                    })
                    .collect(),
            );
        }
        let routes = Routes::new(platform);
        let transit = assemblers
            .iter()
            .map(|from| {
                assemblers
                    .iter()
                    .map(|to| routes.get(from, to).map(|r| r.transit))
                    .collect()
            })
            .collect();
        let preds = (0..graph.len())
            .map(|v| {
                graph
                    .dag
                    .predecessors(v)
                    .map(|u| (u, graph.same_operation(u, v)))
                    .collect()
            })
            .collect();
        let topo = graph
            .dag
            .topological_order()
            .map_err(|_| LowerError::Cyclic)?;
        Ok(Instance {
            graph,
            assemblers,
            duration,
            transit,
            preds,
            topo,
        })
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    pub fn capable(&self, action: usize) -> impl Iterator<Item = (usize, Time)> + '_ {
        self.duration[action]
            .iter()
            .enumerate()
            .filter_map(|(a, d)| d.map(|d| (a, d)))
    }

    pub fn min_duration(&self, action: usize) -> Time {
        self.capable(action).map(|(_, d)| d).min().unwrap_or_default()
    }

    /// Hand-over delay on edge u -> v, or `None` if the items cannot travel.
    pub fn delay(&self, handover: bool, from: usize, to: usize) -> Option<Time> {
        if !handover || from == to {
            Some(Time::ZERO)
        } else {
            self.transit[from][to]
        }
    }

    /// Earliest start of `v` on `assembler` given already-placed
    /// predecessors, ignoring the assembler's own availability.
    pub fn ready_time(&self, v: usize, assembler: usize, placed: &[Option<Placed>]) -> Option<Time> {
        let mut ready = Time::ZERO;
        for &(u, handover) in &self.preds[v] {
            let p = placed[u].expect("predecessor placed first");
            ready = ready.max(p.finish + self.delay(handover, p.assembler, assembler)?);
        }
        Some(ready)
    }

    pub fn to_schedule(&self, placed: &[Option<Placed>]) -> Schedule {
        Schedule::from_entries(
            placed
                .iter()
                .enumerate()
                .map(|(v, p)| {
                    let p = p.expect("every action placed");
                    ScheduledAction {
                        action_instance_id: self.graph.nodes[v].id.clone(),
                        assembler_id: self.assemblers[p.assembler].clone(),
                        start: p.start,
                        finish: p.finish,
                    }
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placed {
    pub assembler: usize,
    pub start: Time,
    pub finish: Time,
}
