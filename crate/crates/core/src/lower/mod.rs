//! Refinement of a platform-independent process model into a
//! platform-specific one. Feasibility is checked against the platform's
//! skills before actions are assigned and scheduled.

mod check;
mod exact;
mod instance;
mod list;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::apm::{required_actions, AssemblyProcessModel, PlatformBinding, Stage};
use crate::aspm::{capability_gap, CapabilityError, PlatformModel};
use crate::catalog::ActionCatalog;
use crate::ids::ActionId;
use crate::schedule::Schedule;

pub use check::{check_schedule, ScheduleViolation};
pub use instance::Instance;

/// Largest flattened action count the exact strategy accepts.
pub const EXACT_MAX_ACTIONS: usize = 12;
/// Largest platform (assembler count) the exact strategy accepts.
pub const EXACT_MAX_ASSEMBLERS: usize = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    ListHeuristic,
    Exact,
}

/// Scheduling strategy; tie-breaking is always lexicographic by id.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoweringPolicy {
    pub strategy: Strategy,
}

impl LoweringPolicy {
    pub const LIST: LoweringPolicy = LoweringPolicy {
        strategy: Strategy::ListHeuristic,
    };
    pub const EXACT: LoweringPolicy = LoweringPolicy {
        strategy: Strategy::Exact,
    };
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LowerError {
    #[error("INFEASIBLE: platform lacks skills for actions {}", join(.gap))]
    Infeasible { gap: BTreeSet<ActionId> },
    #[error("UNKNOWN_ACTION: action `{0}` is not in the catalog")]
    UnknownAction(ActionId),
    #[error("EXACT_LIMIT: {actions} actions on {assemblers} assemblers exceeds the exact cap ({EXACT_MAX_ACTIONS} actions, {EXACT_MAX_ASSEMBLERS} assemblers)")]
    ExactLimit { actions: usize, assemblers: usize },
    #[error("NO_ROUTE: no platform route lets `{action}` receive its predecessors' items")]
    NoRoute { action: String },
    #[error("NOT_PLATFORM_INDEPENDENT: model `{0}` is already platform specific")]
    WrongStage(String),
    #[error("CYCLIC: flattened action precedence is cyclic")]
    Cyclic,
}

fn join(gap: &BTreeSet<ActionId>) -> String {
    let names: Vec<&str> = gap.iter().map(ActionId::as_str).collect();
    format!("{{{}}}", names.join(", "))
}

impl LowerError {
    pub fn code(&self) -> &'static str {
        match self {
            LowerError::Infeasible { .. } => "INFEASIBLE",
            LowerError::UnknownAction(_) => "UNKNOWN_ACTION",
            LowerError::ExactLimit { .. } => "EXACT_LIMIT",
            LowerError::NoRoute { .. } => "NO_ROUTE",
            LowerError::WrongStage(_) => "NOT_PLATFORM_INDEPENDENT",
            LowerError::Cyclic => "CYCLIC",
        }
    }
}

impl From<CapabilityError> for LowerError {
    fn from(e: CapabilityError) -> Self {
        match e {
            CapabilityError::UnknownAction(a) => LowerError::UnknownAction(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub gap: BTreeSet<ActionId>,
}

/// Feasible iff every action the model uses is realized by some skill of
/// the platform.
pub fn check_feasibility(
    apm: &AssemblyProcessModel,
    platform: &PlatformModel,
    catalog: &ActionCatalog,
) -> Result<Feasibility, CapabilityError> {
    let gap = capability_gap(&required_actions(apm), platform, catalog)?;
    Ok(Feasibility {
        feasible: gap.is_empty(),
        gap,
    })
}

fn exact_guard(inst: &Instance) -> Result<(), LowerError> {
    if inst.len() > EXACT_MAX_ACTIONS || inst.assemblers.len() > EXACT_MAX_ASSEMBLERS {
        return Err(LowerError::ExactLimit {
            actions: inst.len(),
            assemblers: inst.assemblers.len(),
        });
    }
    Ok(())
}

fn prepare(
    apm: &AssemblyProcessModel,
    platform: &PlatformModel,
    catalog: &ActionCatalog,
) -> Result<Instance, LowerError> {
    let f = check_feasibility(apm, platform, catalog)?;
    if !f.feasible {
        return Err(LowerError::Infeasible { gap: f.gap });
    }
    Instance::new(apm, platform, catalog)
}

/// The list-heuristic schedule.
pub fn list_schedule(
    apm: &AssemblyProcessModel,
    platform: &PlatformModel,
    catalog: &ActionCatalog,
) -> Result<Schedule, LowerError> {
    let inst = prepare(apm, platform, catalog)?;
    Ok(inst.to_schedule(&list::list_schedule(&inst)?))
}

/// Minimum-makespan schedule that respects precedence with hand-over
/// transit and never overlaps actions on one assembler. The result is the
/// canonical optimum for fixed inputs.
pub fn exact_schedule(
    apm: &AssemblyProcessModel,
    platform: &PlatformModel,
    catalog: &ActionCatalog,
) -> Result<Schedule, LowerError> {
    let inst = prepare(apm, platform, catalog)?;
    exact_guard(&inst)?;
    exact_on(&inst)
}

fn exact_on(inst: &Instance) -> Result<Schedule, LowerError> {
    let heuristic = list::list_schedule(inst);
    let upper = heuristic.as_ref().ok().map(|p| inst.to_schedule(p).makespan);
    match exact::exact_placement(inst, upper) {
        Some(placed) => Ok(inst.to_schedule(&placed)),
        None => Err(heuristic.err().unwrap_or(LowerError::NoRoute {
            action: inst.graph.nodes.first().map(|n| n.id.clone()).unwrap_or_default(),
        })),
    }
}

/// Refines a platform-independent model into a platform-specific one bound
/// to `platform` with an embedded schedule.
pub fn lower(
    apm: &AssemblyProcessModel,
    platform: &PlatformModel,
    catalog: &ActionCatalog,
    policy: LoweringPolicy,
) -> Result<AssemblyProcessModel, LowerError> {
    if apm.stage != Stage::PlatformIndependent {
        return Err(LowerError::WrongStage(apm.id.clone()));
    }
    let inst = prepare(apm, platform, catalog)?;
    let schedule = match policy.strategy {
        Strategy::ListHeuristic => inst.to_schedule(&list::list_schedule(&inst)?),
        Strategy::Exact => {
            exact_guard(&inst)?;
            exact_on(&inst)?
        }
    };
    Ok(AssemblyProcessModel {
        stage: Stage::PlatformSpecific,
        id: format!("{}+{}", apm.id, platform.id),
        platform_binding: Some(PlatformBinding {
            platform_ref: platform.id.clone(),
            schedule,
        }),
        ..apm.clone()
    })
}

#[cfg(test)]
pub(crate) mod tests;
