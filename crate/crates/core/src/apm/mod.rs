//! Assembly process models in platform-independent and platform-specific
//! form. Process levels nest down to primitive activities, which decompose
//! into operations and then action instances; every level carries its own
//! precedence constraints.

mod flatten;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ids::{ActionId, ConnectorId, PartId};
use crate::schedule::Schedule;

pub use flatten::{flatten_to_action_graph, ActionGraph, ActionNode};
pub use validate::{validate_apm, validate_apm_structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "apm-pi")]
    PlatformIndependent,
    #[serde(rename = "apm-ps")]
    PlatformSpecific,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblyProcessModel {
    #[serde(rename = "kind")]
    pub stage: Stage,
    pub id: String,
    pub product_ref: String,
    pub catalog_ref: String,
    pub root: ProcessLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform_binding: Option<PlatformBinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformBinding {
    pub platform_ref: String,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    /// Every child of the assembled part is primitive.
    PrimitiveChilds,
    /// At least one child is composite and has its own child process.
    CompositeChild,
}

/// The process assembling one composite part (or, at the root, the product)
/// from the parts of one decomposition level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessLevel {
    pub id: String,
    pub dcl: u32,
    pub kind: ProcessKind,
    /// Composite part assembled by this process; absent for the root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<PartId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub child_processes: Vec<ProcessLevel>,
    #[serde(default)]
    pub activities: Vec<Activity>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub precedence: Vec<Precedence>,
}

/// A primitive assembly activity realizing one connector. Either nests
/// further activities or, at the leaves, carries operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Activity {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connector: Option<ConnectorId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sub_activities: Vec<Activity>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub operations: Vec<Operation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub precedence: Vec<Precedence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationKind {
    Assemble,
    Move,
    Handle,
    Feed,
    Inspect,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Operation {
    pub id: String,
    pub kind: OperationKind,
    pub actions: Vec<ActionInstance>,
    /// Partial order over the actions; never implicitly total.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub precedence: Vec<Precedence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionInstance {
    pub id: String,
    pub action: ActionId,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bindings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Precedence {
    pub before: String,
    pub after: String,
}

impl Precedence {
    pub fn new(before: impl Into<String>, after: impl Into<String>) -> Self {
        Precedence {
            before: before.into(),
            after: after.into(),
        }
    }
}

impl ProcessLevel {
    /// Ids of the members precedence edges at this level may refer to.
    pub fn member_ids(&self) -> Vec<&str> {
        self.child_processes
            .iter()
            .map(|p| p.id.as_str())
            .chain(self.activities.iter().map(|a| a.id.as_str()))
            .collect()
    }

    /// This process and all nested processes, pre-order.
    pub fn processes(&self) -> Vec<&ProcessLevel> {
        let mut out = vec![self];
        for c in &self.child_processes {
            out.extend(c.processes());
        }
        out
    }

    pub fn find(&self, id: &str) -> Option<&ProcessLevel> {
        self.processes().into_iter().find(|p| p.id == id)
    }
}

impl Activity {
    pub fn member_ids(&self) -> Vec<&str> {
        self.sub_activities
            .iter()
            .map(|a| a.id.as_str())
            .chain(self.operations.iter().map(|o| o.id.as_str()))
            .collect()
    }

    pub fn all_operations(&self) -> Vec<&Operation> {
        let mut out: Vec<&Operation> = self.operations.iter().collect();
        for s in &self.sub_activities {
            out.extend(s.all_operations());
        }
        out
    }
}

impl AssemblyProcessModel {
    pub fn operations(&self) -> Vec<&Operation> {
        self.root
            .processes()
            .into_iter()
            .flat_map(|p| p.activities.iter())
            .flat_map(Activity::all_operations)
            .collect()
    }

    pub fn action_instances(&self) -> Vec<&ActionInstance> {
        self.operations().into_iter().flat_map(|o| o.actions.iter()).collect()
    }

    /// All top-level activities of every process level.
    pub fn activities(&self) -> Vec<&Activity> {
        self.root
            .processes()
            .into_iter()
            .flat_map(|p| p.activities.iter())
            .collect()
    }
}

/// Distinct catalog actions referenced by any instance.
pub fn required_actions(model: &AssemblyProcessModel) -> BTreeSet<ActionId> {
    model.action_instances().into_iter().map(|a| a.action.clone()).collect()
}
