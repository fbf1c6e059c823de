use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::apm::{
    validate_apm, ActionInstance, Activity, AssemblyProcessModel, Operation, OperationKind, Precedence, ProcessKind,
    ProcessLevel, Stage,
};
use crate::catalog::ActionCatalog;
use crate::dag::Dag;
use crate::ids::{kind_tag, ActionId};
use crate::psm::{validate_psm, Connector, PartIndex, ProductStructuralModel, SubAssembly};
use crate::report::ValidationReport;

kind_tag!(ConstraintsTag, "constraints");

/// Precedence edges that the product structure alone cannot imply, e.g.
/// geometric access constraints.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSet {
    pub kind: ConstraintsTag,
    #[serde(default)]
    pub id: String,
    pub edges: Vec<ConstraintEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintEdge {
    pub before: String,
    pub after: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub rationale: String,
}

impl ConstraintSet {
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        ConstraintSet {
            kind: ConstraintsTag,
            id: String::new(),
            edges: pairs
                .iter()
                .map(|(b, a)| ConstraintEdge {
                    before: (*b).into(),
                    after: (*a).into(),
                    rationale: String::new(),
                })
                .collect(),
        }
    }
}

/// Default operation template filled into every generated activity: one
/// feed operation per joined part (`feed[0]` then `feed[1]`), then one
/// assemble operation with a `join` action per consecutive liaison pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub feed: [ActionId; 2],
    pub join: ActionId,
    /// Id of the generated model; defaults to `<psm id>:pi`.
    pub model_id: Option<String>,
}

impl Default for Template {
    fn default() -> Self {
        Template {
            feed: ["pick".into(), "place".into()],
            join: "insert".into(),
            model_id: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerateError {
    #[error("UNRESOLVED_VARIANT: product `{0}` still carries variant annotations")]
    UnresolvedVariant(String),
    #[error("INVALID_PRODUCT: product model is not conformant\n{0}")]
    InvalidProduct(ValidationReport),
    #[error("CONSTRAINT_CYCLE: precedence at level `{level}` is cyclic over {members:?}")]
    ConstraintCycle { level: String, members: Vec<String> },
    #[error("UNKNOWN_ACTIVITY: constraint {before} -> {after} does not name two members of one process level")]
    UnknownActivity { before: String, after: String },
    #[error("TEMPLATE_ACTION: {0}")]
    TemplateAction(String),
    #[error("GENERATOR_INVARIANT: generated model failed validation\n{0}")]
    Invariant(ValidationReport),
}

impl GenerateError {
    pub fn code(&self) -> &'static str {
        match self {
            GenerateError::UnresolvedVariant(_) => "UNRESOLVED_VARIANT",
            GenerateError::InvalidProduct(_) => "INVALID_PRODUCT",
            GenerateError::ConstraintCycle { .. } => "CONSTRAINT_CYCLE",
            GenerateError::UnknownActivity { .. } => "UNKNOWN_ACTIVITY",
            GenerateError::TemplateAction(_) => "TEMPLATE_ACTION",
            GenerateError::Invariant(_) => "GENERATOR_INVARIANT",
        }
    }
}

pub(crate) fn process_id(part: Option<&str>) -> String {
    match part {
        None => "proc".to_owned(),
        Some(p) => format!("proc-{p}"),
    }
}

pub(crate) fn activity_id(connector: &str) -> String {
    format!("act-{connector}")
}

fn check_signature(catalog: &ActionCatalog, action: &ActionId, params: &[&str]) -> Result<(), GenerateError> {
    let entry = catalog
        .get(action)
        .ok_or_else(|| GenerateError::TemplateAction(format!("action `{action}` is not in catalog `{}`", catalog.id)))?;
    if entry.params.iter().map(String::as_str).eq(params.iter().copied()) {
        Ok(())
    } else {
        Err(GenerateError::TemplateAction(format!(
            "action `{action}` must take parameters {params:?}, catalog declares {:?}",
            entry.params
        )))
    }
}

/// Builds the platform-independent process model of a concrete product:
/// one process per composite part plus the root, one activity per
/// connector, "sub-assembly before joining it" edges, and the extra edges.
pub fn generate_pi_apm(
    psm: &ProductStructuralModel,
    extra: &ConstraintSet,
    catalog: &ActionCatalog,
    template: &Template,
) -> Result<AssemblyProcessModel, GenerateError> {
    if psm.has_variant_annotations() {
        return Err(GenerateError::UnresolvedVariant(psm.id.clone()));
    }
    let report = validate_psm(psm);
    if !report.is_conformant() {
        return Err(GenerateError::InvalidProduct(report));
    }
    for feed in &template.feed {
        check_signature(catalog, feed, &["part"])?;
    }
    check_signature(catalog, &template.join, &["liaison_a", "liaison_b"])?;

    let index = PartIndex::new(psm);
    let mut by_parent: HashMap<Option<&str>, Vec<&Connector>> = HashMap::new();
    for c in &psm.connectors {
        let parent = c
            .endpoints
            .first()
            .and_then(|e| index.get(&e.part))
            .and_then(|i| i.parent)
            .map(|p| p.as_str());
        by_parent.entry(parent).or_default().push(c);
    }
    for list in by_parent.values_mut() {
        list.sort_by(|a, b| a.id.cmp(&b.id));
    }

    let gen = Generator {
        by_parent,
        template,
    };
    let mut root = gen.level(None, &psm.parts, 0);

    let mut pending: Vec<&crate::xform::ConstraintEdge> = extra.edges.iter().collect();
    merge_extra(&mut root, &mut pending);
    if let Some(e) = pending.first() {
        return Err(GenerateError::UnknownActivity {
            before: e.before.clone(),
            after: e.after.clone(),
        });
    }
    check_acyclic(&root)?;

    let model = AssemblyProcessModel {
        stage: Stage::PlatformIndependent,
        id: template.model_id.clone().unwrap_or_else(|| format!("{}:pi", psm.id)),
        product_ref: psm.id.clone(),
        catalog_ref: catalog.id.clone(),
        root,
        platform_binding: None,
    };
    let report = validate_apm(&model, psm, catalog);
    if !report.is_conformant() {
        return Err(GenerateError::Invariant(report));
    }
    Ok(model)
}

struct Generator<'a> {
    by_parent: HashMap<Option<&'a str>, Vec<&'a Connector>>,
    template: &'a Template,
}

impl Generator<'_> {
    fn level(&self, part: Option<&str>, children: &[SubAssembly], dcl: u32) -> ProcessLevel {
        let child_processes: Vec<ProcessLevel> = children
            .iter()
            .filter(|c| c.is_composite())
            .map(|c| self.level(Some(c.id.as_str()), &c.children, dcl + 1))
            .collect();
        let connectors = self.by_parent.get(&part).cloned().unwrap_or_default();
        let activities: Vec<Activity> = connectors.iter().map(|c| self.activity(c)).collect();

        let mut precedence = Vec::new();
        for composite in children.iter().filter(|c| c.is_composite()) {
            for c in connectors.iter().filter(|c| c.touches(&composite.id)) {
                precedence.push(Precedence::new(process_id(Some(composite.id.as_str())), activity_id(c.id.as_str())));
            }
        }
        ProcessLevel {
            id: process_id(part),
            dcl,
            kind: if child_processes.is_empty() {
                ProcessKind::PrimitiveChilds
            } else {
                ProcessKind::CompositeChild
            },
            part: part.map(Into::into),
            child_processes,
            activities,
            precedence,
        }
    }

    fn activity(&self, c: &Connector) -> Activity {
        let act = activity_id(c.id.as_str());
        let join_id = format!("{act}.join");
        let mut operations = Vec::new();
        let mut precedence = Vec::new();
        for part in c.parts() {
            let op_id = format!("{act}.feed-{part}");
            let actions: Vec<ActionInstance> = self
                .template
                .feed
                .iter()
                .map(|a| ActionInstance {
                    id: format!("{op_id}.{a}"),
                    action: a.clone(),
                    bindings: BTreeMap::from([("part".to_owned(), part.to_string())]),
                })
                .collect();
            let op_precedence = vec![Precedence::new(&actions[0].id, &actions[1].id)];
            precedence.push(Precedence::new(&op_id, &join_id));
            operations.push(Operation {
                id: op_id,
                kind: OperationKind::Feed,
                actions,
                precedence: op_precedence,
            });
        }
        let joins = c
            .endpoints
            .windows(2)
            .enumerate()
            .map(|(i, pair)| ActionInstance {
                id: format!("{join_id}.{}-{}", self.template.join, i + 1),
                action: self.template.join.clone(),
                bindings: BTreeMap::from([
                    ("liaison_a".to_owned(), format!("{}/{}", pair[0].part, pair[0].liaison)),
                    ("liaison_b".to_owned(), format!("{}/{}", pair[1].part, pair[1].liaison)),
                ]),
            })
            .collect();
        operations.push(Operation {
            id: join_id,
            kind: OperationKind::Assemble,
            actions: joins,
            precedence: vec![],
        });
        Activity {
            id: act,
            connector: Some(c.id.clone()),
            sub_activities: vec![],
            operations,
            precedence,
        }
    }
}

fn merge_extra(level: &mut ProcessLevel, pending: &mut Vec<&ConstraintEdge>) {
    let members: Vec<String> = level.member_ids().into_iter().map(str::to_owned).collect();
    pending.retain(|e| {
        if members.contains(&e.before) && members.contains(&e.after) {
            let p = Precedence::new(&e.before, &e.after);
            if !level.precedence.contains(&p) {
                level.precedence.push(p);
            }
            false
        } else {
            true
        }
    });
    for child in &mut level.child_processes {
        merge_extra(child, pending);
    }
}

fn check_acyclic(level: &ProcessLevel) -> Result<(), GenerateError> {
    let members = level.member_ids();
    let pos: HashMap<&str, usize> = members.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut dag = Dag::new(members.len());
    for p in &level.precedence {
        if let (Some(&u), Some(&v)) = (pos.get(p.before.as_str()), pos.get(p.after.as_str())) {
            dag.add_edge(u, v);
        }
    }
    if let Err(stuck) = dag.topological_order() {
        return Err(GenerateError::ConstraintCycle {
            level: level.id.clone(),
            members: stuck.iter().map(|&i| members[i].to_owned()).collect(),
        });
    }
    level.child_processes.iter().try_for_each(check_acyclic)
}
