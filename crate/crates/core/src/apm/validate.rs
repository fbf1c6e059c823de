use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::catalog::ActionCatalog;
use crate::dag::Dag;
use crate::ids::ConnectorId;
use crate::psm::{PartIndex, ProductStructuralModel};
use crate::report::{Rule, ValidationReport};

use super::{Activity, AssemblyProcessModel, Precedence, ProcessKind, ProcessLevel, Stage};

/// Checks a process model against the process meta-model, the product model
/// it refers to, and the action catalog.
pub fn validate_apm(
    model: &AssemblyProcessModel,
    psm: &ProductStructuralModel,
    catalog: &ActionCatalog,
) -> ValidationReport {
    Checker::new(model, Some(psm), Some(catalog)).run()
}

/// The subset of [`validate_apm`] that needs neither the product model nor
/// the catalog. It covers the model's own structure and precedence graphs.
pub fn validate_apm_structure(model: &AssemblyProcessModel) -> ValidationReport {
    Checker::new(model, None, None).run()
}

struct Checker<'a> {
    model: &'a AssemblyProcessModel,
    psm: Option<(&'a ProductStructuralModel, PartIndex<'a>)>,
    catalog: Option<&'a ActionCatalog>,
    report: ValidationReport,
    ids: BTreeSet<&'a str>,
    realized: BTreeMap<&'a ConnectorId, usize>,
}

impl<'a> Checker<'a> {
    fn new(
        model: &'a AssemblyProcessModel,
        psm: Option<&'a ProductStructuralModel>,
        catalog: Option<&'a ActionCatalog>,
    ) -> Self {
        Checker {
            model,
            psm: psm.map(|p| (p, PartIndex::new(p))),
            catalog,
            report: ValidationReport::new(&model.id),
            ids: BTreeSet::new(),
            realized: BTreeMap::new(),
        }
    }

    fn run(mut self) -> ValidationReport {
        let model = self.model;
        match (model.stage, &model.platform_binding) {
            (Stage::PlatformIndependent, Some(_)) => self.report.violation(
                Rule::StageBindingMismatch,
                &model.id,
                "platform-independent model carries a platform binding",
            ),
            (Stage::PlatformSpecific, None) => self.report.violation(
                Rule::StageBindingMismatch,
                &model.id,
                "platform-specific model has no platform binding",
            ),
            _ => {}
        }
        if model.root.dcl != 0 {
            self.report.violation(Rule::DclMismatch, &model.root.id, "root process must be at level 0");
        }
        if model.root.part.is_some() {
            self.report.violation(
                Rule::UnknownCompositePart,
                &model.root.id,
                "root process assembles the product, not a part",
            );
        }
        self.process(&model.root, None);

        if let Some((psm, _)) = &self.psm {
            for c in &psm.connectors {
                if !self.realized.contains_key(&c.id) {
                    self.report.warning(
                        Rule::ConnectorNotRealized,
                        c.id.as_str(),
                        format!("no activity realizes connector `{}`", c.id),
                    );
                }
            }
        }

        if let Some(binding) = &model.platform_binding {
            let mut counts: HashMap<&str, usize> = model
                .action_instances()
                .into_iter()
                .map(|a| (a.id.as_str(), 0))
                .collect();
            for e in &binding.schedule.entries {
                match counts.get_mut(e.action_instance_id.as_str()) {
                    Some(n) => *n += 1,
                    None => self.report.violation(
                        Rule::ScheduleIncomplete,
                        &e.action_instance_id,
                        "schedule entry names an unknown action instance",
                    ),
                }
            }
            let mut wrong: Vec<(&str, usize)> = counts.into_iter().filter(|(_, n)| *n != 1).collect();
            wrong.sort();
            for (id, n) in wrong {
                self.report.violation(
                    Rule::ScheduleIncomplete,
                    id,
                    format!("action instance scheduled {n} times; exactly once is required"),
                );
            }
        }
        self.report
    }

    fn claim(&mut self, id: &'a str) {
        if !self.ids.insert(id) {
            self.report
                .violation(Rule::DuplicateId, id, format!("id `{id}` is used more than once in the model"));
        }
    }

    fn process(&mut self, p: &'a ProcessLevel, parent: Option<&'a ProcessLevel>) {
        self.claim(&p.id);
        let expected_kind = if p.child_processes.is_empty() {
            ProcessKind::PrimitiveChilds
        } else {
            ProcessKind::CompositeChild
        };
        if p.kind != expected_kind {
            self.report.violation(
                Rule::ProcessKindMismatch,
                &p.id,
                format!(
                    "process has {} child process(es) but is declared {:?}",
                    p.child_processes.len(),
                    p.kind
                ),
            );
        }
        if let Some(parent) = parent {
            if p.dcl != parent.dcl + 1 {
                self.report.violation(
                    Rule::DclMismatch,
                    &p.id,
                    format!("child process at level {} under a level-{} process", p.dcl, parent.dcl),
                );
            }
            self.check_part(p, parent);
        }
        for a in &p.activities {
            self.activity(a, p, None);
        }
        self.precedence(&p.id, &p.member_ids(), &p.precedence);
        for c in &p.child_processes {
            self.process(c, Some(p));
        }
    }

    fn check_part(&mut self, p: &'a ProcessLevel, parent: &'a ProcessLevel) {
        let Some(part) = &p.part else {
            self.report.violation(
                Rule::UnknownCompositePart,
                &p.id,
                "child process does not name the composite part it assembles",
            );
            return;
        };
        let Some((_, index)) = &self.psm else { return };
        match index.get(part) {
            Some(info) if info.part.is_composite() => {
                if info.dcl + 1 != p.dcl || info.parent != parent.part.as_ref() {
                    self.report.violation(
                        Rule::DclMismatch,
                        &p.id,
                        format!("part `{part}` does not sit directly under the parent process's part"),
                    );
                }
            }
            _ => self.report.violation(
                Rule::UnknownCompositePart,
                &p.id,
                format!("`{part}` is not a composite part of the product"),
            ),
        }
    }

    fn activity(&mut self, a: &'a Activity, process: &'a ProcessLevel, parent: Option<&'a Activity>) {
        self.claim(&a.id);
        match (&a.connector, parent) {
            (None, None) => self.report.violation(
                Rule::ActivityShape,
                &a.id,
                "activity does not name the connector it realizes",
            ),
            (Some(c), Some(outer)) if outer.connector.as_ref().is_some_and(|o| o != c) => self.report.violation(
                Rule::ActivityShape,
                &a.id,
                format!("nested activity realizes `{c}`, its parent a different connector"),
            ),
            _ => {}
        }
        if parent.is_none() {
            if let Some(c) = &a.connector {
                *self.realized.entry(c).or_default() += 1;
                self.check_connector(a, c, process);
            }
        }
        if a.sub_activities.is_empty() == a.operations.is_empty() {
            self.report.violation(
                Rule::ActivityShape,
                &a.id,
                "an activity carries either sub-activities or operations, not both or neither",
            );
        }
        for s in &a.sub_activities {
            self.activity(s, process, Some(a));
        }
        for op in &a.operations {
            self.claim(&op.id);
            if op.actions.is_empty() {
                self.report
                    .violation(Rule::EmptyOperation, &op.id, "operation has no actions");
            }
            for inst in &op.actions {
                self.claim(&inst.id);
                if let Some(catalog) = self.catalog {
                    match catalog.get(&inst.action) {
                        None => self.report.violation(
                            Rule::UnknownAction,
                            &inst.id,
                            format!("action `{}` is not in catalog `{}`", inst.action, catalog.id),
                        ),
                        Some(entry) => {
                            let bound: BTreeSet<&str> = inst.bindings.keys().map(String::as_str).collect();
                            let wanted: BTreeSet<&str> = entry.params.iter().map(String::as_str).collect();
                            if bound != wanted {
                                self.report.violation(
                                    Rule::BindingMismatch,
                                    &inst.id,
                                    format!(
                                        "bindings {:?} do not match the signature {:?} of `{}`",
                                        bound, wanted, entry.id
                                    ),
                                );
                            }
                        }
                    }
                }
            }
            let members: Vec<&str> = op.actions.iter().map(|x| x.id.as_str()).collect();
            self.precedence(&op.id, &members, &op.precedence);
        }
        self.precedence(&a.id, &a.member_ids(), &a.precedence);
    }

    fn check_connector(&mut self, a: &'a Activity, c: &ConnectorId, process: &'a ProcessLevel) {
        let Some((psm, index)) = &self.psm else { return };
        let Some(connector) = psm.connectors.iter().find(|x| &x.id == c) else {
            self.report.violation(
                Rule::DanglingConnector,
                &a.id,
                format!("connector `{c}` does not exist in product `{}`", psm.id),
            );
            return;
        };
        let at_level = connector
            .endpoints
            .iter()
            .filter_map(|e| index.get(&e.part))
            .all(|info| info.dcl == process.dcl && info.parent == process.part.as_ref());
        if !at_level {
            self.report.violation(
                Rule::DclMismatch,
                &a.id,
                format!("connector `{c}` joins parts outside the level of process `{}`", process.id),
            );
        }
    }

    fn precedence(&mut self, owner: &str, members: &[&str], edges: &[Precedence]) {
        let position: HashMap<&str, usize> = members.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let mut dag = Dag::new(members.len());
        for e in edges {
            if e.before == e.after {
                self.report.violation(
                    Rule::PrecedenceSelfLoop,
                    owner,
                    format!("`{}` cannot precede itself", e.before),
                );
                continue;
            }
            match (position.get(e.before.as_str()), position.get(e.after.as_str())) {
                (Some(&u), Some(&v)) => {
                    dag.add_edge(u, v);
                }
                _ => self.report.violation(
                    Rule::PrecedenceUnknownMember,
                    owner,
                    format!("edge {} -> {} references a non-member of `{owner}`", e.before, e.after),
                ),
            }
        }
        if let Err(stuck) = dag.topological_order() {
            let names: Vec<&str> = stuck.iter().map(|&i| members[i]).collect();
            self.report.violation(
                Rule::PrecedenceCycle,
                owner,
                format!("precedence over {} is cyclic", names.join(", ")),
            );
        }
    }
}
