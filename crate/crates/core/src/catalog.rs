//! The standardized action vocabulary and the skill realizing each action.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ids::{kind_tag, ActionId, SkillId};
use crate::report::{Rule, ValidationReport};

kind_tag!(CatalogTag, "catalog");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionCatalog {
    pub kind: CatalogTag,
    pub id: String,
    pub entries: Vec<ActionEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionEntry {
    pub id: ActionId,
    /// Skill an assembler must hold to execute this action.
    pub skill: SkillId,
    /// Parameter names; instances must bind exactly these.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<String>,
}

impl ActionCatalog {
    /// pick, place, insert, screw, weld, inspect and move, each realized by
    /// the skill of the same name.
    pub fn standard(id: impl Into<String>) -> Self {
        let part = || vec!["part".to_owned()];
        let join = || vec!["liaison_a".to_owned(), "liaison_b".to_owned()];
        let entry = |name: &str, params: Vec<String>| ActionEntry {
            id: name.into(),
            skill: name.into(),
            params,
        };
        ActionCatalog {
            kind: CatalogTag,
            id: id.into(),
            entries: vec![
                entry("pick", part()),
                entry("place", part()),
                entry("insert", join()),
                entry("screw", join()),
                entry("weld", join()),
                entry("inspect", part()),
                entry("move", part()),
            ],
        }
    }

    pub fn get(&self, action: &ActionId) -> Option<&ActionEntry> {
        self.entries.iter().find(|e| &e.id == action)
    }

    pub fn skill_of(&self, action: &ActionId) -> Option<&SkillId> {
        self.get(action).map(|e| &e.skill)
    }

    /// Actions realized by `skill`.
    pub fn actions_for_skill(&self, skill: &SkillId) -> BTreeSet<ActionId> {
        self.entries
            .iter()
            .filter(|e| &e.skill == skill)
            .map(|e| e.id.clone())
            .collect()
    }
}

pub fn validate_catalog(catalog: &ActionCatalog) -> ValidationReport {
    let mut report = ValidationReport::new(&catalog.id);
    let mut seen = BTreeSet::new();
    for e in &catalog.entries {
        if !seen.insert(&e.id) {
            report.violation(Rule::DuplicateId, e.id.as_str(), format!("action `{}` declared twice", e.id));
        }
        if e.skill.as_str().is_empty() {
            report.violation(Rule::EmptySkill, e.id.as_str(), "action has no realizing skill");
        }
        let mut params = BTreeSet::new();
        for p in &e.params {
            if !params.insert(p) {
                report.violation(
                    Rule::DuplicateId,
                    e.id.as_str(),
                    format!("parameter `{p}` declared twice"),
                );
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_catalog_is_valid() {
        let c = ActionCatalog::standard("std");
        assert!(validate_catalog(&c).is_conformant());
        assert_eq!(c.entries.len(), 7);
        assert_eq!(c.skill_of(&"weld".into()), Some(&SkillId::from("weld")));
    }

    #[test]
    fn duplicate_action() {
        let mut c = ActionCatalog::standard("std");
        c.entries.push(c.entries[0].clone());
        assert!(validate_catalog(&c).has(Rule::DuplicateId));
    }
}
