//! Conformance reports shared by every model validator.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Conformance rule codes. The serialized names are stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    // shared
    DuplicateId,
    EmptyModel,
    // product structure
    PrimitiveHasChildren,
    CompositeDegenerate,
    ConnectorArity,
    UnknownPart,
    UnknownLiaison,
    ConnectorLocality,
    UnknownVariant,
    AuthoredDcl,
    SharedLiaison,
    // platform
    AssemblerPlacement,
    AssemblerMissing,
    NoAssembler,
    EmptySkills,
    UnknownPort,
    PortDirection,
    ConnectorKindFields,
    NonPositiveCapacity,
    DurationMissing,
    NonPositiveDuration,
    DurationUnknownAssembler,
    DurationUnused,
    // process
    StageBindingMismatch,
    ProcessKindMismatch,
    DclMismatch,
    PrecedenceCycle,
    PrecedenceSelfLoop,
    PrecedenceUnknownMember,
    DanglingConnector,
    ConnectorNotRealized,
    ActivityShape,
    EmptyOperation,
    UnknownAction,
    BindingMismatch,
    UnknownCompositePart,
    ScheduleIncomplete,
    // catalog
    EmptySkill,
    // bom
    BomCycle,
    UnknownParent,
    ZeroQuantity,
    CompositeQuantity,
    LiaisonsMissing,
    // job
    ZeroQuantityJob,
    DanglingReference,
}

impl Rule {
    pub fn code(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub rule: Rule,
    pub element: String,
    pub message: String,
}

/// Result of checking a model against its meta-model.
///
/// Violations make a model non-conformant; warnings never do.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub model: String,
    pub violations: Vec<Finding>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn new(model: impl Into<String>) -> Self {
        ValidationReport {
            model: model.into(),
            ..Default::default()
        }
    }

    pub fn is_conformant(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&mut self, rule: Rule, element: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Finding {
            rule,
            element: element.into(),
            message: message.into(),
        });
    }

    pub fn warning(&mut self, rule: Rule, element: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Finding {
            rule,
            element: element.into(),
            message: message.into(),
        });
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|f| f.rule == rule)
    }

    pub fn has_warning(&self, rule: Rule) -> bool {
        self.warnings.iter().any(|f| f.rule == rule)
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
        self.warnings.extend(other.warnings);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_conformant() {
            writeln!(f, "{}: conformant", self.model)?;
        } else {
            writeln!(f, "{}: {} violation(s)", self.model, self.violations.len())?;
        }
        for v in &self.violations {
            writeln!(f, "  error   {} [{}] {}", v.rule, v.element, v.message)?;
        }
        for w in &self.warnings {
            writeln!(f, "  warning {} [{}] {}", w.rule, w.element, w.message)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_codes_are_screaming_snake() {
        assert_eq!(Rule::ConnectorArity.code(), "CONNECTOR_ARITY");
        assert_eq!(Rule::CompositeDegenerate.to_string(), "COMPOSITE_DEGENERATE");
    }

    #[test]
    fn warnings_do_not_break_conformance() {
        let mut r = ValidationReport::new("m");
        r.warning(Rule::SharedLiaison, "L1", "shared");
        assert!(r.is_conformant());
        r.violation(Rule::UnknownPart, "X", "missing");
        assert!(!r.is_conformant());
    }
}
