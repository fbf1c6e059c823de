//! Model files on disk. Detects the kind of a document, parses it into
//! the matching type and renders it back as canonical JSON.

use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use std::collections::{BTreeSet, HashMap};

use crate::apm::{validate_apm_structure, AssemblyProcessModel, Stage};
use crate::aspm::{validate_aspm, PlatformModel};
use crate::catalog::{validate_catalog, ActionCatalog};
use crate::dag::Dag;
use crate::psm::{validate_psm, ProductStructuralModel};
use crate::repo::AssemblyJob;
use crate::report::{Rule, ValidationReport};
use crate::sim::SimReport;
use crate::xform::{import_bom, BomError, BillOfMaterials, ConstraintSet, LiaisonList};

/// The `kind` discriminator of a model file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Psm,
    Aspm,
    ApmPi,
    ApmPs,
    Bom,
    Liaisons,
    Constraints,
    Catalog,
    Job,
    SimReport,
}

impl ModelKind {
    pub const ALL: [ModelKind; 10] = [
        ModelKind::Psm,
        ModelKind::Aspm,
        ModelKind::ApmPi,
        ModelKind::ApmPs,
        ModelKind::Bom,
        ModelKind::Liaisons,
        ModelKind::Constraints,
        ModelKind::Catalog,
        ModelKind::Job,
        ModelKind::SimReport,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Psm => "psm",
            ModelKind::Aspm => "aspm",
            ModelKind::ApmPi => "apm-pi",
            ModelKind::ApmPs => "apm-ps",
            ModelKind::Bom => "bom",
            ModelKind::Liaisons => "liaisons",
            ModelKind::Constraints => "constraints",
            ModelKind::Catalog => "catalog",
            ModelKind::Job => "job",
            ModelKind::SimReport => "sim-report",
        }
    }

    /// Whether documents of this kind can be stored in a repository.
    pub fn is_storable(self) -> bool {
        self != ModelKind::Liaisons
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = DocumentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| DocumentError::UnknownKind(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocumentError {
    #[error("MALFORMED_DOCUMENT: {0}")]
    Malformed(String),
    #[error("MALFORMED_DOCUMENT: no string `kind` field")]
    MissingKind,
    #[error("UNKNOWN_KIND: `{0}`")]
    UnknownKind(String),
    #[error("WRONG_KIND: expected `{expected}`, found `{found}`")]
    WrongKind { expected: ModelKind, found: ModelKind },
}

impl DocumentError {
    pub fn code(&self) -> &'static str {
        match self {
            DocumentError::Malformed(_) | DocumentError::MissingKind => "MALFORMED_DOCUMENT",
            DocumentError::UnknownKind(_) => "UNKNOWN_KIND",
            DocumentError::WrongKind { .. } => "WRONG_KIND",
        }
    }
}

/// Reads the `kind` field without parsing the rest of the document.
pub fn detect_kind(text: &str) -> Result<ModelKind, DocumentError> {
    #[derive(serde::Deserialize)]
    struct Head {
        kind: Option<serde_json::Value>,
    }
    let head: Head = serde_json::from_str(text).map_err(|e| DocumentError::Malformed(e.to_string()))?;
    match head.kind {
        Some(serde_json::Value::String(k)) => k.parse(),
        _ => Err(DocumentError::MissingKind),
    }
}

/// A parsed model file of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Psm(ProductStructuralModel),
    Aspm(PlatformModel),
    Apm(AssemblyProcessModel),
    Bom(BillOfMaterials),
    Liaisons(LiaisonList),
    Constraints(ConstraintSet),
    Catalog(ActionCatalog),
    Job(AssemblyJob),
    SimReport(SimReport),
}

impl Document {
    pub fn parse(text: &str) -> Result<Document, DocumentError> {
        let p = |e: serde_json::Error| DocumentError::Malformed(e.to_string());
        Ok(match detect_kind(text)? {
            ModelKind::Psm => Document::Psm(serde_json::from_str(text).map_err(p)?),
            ModelKind::Aspm => Document::Aspm(serde_json::from_str(text).map_err(p)?),
            ModelKind::ApmPi | ModelKind::ApmPs => Document::Apm(serde_json::from_str(text).map_err(p)?),
            ModelKind::Bom => Document::Bom(serde_json::from_str(text).map_err(p)?),
            ModelKind::Liaisons => Document::Liaisons(serde_json::from_str(text).map_err(p)?),
            ModelKind::Constraints => Document::Constraints(serde_json::from_str(text).map_err(p)?),
            ModelKind::Catalog => Document::Catalog(serde_json::from_str(text).map_err(p)?),
            ModelKind::Job => Document::Job(serde_json::from_str(text).map_err(p)?),
            ModelKind::SimReport => Document::SimReport(serde_json::from_str(text).map_err(p)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Document::Psm(_) => ModelKind::Psm,
            Document::Aspm(_) => ModelKind::Aspm,
            Document::Apm(m) => match m.stage {
                Stage::PlatformIndependent => ModelKind::ApmPi,
                Stage::PlatformSpecific => ModelKind::ApmPs,
            },
            Document::Bom(_) => ModelKind::Bom,
            Document::Liaisons(_) => ModelKind::Liaisons,
            Document::Constraints(_) => ModelKind::Constraints,
            Document::Catalog(_) => ModelKind::Catalog,
            Document::Job(_) => ModelKind::Job,
            Document::SimReport(_) => ModelKind::SimReport,
        }
    }

    /// The document's own identifier, where the kind has one. Reports are
    /// identified by the model they evaluate.
    pub fn id(&self) -> Option<&str> {
        let id = match self {
            Document::Psm(m) => &m.id,
            Document::Aspm(m) => &m.id,
            Document::Apm(m) => &m.id,
            Document::Bom(m) => &m.id,
            Document::Constraints(m) => &m.id,
            Document::Catalog(m) => &m.id,
            Document::Job(m) => &m.id,
            Document::SimReport(m) => &m.model,
            Document::Liaisons(_) => return None,
        };
        (!id.is_empty()).then_some(id.as_str())
    }

    pub fn to_json(&self) -> String {
        match self {
            Document::Psm(m) => to_json(m),
            Document::Aspm(m) => to_json(m),
            Document::Apm(m) => to_json(m),
            Document::Bom(m) => to_json(m),
            Document::Liaisons(m) => to_json(m),
            Document::Constraints(m) => to_json(m),
            Document::Catalog(m) => to_json(m),
            Document::Job(m) => to_json(m),
            Document::SimReport(m) => to_json(m),
        }
    }
}

/// Context-free conformance check of any document. Process models get the
/// structural checks only (no product or catalog at hand) and jobs are not
/// checked for resolvable references.
pub fn validate_document(doc: &Document) -> ValidationReport {
    match doc {
        Document::Psm(m) => validate_psm(m),
        Document::Aspm(m) => validate_aspm(m),
        Document::Catalog(m) => validate_catalog(m),
        Document::Apm(m) => validate_apm_structure(m),
        Document::Bom(b) => {
            let mut r = ValidationReport::new(&b.id);
            match import_bom(b, None) {
                Ok(imported) => r.warnings.extend(imported.warnings),
                Err(e) => {
                    let (rule, element) = match &e {
                        BomError::Cycle(parts) => (Rule::BomCycle, parts.join(",")),
                        BomError::UnknownParent { part, .. } => (Rule::UnknownParent, part.clone()),
                        BomError::DuplicatePart(p) => (Rule::DuplicateId, p.clone()),
                        BomError::ZeroQuantity(p) => (Rule::ZeroQuantity, p.clone()),
                        BomError::CompositeQuantity(p) => (Rule::CompositeQuantity, p.clone()),
                    };
                    r.violation(rule, element, e.to_string());
                }
            }
            r
        }
        Document::Liaisons(l) => {
            let mut r = ValidationReport::new("liaisons");
            let mut seen = BTreeSet::new();
            for c in &l.connectors {
                if !seen.insert(c.id.as_str()) {
                    r.violation(Rule::DuplicateId, c.id.as_str(), "connector id used twice");
                }
                if c.endpoints.len() < 2 {
                    r.violation(Rule::ConnectorArity, c.id.as_str(), "a connector joins at least two liaisons");
                }
            }
            r
        }
        Document::Constraints(c) => validate_constraints(c),
        Document::Job(j) => {
            let mut r = ValidationReport::new(&j.id);
            if j.id.is_empty() {
                r.violation(Rule::EmptyModel, "id", "job id is empty");
            }
            if j.quantity == 0 {
                r.violation(Rule::ZeroQuantityJob, &j.id, "quantity must be at least 1");
            }
            if j.product_ref.kind != ModelKind::Psm {
                r.violation(Rule::DanglingReference, j.product_ref.to_string(), "product_ref must name a psm");
            }
            if j.pi_apm_ref.kind != ModelKind::ApmPi {
                r.violation(Rule::DanglingReference, j.pi_apm_ref.to_string(), "pi_apm_ref must name an apm-pi");
            }
            r
        }
        Document::SimReport(m) => ValidationReport::new(&m.model),
    }
}

/// Extra precedence edges must be free of self-loops and cycles.
pub fn validate_constraints(c: &ConstraintSet) -> ValidationReport {
    let mut r = ValidationReport::new(&c.id);
    let mut index: HashMap<&str, usize> = HashMap::new();
    for e in &c.edges {
        for s in [e.before.as_str(), e.after.as_str()] {
            let next = index.len();
            index.entry(s).or_insert(next);
        }
    }
    let mut dag = Dag::new(index.len());
    for e in &c.edges {
        if e.before == e.after {
            r.violation(Rule::PrecedenceSelfLoop, &e.before, "activity precedes itself");
        } else {
            dag.add_edge(index[e.before.as_str()], index[e.after.as_str()]);
        }
    }
    if let Err(stuck) = dag.topological_order() {
        let mut names: Vec<&str> = index.iter().filter(|(_, i)| stuck.contains(i)).map(|(n, _)| *n).collect();
        names.sort_unstable();
        r.violation(Rule::PrecedenceCycle, names.join(","), "constraint edges form a cycle");
    }
    r
}

/// Parses a document that must be of kind `expected`.
pub fn parse_as<T: DeserializeOwned>(text: &str, expected: ModelKind) -> Result<T, DocumentError> {
    let found = detect_kind(text)?;
    let matches = found == expected
        || (expected == ModelKind::ApmPi && found == ModelKind::ApmPs)
        || (expected == ModelKind::ApmPs && found == ModelKind::ApmPi);
    if !matches {
        return Err(DocumentError::WrongKind { expected, found });
    }
    serde_json::from_str(text).map_err(|e| DocumentError::Malformed(e.to_string()))
}

/// Canonical file rendering: two-space indented JSON with a final newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("model types serialize");
    s.push('\n');
    s
}
