//! Product structural models. The part aggregation tree carries the
//! liaisons between parts; variants and decomposition levels are resolved
//! against it.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ids::{kind_tag, ConnectorId, LiaisonId, PartId, VariantTag};
use crate::report::{Rule, ValidationReport};

kind_tag!(PsmTag, "psm");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductStructuralModel {
    pub kind: PsmTag,
    pub id: String,
    pub product_name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<VariantTag>,
    /// Root-level children of the product (decomposition level 0).
    pub parts: Vec<SubAssembly>,
    #[serde(default)]
    pub connectors: Vec<Connector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartKind {
    Primitive,
    Composite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubAssembly {
    pub id: PartId,
    pub kind: PartKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<SubAssembly>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub liaisons: Vec<Liaison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variants: Option<BTreeSet<VariantTag>>,
    /// Decomposition levels are derived; a value present in a file is kept
    /// only so validation can reject it.
    #[serde(default, rename = "dcl", skip_serializing_if = "Option::is_none")]
    pub authored_dcl: Option<serde_json::Value>,
}

/// A connection point or surface of the part that lists it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Liaison {
    pub id: LiaisonId,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub geometry_note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoint {
    pub part: PartId,
    pub liaison: LiaisonId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Connector {
    pub id: ConnectorId,
    pub endpoints: Vec<Endpoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variants: Option<BTreeSet<VariantTag>>,
}

impl SubAssembly {
    pub fn primitive(id: &str, liaisons: &[&str]) -> Self {
        SubAssembly {
            id: id.into(),
            kind: PartKind::Primitive,
            children: Vec::new(),
            liaisons: liaisons
                .iter()
                .map(|l| Liaison {
                    id: (*l).into(),
                    geometry_note: String::new(),
                })
                .collect(),
            variants: None,
            authored_dcl: None,
        }
    }

    pub fn composite(id: &str, liaisons: &[&str], children: Vec<SubAssembly>) -> Self {
        SubAssembly {
            kind: PartKind::Composite,
            children,
            ..SubAssembly::primitive(id, liaisons)
        }
    }

    pub fn is_composite(&self) -> bool {
        self.kind == PartKind::Composite
    }

    pub fn has_liaison(&self, liaison: &LiaisonId) -> bool {
        self.liaisons.iter().any(|l| &l.id == liaison)
    }
}

impl Connector {
    pub fn new(id: &str, endpoints: &[(&str, &str)]) -> Self {
        Connector {
            id: id.into(),
            endpoints: endpoints
                .iter()
                .map(|(p, l)| Endpoint {
                    part: (*p).into(),
                    liaison: (*l).into(),
                })
                .collect(),
            variants: None,
        }
    }

    /// Distinct endpoint parts in first-mention order.
    pub fn parts(&self) -> Vec<&PartId> {
        let mut seen = BTreeSet::new();
        self.endpoints
            .iter()
            .map(|e| &e.part)
            .filter(|p| seen.insert(*p))
            .collect()
    }

    pub fn touches(&self, part: &PartId) -> bool {
        self.endpoints.iter().any(|e| &e.part == part)
    }
}

/// Where a part sits in the aggregation tree.
#[derive(Debug, Clone, Copy)]
pub struct PartInfo<'a> {
    pub part: &'a SubAssembly,
    pub parent: Option<&'a PartId>,
    pub dcl: u32,
}

/// Lookup table over the aggregation tree. The first occurrence wins when ids
/// are duplicated (validation reports the duplicate).
#[derive(Debug, Clone)]
pub struct PartIndex<'a> {
    parts: HashMap<&'a PartId, PartInfo<'a>>,
    order: Vec<&'a PartId>,
}

impl<'a> PartIndex<'a> {
    pub fn new(model: &'a ProductStructuralModel) -> Self {
        let mut index = PartIndex {
            parts: HashMap::new(),
            order: Vec::new(),
        };
        let mut stack: Vec<(&SubAssembly, Option<&PartId>, u32)> =
            model.parts.iter().rev().map(|p| (p, None, 0)).collect();
        while let Some((part, parent, dcl)) = stack.pop() {
            if !index.parts.contains_key(&part.id) {
                index.order.push(&part.id);
                index.parts.insert(&part.id, PartInfo { part, parent, dcl });
            }
            stack.extend(part.children.iter().rev().map(|c| (c, Some(&part.id), dcl + 1)));
        }
        index
    }

    pub fn get(&self, id: &PartId) -> Option<&PartInfo<'a>> {
        self.parts.get(id)
    }

    pub fn contains(&self, id: &PartId) -> bool {
        self.parts.contains_key(id)
    }

    /// Parts in pre-order.
    pub fn iter(&self) -> impl Iterator<Item = &PartInfo<'a>> {
        self.order.iter().map(|id| &self.parts[id])
    }
}

/// Checks a product structural model against the product meta-model.
pub fn validate_psm(model: &ProductStructuralModel) -> ValidationReport {
    let mut report = ValidationReport::new(&model.id);
    let declared: BTreeSet<&VariantTag> = model.variants.iter().collect();

    let mut seen_variants = BTreeSet::new();
    for v in &model.variants {
        if !seen_variants.insert(v) {
            report.violation(Rule::DuplicateId, v.as_str(), format!("variant `{v}` declared twice"));
        }
    }
    let check_membership = |report: &mut ValidationReport, element: &str, tags: &Option<BTreeSet<VariantTag>>| {
        for tag in tags.iter().flatten() {
            if !declared.contains(tag) {
                report.violation(
                    Rule::UnknownVariant,
                    element,
                    format!("variant `{tag}` is not declared by the product"),
                );
            }
        }
    };

    if model.parts.is_empty() {
        report.violation(Rule::EmptyModel, &model.id, "product has no parts");
    }

    let mut seen_parts = BTreeSet::new();
    let mut stack: Vec<&SubAssembly> = model.parts.iter().rev().collect();
    while let Some(part) = stack.pop() {
        let pid = part.id.as_str();
        if !seen_parts.insert(&part.id) {
            report.violation(
                Rule::DuplicateId,
                pid,
                format!("part `{pid}` appears more than once in the aggregation tree"),
            );
        }
        match part.kind {
            PartKind::Primitive if !part.children.is_empty() => report.violation(
                Rule::PrimitiveHasChildren,
                pid,
                format!("primitive part `{pid}` has {} children", part.children.len()),
            ),
            PartKind::Composite if part.children.len() < 2 => report.violation(
                Rule::CompositeDegenerate,
                pid,
                format!(
                    "composite part `{pid}` has {} child(ren); at least 2 are required",
                    part.children.len()
                ),
            ),
            _ => {}
        }
        if part.authored_dcl.is_some() {
            report.violation(
                Rule::AuthoredDcl,
                pid,
                "decomposition level is derived from the tree and must not be authored",
            );
        }
        let mut seen_liaisons = BTreeSet::new();
        for l in &part.liaisons {
            if !seen_liaisons.insert(&l.id) {
                report.violation(
                    Rule::DuplicateId,
                    format!("{pid}/{}", l.id),
                    format!("liaison `{}` declared twice on part `{pid}`", l.id),
                );
            }
        }
        check_membership(&mut report, pid, &part.variants);
        stack.extend(part.children.iter().rev());
    }

    let index = PartIndex::new(model);
    let mut seen_connectors = BTreeSet::new();
    let mut liaison_use: BTreeMap<&Endpoint, Vec<&ConnectorId>> = BTreeMap::new();
    for c in &model.connectors {
        let cid = c.id.as_str();
        if !seen_connectors.insert(&c.id) {
            report.violation(Rule::DuplicateId, cid, format!("connector `{cid}` declared twice"));
        }
        check_membership(&mut report, cid, &c.variants);
        let parts = c.parts();
        if c.endpoints.len() < 2 || parts.len() < 2 {
            report.violation(
                Rule::ConnectorArity,
                cid,
                format!(
                    "connector `{cid}` joins {} distinct part(s); at least 2 are required",
                    parts.len()
                ),
            );
        }
        let mut parents = BTreeSet::new();
        for e in &c.endpoints {
            liaison_use.entry(e).or_default().push(&c.id);
            match index.get(&e.part) {
                None => report.violation(
                    Rule::UnknownPart,
                    cid,
                    format!("connector `{cid}` references unknown part `{}`", e.part),
                ),
                Some(info) => {
                    parents.insert(info.parent);
                    if !info.part.has_liaison(&e.liaison) {
                        report.violation(
                            Rule::UnknownLiaison,
                            cid,
                            format!(
                                "liaison `{}` does not belong to part `{}`",
                                e.liaison, e.part
                            ),
                        );
                    }
                }
            }
        }
        if parents.len() > 1 {
            report.violation(
                Rule::ConnectorLocality,
                cid,
                format!("connector `{cid}` joins parts of different parents"),
            );
        }
    }
    for (endpoint, users) in liaison_use {
        let distinct: BTreeSet<_> = users.iter().collect();
        if distinct.len() > 1 {
            let names: Vec<&str> = distinct.iter().map(|c| c.as_str()).collect();
            report.warning(
                Rule::SharedLiaison,
                format!("{}/{}", endpoint.part, endpoint.liaison),
                format!("liaison shared by connectors {}", names.join(", ")),
            );
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PsmError {
    #[error("UNKNOWN_VARIANT: variant `{0}` is not declared by the product")]
    UnknownVariant(VariantTag),
    #[error("INVALID_RESULT: resolved model is not conformant\n{0}")]
    InvalidResult(ValidationReport),
}

impl PsmError {
    pub fn code(&self) -> &'static str {
        match self {
            PsmError::UnknownVariant(_) => "UNKNOWN_VARIANT",
            PsmError::InvalidResult(_) => "INVALID_RESULT",
        }
    }
}

impl ProductStructuralModel {
    /// True if any part or connector still carries a variant membership.
    pub fn has_variant_annotations(&self) -> bool {
        fn walk(parts: &[SubAssembly]) -> bool {
            parts.iter().any(|p| p.variants.is_some() || walk(&p.children))
        }
        walk(&self.parts) || self.connectors.iter().any(|c| c.variants.is_some())
    }

    pub fn part_count(&self) -> usize {
        fn walk(parts: &[SubAssembly]) -> usize {
            parts.iter().map(|p| 1 + walk(&p.children)).sum()
        }
        walk(&self.parts)
    }
}

/// Produces the concrete model for one variant: untagged elements and
/// elements tagged with `variant` are kept, everything else is dropped
/// together with connectors that reference dropped parts.
pub fn resolve_variant(
    model: &ProductStructuralModel,
    variant: &VariantTag,
) -> Result<ProductStructuralModel, PsmError> {
    if !model.variants.contains(variant) {
        return Err(PsmError::UnknownVariant(variant.clone()));
    }
    let keep = |tags: &Option<BTreeSet<VariantTag>>| tags.as_ref().is_none_or(|t| t.contains(variant));

    fn filter(parts: &[SubAssembly], keep: &dyn Fn(&Option<BTreeSet<VariantTag>>) -> bool) -> Vec<SubAssembly> {
        parts
            .iter()
            .filter(|p| keep(&p.variants))
            .map(|p| SubAssembly {
                children: filter(&p.children, keep),
                variants: None,
                ..p.clone()
            })
            .collect()
    }

    let mut resolved = ProductStructuralModel {
        parts: filter(&model.parts, &keep),
        connectors: Vec::new(),
        ..model.clone()
    };
    let surviving: BTreeSet<PartId> = PartIndex::new(&resolved).iter().map(|i| i.part.id.clone()).collect();
    resolved.connectors = model
        .connectors
        .iter()
        .filter(|c| keep(&c.variants))
        .filter(|c| c.endpoints.iter().all(|e| surviving.contains(&e.part)))
        .map(|c| Connector {
            variants: None,
            ..c.clone()
        })
        .collect();

    let report = validate_psm(&resolved);
    if report.is_conformant() {
        Ok(resolved)
    } else {
        Err(PsmError::InvalidResult(report))
    }
}

/// Decomposition level of every part: root children are at 0, each child one
/// below its parent.
pub fn decomposition_levels(model: &ProductStructuralModel) -> BTreeMap<PartId, u32> {
    PartIndex::new(model)
        .iter()
        .map(|info| (info.part.id.clone(), info.dcl))
        .collect()
}

/// Level of a connector: the level of the (sibling) parts it joins.
pub fn connector_level(index: &PartIndex<'_>, connector: &Connector) -> Option<u32> {
    connector
        .endpoints
        .first()
        .and_then(|e| index.get(&e.part))
        .map(|info| info.dcl)
}

/// Connectors whose endpoint parts sit at `dcl`, ordered by id.
pub fn liaison_pairs_at_level(model: &ProductStructuralModel, dcl: u32) -> Vec<Connector> {
    let index = PartIndex::new(model);
    let mut out: Vec<Connector> = model
        .connectors
        .iter()
        .filter(|c| connector_level(&index, c) == Some(dcl))
        .cloned()
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}
