use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ids::{kind_tag, PartId};
use crate::psm::{Connector, Liaison, PartKind, ProductStructuralModel, PsmTag, SubAssembly};
use crate::report::{Finding, Rule};

kind_tag!(BomTag, "bom");
kind_tag!(LiaisonsTag, "liaisons");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BillOfMaterials {
    pub kind: BomTag,
    pub id: String,
    pub product_name: String,
    pub lines: Vec<BomLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BomLine {
    pub part: String,
    /// `None` places the line directly under the product.
    #[serde(default)]
    pub parent: Option<String>,
    pub quantity: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

/// Connectors supplied alongside a BOM, which cannot express them itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiaisonList {
    pub kind: LiaisonsTag,
    pub connectors: Vec<Connector>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BomError {
    #[error("BOM_CYCLE: parent references of {0:?} form a cycle")]
    Cycle(Vec<String>),
    #[error("UNKNOWN_PARENT: line `{part}` names unknown parent `{parent}`")]
    UnknownParent { part: String, parent: String },
    #[error("DUPLICATE_PART: part `{0}` appears on more than one line")]
    DuplicatePart(String),
    #[error("ZERO_QUANTITY: line `{0}` has quantity 0")]
    ZeroQuantity(String),
    #[error("COMPOSITE_QUANTITY: sub-assembly line `{0}` must have quantity 1")]
    CompositeQuantity(String),
}

impl BomError {
    pub fn code(&self) -> &'static str {
        match self {
            BomError::Cycle(_) => "BOM_CYCLE",
            BomError::UnknownParent { .. } => "UNKNOWN_PARENT",
            BomError::DuplicatePart(_) => "DUPLICATE_PART",
            BomError::ZeroQuantity(_) => "ZERO_QUANTITY",
            BomError::CompositeQuantity(_) => "COMPOSITE_QUANTITY",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Imported {
    pub model: ProductStructuralModel,
    pub warnings: Vec<Finding>,
}

/// Maps a BOM tree onto a product structural model. A line with quantity
/// `q > 1` becomes `q` sibling parts `<part>-1 .. <part>-q`. Liaisons named
/// by the supplied connectors are attached to their parts.
pub fn import_bom(bom: &BillOfMaterials, liaisons: Option<&[Connector]>) -> Result<Imported, BomError> {
    let mut by_part: HashMap<&str, &BomLine> = HashMap::new();
    for line in &bom.lines {
        if by_part.insert(&line.part, line).is_some() {
            return Err(BomError::DuplicatePart(line.part.clone()));
        }
        if line.quantity == 0 {
            return Err(BomError::ZeroQuantity(line.part.clone()));
        }
    }
    let mut children: BTreeMap<Option<&str>, Vec<&BomLine>> = BTreeMap::new();
    for line in &bom.lines {
        if let Some(parent) = &line.parent {
            if !by_part.contains_key(parent.as_str()) {
                return Err(BomError::UnknownParent {
                    part: line.part.clone(),
                    parent: parent.clone(),
                });
            }
        }
        children.entry(line.parent.as_deref()).or_default().push(line);
    }

    // Every line must reach the root by following parents.
    let mut rooted: BTreeSet<&str> = BTreeSet::new();
    let mut frontier: Vec<&str> = children
        .get(&None)
        .into_iter()
        .flatten()
        .map(|l| l.part.as_str())
        .collect();
    while let Some(p) = frontier.pop() {
        if rooted.insert(p) {
            frontier.extend(children.get(&Some(p)).into_iter().flatten().map(|l| l.part.as_str()));
        }
    }
    let cyclic: Vec<String> = bom
        .lines
        .iter()
        .filter(|l| !rooted.contains(l.part.as_str()))
        .map(|l| l.part.clone())
        .collect();
    if !cyclic.is_empty() {
        return Err(BomError::Cycle(cyclic));
    }

    fn build(
        parent: Option<&str>,
        children: &BTreeMap<Option<&str>, Vec<&BomLine>>,
    ) -> Result<Vec<SubAssembly>, BomError> {
        let mut out = Vec::new();
        for line in children.get(&parent).into_iter().flatten() {
            let kids = build(Some(&line.part), children)?;
            if !kids.is_empty() {
                if line.quantity != 1 {
                    return Err(BomError::CompositeQuantity(line.part.clone()));
                }
                out.push(SubAssembly {
                    kind: PartKind::Composite,
                    children: kids,
                    ..SubAssembly::primitive(&line.part, &[])
                });
            } else if line.quantity == 1 {
                out.push(SubAssembly::primitive(&line.part, &[]));
            } else {
                out.extend((1..=line.quantity).map(|i| SubAssembly::primitive(&format!("{}-{i}", line.part), &[])));
            }
        }
        Ok(out)
    }

    let mut model = ProductStructuralModel {
        kind: PsmTag,
        id: bom.id.clone(),
        product_name: bom.product_name.clone(),
        variants: Vec::new(),
        parts: build(None, &children)?,
        connectors: Vec::new(),
    };

    let mut warnings = Vec::new();
    match liaisons {
        Some(connectors) => {
            let wanted: BTreeMap<&PartId, Vec<&crate::ids::LiaisonId>> =
                connectors.iter().flat_map(|c| &c.endpoints).fold(BTreeMap::new(), |mut acc, e| {
                    let list: &mut Vec<_> = acc.entry(&e.part).or_default();
                    if !list.contains(&&e.liaison) {
                        list.push(&e.liaison);
                    }
                    acc
                });
            fn attach(parts: &mut [SubAssembly], wanted: &BTreeMap<&PartId, Vec<&crate::ids::LiaisonId>>) {
                for p in parts {
                    for l in wanted.get(&p.id).into_iter().flatten() {
                        p.liaisons.push(Liaison {
                            id: (*l).clone(),
                            geometry_note: String::new(),
                        });
                    }
                    attach(&mut p.children, wanted);
                }
            }
            attach(&mut model.parts, &wanted);
            model.connectors = connectors.to_vec();
        }
        None => warnings.push(Finding {
            rule: Rule::LiaisonsMissing,
            element: bom.id.clone(),
            message: "a BOM does not express liaisons; the product has no connectors".into(),
        }),
    }
    Ok(Imported { model, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psm::validate_psm;

    fn line(part: &str, parent: Option<&str>, quantity: u32) -> BomLine {
        BomLine {
            part: part.into(),
            parent: parent.map(Into::into),
            quantity,
            description: String::new(),
        }
    }

    fn bom(lines: Vec<BomLine>) -> BillOfMaterials {
        BillOfMaterials {
            kind: BomTag,
            id: "b".into(),
            product_name: "widget".into(),
            lines,
        }
    }

    #[test]
    fn flat_bom_without_liaisons() {
        let b = bom(vec![line("base", None, 1), line("lid", None, 1), line("pin", None, 1)]);
        let out = import_bom(&b, None).unwrap();
        assert_eq!(out.model.parts.len(), 3);
        assert!(out.model.connectors.is_empty());
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.warnings[0].rule, Rule::LiaisonsMissing);
    }

    #[test]
    fn quantity_expands() {
        let b = bom(vec![line("plate", None, 1), line("bolt", None, 2)]);
        let out = import_bom(&b, None).unwrap();
        let ids: Vec<&str> = out.model.parts.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["plate", "bolt-1", "bolt-2"]);
        assert_eq!(out.model.part_count(), 3);
    }

    #[test]
    fn cyclic_parents() {
        let b = bom(vec![line("root", None, 1), line("a", Some("b"), 1), line("b", Some("a"), 1)]);
        assert_eq!(import_bom(&b, None), Err(BomError::Cycle(vec!["a".into(), "b".into()])));
    }

    #[test]
    fn nested_with_liaisons_validates() {
        let b = bom(vec![
            line("frame", None, 1),
            line("motor", None, 1),
            line("rotor", Some("motor"), 1),
            line("stator", Some("motor"), 1),
        ]);
        let connectors = vec![
            Connector::new("C1", &[("frame", "m"), ("motor", "f")]),
            Connector::new("C2", &[("rotor", "s"), ("stator", "r")]),
        ];
        let out = import_bom(&b, Some(&connectors)).unwrap();
        assert!(out.warnings.is_empty());
        let r = validate_psm(&out.model);
        assert!(r.is_conformant(), "{r}");
    }

    #[test]
    fn structural_errors() {
        let b = bom(vec![line("a", Some("zz"), 1)]);
        assert!(matches!(import_bom(&b, None), Err(BomError::UnknownParent { .. })));
        let b = bom(vec![line("a", None, 0)]);
        assert_eq!(import_bom(&b, None), Err(BomError::ZeroQuantity("a".into())));
        let b = bom(vec![line("k", None, 2), line("x", Some("k"), 1), line("y", Some("k"), 1)]);
        assert_eq!(import_bom(&b, None), Err(BomError::CompositeQuantity("k".into())));
    }

    proptest::proptest! {
        #[test]
        fn part_count_is_sum_of_quantities(qs in proptest::collection::vec(1u32..5, 1..8)) {
            let lines = qs.iter().enumerate().map(|(i, q)| line(&format!("p{i}"), None, *q)).collect();
            let out = import_bom(&bom(lines), None).unwrap();
            proptest::prop_assert_eq!(out.model.part_count() as u32, qs.iter().sum::<u32>());
        }
    }
}
