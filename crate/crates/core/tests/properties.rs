//! Property tests across modules, each against an independent oracle.

mod common;

use std::collections::BTreeSet;

use common::*;
use has_core::apm::{flatten_to_action_graph, required_actions, validate_apm, AssemblyProcessModel};
use has_core::aspm::{capability_gap, PlatformModel};
use has_core::catalog::ActionCatalog;
use has_core::dag::Dag;
use has_core::document::{to_json, validate_document, Document};
use has_core::lower::{check_feasibility, lower, LowerError, LoweringPolicy};
use has_core::psm::{resolve_variant, validate_psm, Connector, ProductStructuralModel, PsmTag, SubAssembly};
use has_core::sim::{simulate, SimConfig};
use has_core::xform::{generate_pi_apm, import_bom, BillOfMaterials, ConstraintSet, LiaisonList, Template};
use has_core::Rule;
use proptest::prelude::*;

fn spec_from(seed: u64, max_actions: usize) -> Spec {
    random_spec(
        &mut rng(seed),
        &Shape {
            min_actions: 1,
            max_actions,
            max_assemblers: 3,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dag_closure_matches_oracle(seed in any::<u64>(), n in 1usize..10) {
        let edges = random_dag(&mut rng(seed), n, 0.3);
        let mut dag = Dag::new(n);
        for &(a, b) in &edges {
            dag.add_edge(a, b);
        }
        prop_assert_eq!(dag.transitive_closure(), closure(n, &edges));
        prop_assert!(dag.is_acyclic());
        let order = dag.topological_order().unwrap();
        prop_assert!(linear_extensions(n, &edges).contains(&order));
    }

    #[test]
    fn flattening_preserves_paths(seed in any::<u64>()) {
        let spec = spec_from(seed, 10);
        let graph = flatten_to_action_graph(&spec.apm());
        prop_assert_eq!(graph.len(), spec.n());
        let idx: Vec<usize> = (0..spec.n()).map(|i| graph.index_of(&action_id(i)).unwrap()).collect();
        let edges: Vec<(usize, usize)> = spec.constraints().iter().map(|&(u, v, _)| (u, v)).collect();
        let expected = closure(spec.n(), &edges);
        let got = graph.dag.transitive_closure();
        for u in 0..spec.n() {
            for v in 0..spec.n() {
                prop_assert_eq!(got[idx[u]][idx[v]], expected[u][v], "path {} -> {}", u, v);
                prop_assert_eq!(graph.same_operation(idx[u], idx[v]), spec.actions[u].1 == spec.actions[v].1);
            }
        }
    }

    #[test]
    fn generated_models_validate(seed in any::<u64>(), n in 2usize..9) {
        let mut r = rng(seed);
        let psm = chain_product(n);
        let names: Vec<String> = (1..n).map(|i| format!("act-C{i}")).collect();
        let edges = random_dag(&mut r, n - 1, 0.4);
        let pairs: Vec<(&str, &str)> = edges.iter().map(|&(a, b)| (names[a].as_str(), names[b].as_str())).collect();
        let catalog = ActionCatalog::standard("std");
        let apm = generate_pi_apm(&psm, &ConstraintSet::from_pairs(&pairs), &catalog, &Template::default()).unwrap();
        let report = validate_apm(&apm, &psm, &catalog);
        prop_assert!(report.is_conformant(), "{}", report);
        prop_assert!(report.warnings.is_empty(), "{}", report);
        // Two feed operations of pick+place plus one insert per connector.
        prop_assert_eq!(apm.action_instances().len(), 5 * (n - 1));
        // A cycle among the extra edges is refused.
        if let Some(&(a, b)) = edges.first() {
            let mut cyclic = pairs.clone();
            cyclic.push((names[b].as_str(), names[a].as_str()));
            let err = generate_pi_apm(&psm, &ConstraintSet::from_pairs(&cyclic), &catalog, &Template::default()).unwrap_err();
            prop_assert_eq!(err.code(), "CONSTRAINT_CYCLE");
        }
    }

    #[test]
    fn capability_gap_agrees_with_feasibility(seed in any::<u64>(), drop in 0usize..5) {
        let spec = spec_from(seed, 8);
        let mut platform = spec.platform();
        let removed = SKILLS[drop];
        for s in &mut platform.subsystems {
            if let Some(a) = &mut s.assembler {
                a.skills.retain(|k| k.as_str() != removed);
            }
        }
        platform.durations.retain(|d| d.skill.as_str() != removed);
        let apm = spec.apm();
        let catalog = spec.catalog();
        let gap = capability_gap(&required_actions(&apm), &platform, &catalog).unwrap();
        let feasibility = check_feasibility(&apm, &platform, &catalog).unwrap();
        prop_assert_eq!(gap.is_empty(), feasibility.feasible);
        let expected: BTreeSet<String> = spec.actions.iter().filter(|a| a.0 == removed).map(|a| a.0.to_string()).collect();
        let got: BTreeSet<String> = gap.iter().map(|a| a.to_string()).collect();
        prop_assert_eq!(&got, &expected);
        match lower(&apm, &platform, &catalog, LoweringPolicy::LIST) {
            Err(LowerError::Infeasible { gap: g }) => prop_assert_eq!(g, gap),
            Ok(_) => prop_assert!(gap.is_empty()),
            Err(e) => prop_assert!(false, "unexpected {}", e),
        }
    }

    #[test]
    fn random_documents_round_trip(seed in any::<u64>()) {
        let spec = spec_from(seed, 8);
        let pi = spec.apm();
        let platform = spec.platform();
        let ps = lower(&pi, &platform, &spec.catalog(), LoweringPolicy::LIST).unwrap();
        let report = simulate(&ps, &platform, &SimConfig::with_quantity(2)).unwrap();
        for doc in [Document::Apm(pi), Document::Aspm(platform), Document::Apm(ps), Document::SimReport(report)] {
            let text = doc.to_json();
            let back = Document::parse(&text).unwrap();
            prop_assert_eq!(&back, &doc);
            prop_assert_eq!(back.to_json(), text);
        }
    }
}

fn chain_product(n: usize) -> ProductStructuralModel {
    ProductStructuralModel {
        kind: PsmTag,
        id: format!("chain{n}"),
        product_name: "chain".into(),
        variants: vec![],
        parts: (0..n).map(|i| SubAssembly::primitive(&format!("P{i}"), &["l", "r"])).collect(),
        connectors: (1..n)
            .map(|i| Connector::new(&format!("C{i}"), &[(&format!("P{}", i - 1), "r"), (&format!("P{i}"), "l")]))
            .collect(),
    }
}

fn load<T: serde::de::DeserializeOwned>(name: &str) -> T {
    serde_json::from_str(&fixture(name)).unwrap()
}

#[test]
fn fixtures_are_conformant() {
    for name in fixture_names() {
        let doc = Document::parse(&fixture(&name)).unwrap();
        let report = validate_document(&doc);
        assert!(report.is_conformant(), "{name}: {report}");
    }
}

#[test]
fn fig10_process_model_matches_product() {
    let psm: ProductStructuralModel = load("fig10.psm.json");
    let catalog: ActionCatalog = load("standard.catalog.json");
    let apm: AssemblyProcessModel = load("fig10.apm-pi.json");
    let report = validate_apm(&apm, &psm, &catalog);
    assert!(report.is_conformant() && report.warnings.is_empty(), "{report}");
    // Independent count over the file: operations hold the action instances.
    let value: serde_json::Value = serde_json::from_str(&fixture("fig10.apm-pi.json")).unwrap();
    fn count(v: &serde_json::Value) -> usize {
        match v {
            serde_json::Value::Object(m) => {
                let here = m.get("bindings").is_some() as usize;
                here + m.values().map(count).sum::<usize>()
            }
            serde_json::Value::Array(xs) => xs.iter().map(count).sum(),
            _ => 0,
        }
    }
    assert_eq!(apm.action_instances().len(), count(&value));
    assert_eq!(apm.action_instances().len(), 4 * 5);
    assert!(flatten_to_action_graph(&apm).dag.is_acyclic());
}

#[test]
fn bom_import_reproduces_fig10() {
    let bom: BillOfMaterials = load("fig10.bom.json");
    let liaisons: LiaisonList = load("fig10.liaisons.json");
    let imported = import_bom(&bom, Some(&liaisons.connectors)).unwrap();
    assert!(imported.warnings.is_empty());
    let fixture: ProductStructuralModel = load("fig10.psm.json");
    assert_eq!(imported.model.parts, fixture.parts);
    assert_eq!(imported.model.connectors, fixture.connectors);
    assert!(validate_psm(&imported.model).is_conformant());
}

#[test]
fn bom_quantities_expand() {
    let bom: BillOfMaterials = load("bracket.bom.json");
    let imported = import_bom(&bom, None).unwrap();
    let ids: Vec<&str> = imported.model.parts.iter().map(|p| p.id.as_str()).collect();
    assert_eq!(ids, ["plate", "angle", "screw-1", "screw-2", "screw-3", "screw-4"]);
    assert!(imported.warnings.iter().any(|w| w.rule == Rule::LiaisonsMissing));
}

#[test]
fn variant_resolution_consumes_annotations() {
    let bike: ProductStructuralModel = load("bike.psm.json");
    let catalog = ActionCatalog::standard("std");
    for (variant, parts, connectors) in [("city", 4, 3), ("sport", 3, 2)] {
        let resolved = resolve_variant(&bike, &variant.into()).unwrap();
        assert_eq!(resolved.part_count(), parts, "{variant}");
        assert_eq!(resolved.connectors.len(), connectors, "{variant}");
        let report = validate_psm(&resolved);
        assert!(report.is_conformant() && !report.has(Rule::UnknownVariant), "{report}");
        assert!(!resolved.has_variant_annotations());
        let apm = generate_pi_apm(&resolved, &ConstraintSet::default(), &catalog, &Template::default()).unwrap();
        assert_eq!(apm.activities().len(), connectors);
    }
    let err = generate_pi_apm(&bike, &ConstraintSet::default(), &catalog, &Template::default()).unwrap_err();
    assert_eq!(err.code(), "UNRESOLVED_VARIANT");
    assert_eq!(resolve_variant(&bike, &"racing".into()).unwrap_err().code(), "UNKNOWN_VARIANT");
}

#[test]
fn decimal_durations_schedule_exactly() {
    let platform: PlatformModel = load("two-cell.aspm.json");
    let text = to_json(&platform);
    assert!(text.contains("1.5"));
    let ps: AssemblyProcessModel = load("fig10.apm-ps.json");
    let report = simulate(&ps, &platform, &SimConfig::default()).unwrap();
    assert_eq!(report.total_makespan, ps.platform_binding.unwrap().schedule.makespan);
}
