use std::collections::BTreeMap;

use super::*;
use crate::apm::{ActionInstance, Activity, Operation, OperationKind, Precedence, ProcessKind, ProcessLevel};
use crate::aspm::{
    Assembler, AssemblerKind, AspmTag, AssemblySubSystem, ConnectorKind, DurationEntry, PlatformConnector, Port,
    PortDirection, PortRef,
};
use crate::time::Time;

/// One activity, one operation; `actions` are (instance id, catalog action).
pub(crate) fn apm(actions: &[(&str, &str)], edges: &[(&str, &str)]) -> AssemblyProcessModel {
    let catalog = ActionCatalog::standard("std");
    let instances = actions
        .iter()
        .map(|(id, a)| {
            let entry = catalog.get(&(*a).into()).unwrap();
            ActionInstance {
                id: (*id).into(),
                action: (*a).into(),
                bindings: entry.params.iter().map(|p| (p.clone(), "x".to_owned())).collect::<BTreeMap<_, _>>(),
            }
        })
        .collect();
    AssemblyProcessModel {
        stage: Stage::PlatformIndependent,
        id: "t".into(),
        product_ref: "p".into(),
        catalog_ref: "std".into(),
        root: ProcessLevel {
            id: "proc".into(),
            dcl: 0,
            kind: ProcessKind::PrimitiveChilds,
            part: None,
            child_processes: vec![],
            activities: vec![Activity {
                id: "act".into(),
                connector: Some("C".into()),
                sub_activities: vec![],
                operations: vec![Operation {
                    id: "op".into(),
                    kind: OperationKind::Other,
                    actions: instances,
                    precedence: edges.iter().map(|(a, b)| Precedence::new(*a, *b)).collect(),
                }],
                precedence: vec![],
            }],
            precedence: vec![],
        },
        platform_binding: None,
    }
}

/// Leaf cells `S<i>` holding `skills[i]`, all durations from `durations`.
pub(crate) fn platform(cells: &[(&str, &[&str])], durations: &[(&str, i64)], links: &[(&str, &str, i64)]) -> PlatformModel {
    let subsystems = cells
        .iter()
        .map(|(asm, skills)| AssemblySubSystem {
            id: format!("S-{asm}"),
            children: vec![],
            ports: vec![
                Port {
                    id: "in".into(),
                    direction: PortDirection::Input,
                },
                Port {
                    id: "out".into(),
                    direction: PortDirection::Output,
                },
            ],
            assembler: Some(Assembler {
                id: (*asm).into(),
                kind: AssemblerKind::Machine,
                skills: skills.iter().map(|s| (*s).into()).collect(),
            }),
        })
        .collect();
    let durations = cells
        .iter()
        .flat_map(|(asm, skills)| {
            skills.iter().map(move |s| DurationEntry {
                skill: (*s).into(),
                assembler: (*asm).into(),
                duration: Time::from_units(durations.iter().find(|d| d.0 == *s).map_or(1, |d| d.1)),
            })
        })
        .collect();
    let connectors = links
        .iter()
        .map(|(from, to, t)| PlatformConnector {
            id: format!("{from}->{to}"),
            kind: ConnectorKind::Active,
            from: PortRef {
                subsystem: format!("S-{from}"),
                port: "out".into(),
            },
            to: PortRef {
                subsystem: format!("S-{to}"),
                port: "in".into(),
            },
            transit_time: Some(Time::from_units(*t)),
            capacity: None,
        })
        .collect();
    PlatformModel {
        kind: AspmTag,
        id: "plat".into(),
        subsystems,
        connectors,
        durations,
    }
}

pub(crate) fn std_catalog() -> ActionCatalog {
    ActionCatalog::standard("std")
}

fn legal(apm: &AssemblyProcessModel, plat: &PlatformModel, s: &Schedule) {
    let inst = Instance::new(apm, plat, &std_catalog()).unwrap();
    let v = check_schedule(&inst, s);
    assert!(v.is_empty(), "{v:?}");
}

#[test]
fn lpt_three_independent() {
    let m = apm(&[("a", "screw"), ("b", "pick"), ("c", "place")], &[]);
    let skills: &[&str] = &["screw", "pick", "place"];
    let p = platform(&[("R1", skills), ("R2", skills)], &[("screw", 3), ("pick", 2), ("place", 2)], &[]);
    let s = list_schedule(&m, &p, &std_catalog()).unwrap();
    assert_eq!(s.makespan, Time::from_units(4));
    legal(&m, &p, &s);
    assert_eq!(exact_schedule(&m, &p, &std_catalog()).unwrap().makespan, Time::from_units(4));
}

#[test]
fn serial_chain_on_one_assembler() {
    let m = apm(&[("a", "pick"), ("b", "pick"), ("c", "pick")], &[("a", "b"), ("b", "c")]);
    let p = platform(&[("R1", &["pick"])], &[], &[]);
    let s = list_schedule(&m, &p, &std_catalog()).unwrap();
    assert_eq!(s.makespan, Time::from_units(3));
    assert_eq!(s.entries.len(), 3);
    legal(&m, &p, &s);
}

#[test]
fn exact_diamond_two_assemblers() {
    let m = apm(
        &[("a", "pick"), ("b", "pick"), ("c", "pick"), ("d", "pick")],
        &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
    );
    let p = platform(&[("R1", &["pick"]), ("R2", &["pick"])], &[], &[("R1", "R2", 0), ("R2", "R1", 0)]);
    let s = exact_schedule(&m, &p, &std_catalog()).unwrap();
    assert_eq!(s.makespan, Time::from_units(3));
    legal(&m, &p, &s);
}

#[test]
fn exact_forced_serialization() {
    let m = apm(&[("a", "weld"), ("b", "weld"), ("c", "pick")], &[]);
    let p = platform(&[("R1", &["weld"]), ("R2", &["pick"])], &[("weld", 4)], &[]);
    let s = exact_schedule(&m, &p, &std_catalog()).unwrap();
    assert_eq!(s.makespan, Time::from_units(8));
}

#[test]
fn exact_two_parallel_units() {
    let m = apm(&[("a", "pick"), ("b", "pick")], &[]);
    let p = platform(&[("R1", &["pick"]), ("R2", &["pick"])], &[], &[]);
    assert_eq!(exact_schedule(&m, &p, &std_catalog()).unwrap().makespan, Time::from_units(1));
}

#[test]
fn feasibility_gate() {
    let m = apm(&[("a", "pick"), ("b", "place")], &[]);
    let p = platform(&[("R1", &["pick", "place"])], &[], &[]);
    assert!(check_feasibility(&m, &p, &std_catalog()).unwrap().feasible);

    let m = apm(&[("a", "pick"), ("b", "weld")], &[]);
    let f = check_feasibility(&m, &p, &std_catalog()).unwrap();
    assert!(!f.feasible);
    assert_eq!(f.gap, [ActionId::from("weld")].into());
    assert!(matches!(
        lower(&m, &p, &std_catalog(), LoweringPolicy::LIST),
        Err(LowerError::Infeasible { .. })
    ));

    let mut m = apm(&[("a", "pick")], &[]);
    m.root.activities[0].operations[0].actions[0].action = "mystery".into();
    assert_eq!(
        check_feasibility(&m, &p, &std_catalog()),
        Err(CapabilityError::UnknownAction("mystery".into()))
    );
}

#[test]
fn exact_limit() {
    let ids: Vec<String> = (0..13).map(|i| format!("x{i:02}")).collect();
    let actions: Vec<(&str, &str)> = ids.iter().map(|i| (i.as_str(), "pick")).collect();
    let m = apm(&actions, &[]);
    let p = platform(&[("R1", &["pick"])], &[], &[]);
    assert_eq!(
        lower(&m, &p, &std_catalog(), LoweringPolicy::EXACT).unwrap_err(),
        LowerError::ExactLimit {
            actions: 13,
            assemblers: 1
        }
    );
    assert!(lower(&m, &p, &std_catalog(), LoweringPolicy::LIST).is_ok());
}

#[test]
fn hand_over_adds_transit() {
    let m = apm(&[("a", "pick"), ("b", "insert")], &[("a", "b")]);
    let p = platform(&[("R1", &["pick"]), ("W1", &["insert"])], &[], &[("R1", "W1", 5)]);
    let s = list_schedule(&m, &p, &std_catalog()).unwrap();
    let b = s.entry("b").unwrap();
    assert_eq!(b.start, Time::from_units(6));
    assert_eq!(s.makespan, Time::from_units(7));
    legal(&m, &p, &s);
    assert_eq!(exact_schedule(&m, &p, &std_catalog()).unwrap().makespan, Time::from_units(7));
}

#[test]
fn no_route_between_cells() {
    let m = apm(&[("a", "pick"), ("b", "insert")], &[("a", "b")]);
    let p = platform(&[("R1", &["pick"]), ("W1", &["insert"])], &[], &[("W1", "R1", 5)]);
    assert!(matches!(
        lower(&m, &p, &std_catalog(), LoweringPolicy::LIST),
        Err(LowerError::NoRoute { .. })
    ));
    assert!(matches!(
        lower(&m, &p, &std_catalog(), LoweringPolicy::EXACT),
        Err(LowerError::NoRoute { .. })
    ));
}

#[test]
fn lowered_model_is_bound_and_deterministic() {
    let m = apm(&[("a", "pick"), ("b", "place")], &[("a", "b")]);
    let p = platform(&[("R1", &["pick", "place"]), ("R2", &["place"])], &[], &[]);
    let ps = lower(&m, &p, &std_catalog(), LoweringPolicy::LIST).unwrap();
    assert_eq!(ps.stage, Stage::PlatformSpecific);
    let binding = ps.platform_binding.as_ref().unwrap();
    assert_eq!(binding.platform_ref, "plat");
    assert_eq!(binding.schedule.entries.len(), 2);
    assert_eq!(ps, lower(&m, &p, &std_catalog(), LoweringPolicy::LIST).unwrap());
    assert!(matches!(
        lower(&ps, &p, &std_catalog(), LoweringPolicy::LIST),
        Err(LowerError::WrongStage(_))
    ));
}

#[test]
fn adding_an_edge_never_helps_exact() {
    let base = [("a", "pick"), ("b", "pick"), ("c", "place"), ("d", "place")];
    let p = platform(&[("R1", &["pick", "place"]), ("R2", &["place"])], &[("pick", 2), ("place", 3)], &[]);
    let free = exact_schedule(&apm(&base, &[]), &p, &std_catalog()).unwrap().makespan;
    for edge in [("a", "c"), ("b", "d"), ("a", "b"), ("c", "d")] {
        let constrained = exact_schedule(&apm(&base, &[edge]), &p, &std_catalog()).unwrap().makespan;
        assert!(constrained >= free);
    }
}
