//! Assembly system platform models. A platform is a sub-system tree of
//! assemblers joined by connectors, with a table of skill durations.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::ActionCatalog;
use crate::ids::{kind_tag, ActionId, AssemblerId, SkillId};
use crate::report::{Rule, ValidationReport};
use crate::time::Time;

kind_tag!(AspmTag, "aspm");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformModel {
    pub kind: AspmTag,
    pub id: String,
    pub subsystems: Vec<AssemblySubSystem>,
    #[serde(default)]
    pub connectors: Vec<PlatformConnector>,
    #[serde(default)]
    pub durations: Vec<DurationEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblySubSystem {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<AssemblySubSystem>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ports: Vec<Port>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assembler: Option<Assembler>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssemblerKind {
    Human,
    Machine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assembler {
    pub id: AssemblerId,
    pub kind: AssemblerKind,
    pub skills: BTreeSet<SkillId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortDirection {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Port {
    pub id: String,
    pub direction: PortDirection,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortRef {
    pub subsystem: String,
    pub port: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectorKind {
    /// Conveyor-like link with a transit time.
    Active,
    /// Storage location.
    Passive,
}

/// Storage bound of a passive connector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Capacity {
    Bounded(u32),
    #[default]
    Unbounded,
}

impl Serialize for Capacity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Capacity::Bounded(n) => s.serialize_u32(*n),
            Capacity::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Capacity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u32),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(Capacity::Bounded(n)),
            Raw::Word(w) if w == "unbounded" => Ok(Capacity::Unbounded),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "capacity must be a non-negative integer or \"unbounded\", found \"{w}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformConnector {
    pub id: String,
    pub kind: ConnectorKind,
    pub from: PortRef,
    pub to: PortRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transit_time: Option<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<Capacity>,
}

impl PlatformConnector {
    pub fn transit(&self) -> Time {
        match self.kind {
            ConnectorKind::Active => self.transit_time.unwrap_or_default(),
            ConnectorKind::Passive => Time::ZERO,
        }
    }

    pub fn capacity(&self) -> Capacity {
        self.capacity.unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationEntry {
    pub skill: SkillId,
    pub assembler: AssemblerId,
    pub duration: Time,
}

/// A leaf sub-system and the assembler it carries.
#[derive(Debug, Clone, Copy)]
pub struct AssemblerSite<'a> {
    pub assembler: &'a Assembler,
    pub subsystem: &'a str,
}

impl PlatformModel {
    /// Assemblers ordered by id.
    pub fn assemblers(&self) -> Vec<AssemblerSite<'_>> {
        fn walk<'a>(subs: &'a [AssemblySubSystem], out: &mut Vec<AssemblerSite<'a>>) {
            for s in subs {
                if let Some(a) = &s.assembler {
                    out.push(AssemblerSite {
                        assembler: a,
                        subsystem: &s.id,
                    });
                }
                walk(&s.children, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.subsystems, &mut out);
        out.sort_by(|a, b| a.assembler.id.cmp(&b.assembler.id));
        out
    }

    pub fn assembler(&self, id: &AssemblerId) -> Option<&Assembler> {
        self.assemblers()
            .into_iter()
            .find(|s| &s.assembler.id == id)
            .map(|s| s.assembler)
    }

    pub fn duration_table(&self) -> DurationTable {
        DurationTable(
            self.durations
                .iter()
                .map(|d| ((d.skill.clone(), d.assembler.clone()), d.duration))
                .collect(),
        )
    }

    /// Multiplies every duration and transit time by `num / den`; `None` if
    /// any value would not be exactly representable.
    pub fn scaled(&self, num: i64, den: i64) -> Option<PlatformModel> {
        let mut out = self.clone();
        for d in &mut out.durations {
            d.duration = d.duration.scale(num, den)?;
        }
        for c in &mut out.connectors {
            if let Some(t) = c.transit_time {
                c.transit_time = Some(t.scale(num, den)?);
            }
        }
        Some(out)
    }
}

/// (skill, assembler) -> duration lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DurationTable(pub BTreeMap<(SkillId, AssemblerId), Time>);

impl DurationTable {
    pub fn get(&self, skill: &SkillId, assembler: &AssemblerId) -> Option<Time> {
        self.0.get(&(skill.clone(), assembler.clone())).copied()
    }
}

fn walk_subsystems<'a>(subs: &'a [AssemblySubSystem], out: &mut Vec<&'a AssemblySubSystem>) {
    for s in subs {
        out.push(s);
        walk_subsystems(&s.children, out);
    }
}

/// Checks a platform model against the platform meta-model.
pub fn validate_aspm(model: &PlatformModel) -> ValidationReport {
    let mut report = ValidationReport::new(&model.id);
    let mut all = Vec::new();
    walk_subsystems(&model.subsystems, &mut all);

    let mut ids = BTreeSet::new();
    let mut ports: HashMap<(&str, &str), PortDirection> = HashMap::new();
    for s in &all {
        if !ids.insert(s.id.as_str()) {
            report.violation(Rule::DuplicateId, &s.id, format!("sub-system `{}` declared twice", s.id));
        }
        match (&s.assembler, s.children.is_empty()) {
            (Some(a), false) => report.violation(
                Rule::AssemblerPlacement,
                &s.id,
                format!("non-leaf sub-system `{}` carries assembler `{}`", s.id, a.id),
            ),
            (None, true) => report.violation(
                Rule::AssemblerMissing,
                &s.id,
                format!("leaf sub-system `{}` has no assembler", s.id),
            ),
            _ => {}
        }
        for p in &s.ports {
            if ports.insert((s.id.as_str(), p.id.as_str()), p.direction).is_some() {
                report.violation(
                    Rule::DuplicateId,
                    format!("{}/{}", s.id, p.id),
                    format!("port `{}` declared twice on `{}`", p.id, s.id),
                );
            }
        }
    }

    let sites = model.assemblers();
    if sites.is_empty() {
        report.violation(Rule::NoAssembler, &model.id, "platform has no assembler");
    }
    let mut assembler_ids = BTreeSet::new();
    for site in &sites {
        let a = site.assembler;
        if !assembler_ids.insert(&a.id) {
            report.violation(Rule::DuplicateId, a.id.as_str(), format!("assembler `{}` declared twice", a.id));
        }
        if a.skills.is_empty() {
            report.violation(Rule::EmptySkills, a.id.as_str(), format!("assembler `{}` has no skills", a.id));
        }
    }

    let mut connector_ids = BTreeSet::new();
    for c in &model.connectors {
        if !connector_ids.insert(c.id.as_str()) {
            report.violation(Rule::DuplicateId, &c.id, format!("connector `{}` declared twice", c.id));
        }
        for (end, expected) in [(&c.from, PortDirection::Output), (&c.to, PortDirection::Input)] {
            match ports.get(&(end.subsystem.as_str(), end.port.as_str())) {
                None => report.violation(
                    Rule::UnknownPort,
                    &c.id,
                    format!("port `{}/{}` does not exist", end.subsystem, end.port),
                ),
                Some(dir) if *dir != expected => report.violation(
                    Rule::PortDirection,
                    &c.id,
                    format!(
                        "port `{}/{}` must be an {} port",
                        end.subsystem,
                        end.port,
                        if expected == PortDirection::Output { "output" } else { "input" }
                    ),
                ),
                Some(_) => {}
            }
        }
        match c.kind {
            ConnectorKind::Active => {
                if c.transit_time.is_none() || c.capacity.is_some() {
                    report.violation(
                        Rule::ConnectorKindFields,
                        &c.id,
                        "active connectors carry a transit_time and no capacity",
                    );
                }
            }
            ConnectorKind::Passive => {
                if c.transit_time.is_some() {
                    report.violation(
                        Rule::ConnectorKindFields,
                        &c.id,
                        "passive connectors carry no transit_time",
                    );
                }
                if c.capacity == Some(Capacity::Bounded(0)) {
                    report.violation(Rule::NonPositiveCapacity, &c.id, "capacity must be positive");
                }
            }
        }
    }

    let table = model.duration_table();
    for d in &model.durations {
        let element = format!("{}@{}", d.skill, d.assembler);
        if !d.duration.is_positive() {
            report.violation(Rule::NonPositiveDuration, &element, "duration must be positive");
        }
        match sites.iter().find(|s| s.assembler.id == d.assembler) {
            None => report.violation(
                Rule::DurationUnknownAssembler,
                &element,
                format!("duration entry names unknown assembler `{}`", d.assembler),
            ),
            Some(site) if !site.assembler.skills.contains(&d.skill) => report.warning(
                Rule::DurationUnused,
                &element,
                format!("assembler `{}` does not hold skill `{}`", d.assembler, d.skill),
            ),
            Some(_) => {}
        }
    }
    let mut keys = BTreeSet::new();
    for d in &model.durations {
        if !keys.insert((&d.skill, &d.assembler)) {
            report.violation(
                Rule::DuplicateId,
                format!("{}@{}", d.skill, d.assembler),
                "duration entry declared twice",
            );
        }
    }
    for site in &sites {
        for skill in &site.assembler.skills {
            if table.get(skill, &site.assembler.id).is_none() {
                report.violation(
                    Rule::DurationMissing,
                    format!("{skill}@{}", site.assembler.id),
                    format!("no duration for skill `{skill}` on assembler `{}`", site.assembler.id),
                );
            }
        }
    }
    report
}

/// Union of all assemblers' skills.
pub fn platform_skill_set(model: &PlatformModel) -> BTreeSet<SkillId> {
    model
        .assemblers()
        .iter()
        .flat_map(|s| s.assembler.skills.iter().cloned())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CapabilityError {
    #[error("UNKNOWN_ACTION: action `{0}` is not in the catalog")]
    UnknownAction(ActionId),
}

/// Required actions whose realizing skill no assembler holds.
pub fn capability_gap(
    required: &BTreeSet<ActionId>,
    model: &PlatformModel,
    catalog: &ActionCatalog,
) -> Result<BTreeSet<ActionId>, CapabilityError> {
    let skills = platform_skill_set(model);
    let mut gap = BTreeSet::new();
    for action in required {
        let skill = catalog
            .skill_of(action)
            .ok_or_else(|| CapabilityError::UnknownAction(action.clone()))?;
        if !skills.contains(skill) {
            gap.insert(action.clone());
        }
    }
    Ok(gap)
}

/// Cheapest connector path between two assemblers' sub-systems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub transit: Time,
    pub connectors: Vec<String>,
    /// Passive connectors on the path (items are staged there).
    pub passive: Vec<String>,
}

impl Route {
    fn local() -> Route {
        Route {
            transit: Time::ZERO,
            connectors: Vec::new(),
            passive: Vec::new(),
        }
    }
}

/// All-pairs assembler routing over directed platform connectors. Ties in
/// transit time go to the lexicographically smallest connector-id path.
#[derive(Debug, Clone, Default)]
pub struct Routes {
    routes: HashMap<(AssemblerId, AssemblerId), Route>,
}

impl Routes {
    pub fn new(model: &PlatformModel) -> Routes {
        let mut adjacency: BTreeMap<&str, Vec<&PlatformConnector>> = BTreeMap::new();
        for c in &model.connectors {
            adjacency.entry(c.from.subsystem.as_str()).or_default().push(c);
        }
        let sites = model.assemblers();
        let site_of: HashMap<&str, &AssemblerId> =
            sites.iter().map(|s| (s.subsystem, &s.assembler.id)).collect();

        let mut routes = HashMap::new();
        for origin in &sites {
            routes.insert((origin.assembler.id.clone(), origin.assembler.id.clone()), Route::local());
            let mut settled: BTreeSet<&str> = BTreeSet::new();
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((Time::ZERO, Vec::<&str>::new(), origin.subsystem)));
            while let Some(Reverse((cost, path, node))) = heap.pop() {
                if !settled.insert(node) {
                    continue;
                }
                if node != origin.subsystem {
                    if let Some(target) = site_of.get(node) {
                        let used: Vec<&PlatformConnector> = path
                            .iter()
                            .map(|id| model.connectors.iter().find(|c| c.id == *id).expect("path connector"))
                            .collect();
                        routes.insert(
                            (origin.assembler.id.clone(), (*target).clone()),
                            Route {
                                transit: cost,
                                connectors: path.iter().map(|s| s.to_string()).collect(),
                                passive: used
                                    .iter()
                                    .filter(|c| c.kind == ConnectorKind::Passive)
                                    .map(|c| c.id.clone())
                                    .collect(),
                            },
                        );
                    }
                }
                for c in adjacency.get(node).into_iter().flatten() {
                    let next = c.to.subsystem.as_str();
                    if !settled.contains(next) {
                        let mut p = path.clone();
                        p.push(c.id.as_str());
                        heap.push(Reverse((cost + c.transit(), p, next)));
                    }
                }
            }
        }
        Routes { routes }
    }

    pub fn get(&self, from: &AssemblerId, to: &AssemblerId) -> Option<&Route> {
        self.routes.get(&(from.clone(), to.clone()))
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.connectors.is_empty() {
            f.write_str("local")
        } else {
            write!(f, "{} (+{})", self.connectors.join(" -> "), self.transit)
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn cell(id: &str, assembler: &str, kind: AssemblerKind, skills: &[&str]) -> AssemblySubSystem {
        AssemblySubSystem {
            id: id.into(),
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
                id: assembler.into(),
                kind,
                skills: skills.iter().map(|s| (*s).into()).collect(),
            }),
        }
    }

    fn link(id: &str, from: &str, to: &str, kind: ConnectorKind, transit: Option<i64>) -> PlatformConnector {
        PlatformConnector {
            id: id.into(),
            kind,
            from: PortRef {
                subsystem: from.into(),
                port: "out".into(),
            },
            to: PortRef {
                subsystem: to.into(),
                port: "in".into(),
            },
            transit_time: transit.map(Time::from_units),
            capacity: None,
        }
    }

    pub(crate) fn two_cells() -> PlatformModel {
        PlatformModel {
            kind: AspmTag,
            id: "two-cells".into(),
            subsystems: vec![AssemblySubSystem {
                id: "line".into(),
                children: vec![
                    cell("S1", "R1", AssemblerKind::Machine, &["pick", "place"]),
                    cell("S2", "W1", AssemblerKind::Human, &["place", "insert"]),
                ],
                ports: vec![],
                assembler: None,
            }],
            connectors: vec![link("conv", "S1", "S2", ConnectorKind::Active, Some(5))],
            durations: vec![
                DurationEntry {
                    skill: "pick".into(),
                    assembler: "R1".into(),
                    duration: Time::from_units(1),
                },
                DurationEntry {
                    skill: "place".into(),
                    assembler: "R1".into(),
                    duration: Time::from_units(1),
                },
                DurationEntry {
                    skill: "place".into(),
                    assembler: "W1".into(),
                    duration: Time::from_units(2),
                },
                DurationEntry {
                    skill: "insert".into(),
                    assembler: "W1".into(),
                    duration: Time::from_units(3),
                },
            ],
        }
    }

    #[test]
    fn conformant_platform() {
        let r = validate_aspm(&two_cells());
        assert!(r.is_conformant(), "{r}");
    }

    #[test]
    fn assembler_on_non_leaf() {
        let mut m = two_cells();
        m.subsystems[0].assembler = m.subsystems[0].children[0].assembler.clone();
        assert!(validate_aspm(&m).has(Rule::AssemblerPlacement));
    }

    #[test]
    fn missing_duration() {
        let mut m = two_cells();
        m.durations.retain(|d| d.skill != "insert");
        assert!(validate_aspm(&m).has(Rule::DurationMissing));
    }

    #[test]
    fn bad_ports_and_kinds() {
        let mut m = two_cells();
        m.connectors.push(link("bad", "S2", "S9", ConnectorKind::Passive, Some(1)));
        m.connectors.push(PlatformConnector {
            from: PortRef {
                subsystem: "S1".into(),
                port: "in".into(),
            },
            ..link("dir", "S1", "S2", ConnectorKind::Active, Some(1))
        });
        let r = validate_aspm(&m);
        assert!(r.has(Rule::UnknownPort));
        assert!(r.has(Rule::ConnectorKindFields));
        assert!(r.has(Rule::PortDirection));
    }

    #[test]
    fn no_assemblers() {
        let m = PlatformModel {
            subsystems: vec![],
            connectors: vec![],
            durations: vec![],
            ..two_cells()
        };
        assert!(validate_aspm(&m).has(Rule::NoAssembler));
    }

    #[test]
    fn skill_union() {
        let skills: Vec<String> = platform_skill_set(&two_cells()).into_iter().map(|s| s.0).collect();
        assert_eq!(skills, ["insert", "pick", "place"]);
    }

    #[test]
    fn gap_is_set_difference() {
        let catalog = ActionCatalog::standard("std");
        let m = two_cells();
        let req = |names: &[&str]| names.iter().map(|n| ActionId::from(*n)).collect::<BTreeSet<_>>();
        assert!(capability_gap(&req(&["pick", "place"]), &m, &catalog).unwrap().is_empty());
        assert_eq!(
            capability_gap(&req(&["pick", "weld"]), &m, &catalog).unwrap(),
            req(&["weld"])
        );
        assert_eq!(
            capability_gap(&req(&["mystery-action"]), &m, &catalog),
            Err(CapabilityError::UnknownAction("mystery-action".into()))
        );
    }

    #[test]
    fn routes_follow_connector_direction() {
        let routes = Routes::new(&two_cells());
        let r1 = AssemblerId::from("R1");
        let w1 = AssemblerId::from("W1");
        assert_eq!(routes.get(&r1, &w1).unwrap().transit, Time::from_units(5));
        assert!(routes.get(&w1, &r1).is_none());
        assert_eq!(routes.get(&w1, &w1).unwrap().transit, Time::ZERO);
    }

    #[test]
    fn cheapest_route_wins() {
        let mut m = two_cells();
        m.subsystems[0].children.push(cell("S3", "B1", AssemblerKind::Machine, &["pick"]));
        m.durations.push(DurationEntry {
            skill: "pick".into(),
            assembler: "B1".into(),
            duration: Time::from_units(1),
        });
        m.connectors.push(link("a", "S1", "S3", ConnectorKind::Passive, None));
        m.connectors.push(link("b", "S3", "S2", ConnectorKind::Active, Some(1)));
        let routes = Routes::new(&m);
        let r = routes.get(&"R1".into(), &"W1".into()).unwrap();
        assert_eq!(r.connectors, ["a", "b"]);
        assert_eq!(r.passive, ["a"]);
        assert_eq!(r.transit, Time::from_units(1));
    }

    #[test]
    fn capacity_serde() {
        let c: Capacity = serde_json::from_str("3").unwrap();
        assert_eq!(c, Capacity::Bounded(3));
        let c: Capacity = serde_json::from_str("\"unbounded\"").unwrap();
        assert_eq!(c, Capacity::Unbounded);
        assert!(serde_json::from_str::<Capacity>("\"lots\"").is_err());
    }
}
