//! Shared helpers for the integration tests: fixture loading, random
//! instance generation and brute-force oracles. The oracles do not call
//! into the library's graph or scheduling code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use has_core::apm::{
    ActionInstance, Activity, AssemblyProcessModel, Operation, OperationKind, Precedence, ProcessKind, ProcessLevel,
    Stage,
};
use has_core::aspm::{
    Assembler, AssemblerKind, AspmTag, AssemblySubSystem, ConnectorKind, DurationEntry, PlatformConnector,
    PlatformModel, Port, PortDirection, PortRef,
};
use has_core::catalog::ActionCatalog;
use has_core::schedule::Schedule;
use has_core::Time;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fixture_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixture_path(""))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    names
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG on `n` nodes: a hidden random order, each forward pair linked
/// with probability `p`.
pub fn random_dag(rng: &mut impl Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((order[i], order[j]));
            }
        }
    }
    edges
}

/// Every permutation of `0..n`, in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Permutations of `0..n` respecting every edge, by filtering all `n!`.
pub fn linear_extensions(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    permutations(n)
        .into_iter()
        .filter(|p| {
            let mut pos = vec![0; n];
            for (i, &v) in p.iter().enumerate() {
                pos[v] = i;
            }
            edges.iter().all(|&(a, b)| pos[a] < pos[b])
        })
        .collect()
}

/// Reachability by Floyd-Warshall.
#[allow(clippy::needless_range_loop)]
pub fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for &(a, b) in edges {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

pub const SKILLS: [&str; 5] = ["pick", "place", "insert", "screw", "weld"];

/// Plain description of a one-activity scheduling instance from which both
/// the library models and the oracles are built.
#[derive(Debug, Clone)]
pub struct Spec {
    /// (catalog action, operation index) per action `a<i>`.
    pub actions: Vec<(&'static str, usize)>,
    pub ops: usize,
    /// Operation-level precedence.
    pub op_edges: Vec<(usize, usize)>,
    /// Action precedence inside one operation.
    pub action_edges: Vec<(usize, usize)>,
    /// Skills per assembler `R<j>`, each in its own cell `S<j>`.
    pub skills: Vec<BTreeSet<&'static str>>,
    /// Duration in whole units per (skill, assembler).
    pub durations: BTreeMap<(&'static str, usize), i64>,
    /// Directed cell links with transit units.
    pub links: Vec<(usize, usize, i64)>,
}

pub fn action_id(i: usize) -> String {
    format!("a{i:02}")
}

pub fn assembler_id(j: usize) -> String {
    format!("R{}", j + 1)
}

impl Spec {
    pub fn n(&self) -> usize {
        self.actions.len()
    }

    pub fn assemblers(&self) -> usize {
        self.skills.len()
    }

    pub fn catalog(&self) -> ActionCatalog {
        ActionCatalog::standard("std")
    }

    pub fn apm(&self) -> AssemblyProcessModel {
        let catalog = self.catalog();
        let operations = (0..self.ops)
            .map(|o| {
                let members: Vec<usize> = (0..self.n()).filter(|&i| self.actions[i].1 == o).collect();
                Operation {
                    id: format!("op{o}"),
                    kind: OperationKind::Other,
                    actions: members
                        .iter()
                        .map(|&i| {
                            let name = self.actions[i].0;
                            ActionInstance {
                                id: action_id(i),
                                action: name.into(),
                                bindings: catalog
                                    .get(&name.into())
                                    .unwrap()
                                    .params
                                    .iter()
                                    .map(|p| (p.clone(), "x".to_owned()))
                                    .collect(),
                            }
                        })
                        .collect(),
                    precedence: self
                        .action_edges
                        .iter()
                        .filter(|(a, _)| self.actions[*a].1 == o)
                        .map(|&(a, b)| Precedence::new(action_id(a), action_id(b)))
                        .collect(),
                }
            })
            .collect();
        AssemblyProcessModel {
            stage: Stage::PlatformIndependent,
            id: "rand".into(),
            product_ref: "rand-product".into(),
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
                    operations,
                    precedence: self
                        .op_edges
                        .iter()
                        .map(|&(a, b)| Precedence::new(format!("op{a}"), format!("op{b}")))
                        .collect(),
                }],
                precedence: vec![],
            },
            platform_binding: None,
        }
    }

    pub fn platform(&self) -> PlatformModel {
        let ports = || {
            vec![
                Port {
                    id: "in".into(),
                    direction: PortDirection::Input,
                },
                Port {
                    id: "out".into(),
                    direction: PortDirection::Output,
                },
            ]
        };
        PlatformModel {
            kind: AspmTag,
            id: "rand-platform".into(),
            subsystems: (0..self.assemblers())
                .map(|j| AssemblySubSystem {
                    id: format!("S{j}"),
                    children: vec![],
                    ports: ports(),
                    assembler: Some(Assembler {
                        id: assembler_id(j).into(),
                        kind: AssemblerKind::Machine,
                        skills: self.skills[j].iter().map(|s| (*s).into()).collect(),
                    }),
                })
                .collect(),
            connectors: self
                .links
                .iter()
                .enumerate()
                .map(|(k, &(a, b, t))| PlatformConnector {
                    id: format!("L{k}"),
                    kind: ConnectorKind::Active,
                    from: PortRef {
                        subsystem: format!("S{a}"),
                        port: "out".into(),
                    },
                    to: PortRef {
                        subsystem: format!("S{b}"),
                        port: "in".into(),
                    },
                    transit_time: Some(Time::from_units(t)),
                    capacity: None,
                })
                .collect(),
            durations: self
                .durations
                .iter()
                .map(|(&(s, j), &d)| DurationEntry {
                    skill: s.into(),
                    assembler: assembler_id(j).into(),
                    duration: Time::from_units(d),
                })
                .collect(),
        }
    }

    pub fn duration(&self, action: usize, assembler: usize) -> Option<i64> {
        let skill = self.actions[action].0;
        if self.skills[assembler].contains(skill) {
            self.durations.get(&(skill, assembler)).copied()
        } else {
            None
        }
    }

    /// Minimum transit between cells by Floyd-Warshall; `None` if unreachable.
    pub fn transit(&self) -> Vec<Vec<Option<i64>>> {
        let m = self.assemblers();
        let mut d = vec![vec![None; m]; m];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = Some(0);
        }
        for &(a, b, t) in &self.links {
            d[a][b] = Some(d[a][b].map_or(t, |x: i64| x.min(t)));
        }
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    if let (Some(x), Some(y)) = (d[i][k], d[k][j]) {
                        if d[i][j].is_none_or(|z| x + y < z) {
                            d[i][j] = Some(x + y);
                        }
                    }
                }
            }
        }
        d
    }

    /// Ordering constraints (u, v, hand-over): direct intra-operation edges
    /// carry a hand-over, operation-level order relates every member pair.
    pub fn constraints(&self) -> Vec<(usize, usize, bool)> {
        let mut out: Vec<(usize, usize, bool)> = self.action_edges.iter().map(|&(a, b)| (a, b, true)).collect();
        let ops = closure(self.ops, &self.op_edges);
        for u in 0..self.n() {
            for v in 0..self.n() {
                if ops[self.actions[u].1][self.actions[v].1] {
                    out.push((u, v, false));
                }
            }
        }
        out
    }
}

pub struct Shape {
    pub min_actions: usize,
    pub max_actions: usize,
    pub max_assemblers: usize,
}

/// A feasible random instance: every action's skill is held by at least
/// one assembler and the cells form a ring, so every hand-over has a route.
pub fn random_spec(rng: &mut impl Rng, shape: &Shape) -> Spec {
    let n = rng.gen_range(shape.min_actions..=shape.max_actions);
    let m = rng.gen_range(1..=shape.max_assemblers);
    let ops = rng.gen_range(1..=n.min(4));
    let mut actions: Vec<(&'static str, usize)> = (0..n)
        .map(|_| (SKILLS[rng.gen_range(0..SKILLS.len())], rng.gen_range(0..ops)))
        .collect();
    // No empty operations.
    for (o, a) in actions.iter_mut().enumerate().take(ops) {
        a.1 = o;
    }
    actions.shuffle(rng);
    let mut action_edges = Vec::new();
    for o in 0..ops {
        let members: Vec<usize> = (0..n).filter(|&i| actions[i].1 == o).collect();
        for (a, b) in random_dag(rng, members.len(), 0.4) {
            action_edges.push((members[a], members[b]));
        }
    }
    let op_edges = random_dag(rng, ops, 0.3);
    let mut skills: Vec<BTreeSet<&'static str>> = (0..m)
        .map(|_| SKILLS.iter().copied().filter(|_| rng.gen_bool(0.6)).collect())
        .collect();
    for (s, _) in &actions {
        if !skills.iter().any(|k| k.contains(s)) {
            let j = rng.gen_range(0..m);
            skills[j].insert(s);
        }
    }
    let mut durations = BTreeMap::new();
    for (j, set) in skills.iter().enumerate() {
        for s in set {
            durations.insert((*s, j), rng.gen_range(1..=5));
        }
    }
    let mut links = Vec::new();
    if m > 1 {
        for j in 0..m {
            links.push((j, (j + 1) % m, rng.gen_range(0..=3)));
        }
        for a in 0..m {
            for b in 0..m {
                if a != b && rng.gen_bool(0.3) {
                    links.push((a, b, rng.gen_range(0..=3)));
                }
            }
        }
    }
    Spec {
        actions,
        ops,
        op_edges,
        action_edges,
        skills,
        durations,
        links,
    }
}

/// Minimum makespan in whole units over every precedence-respecting
/// permutation and every skill-capable assignment, each evaluated as the
/// schedule that appends actions to their assembler in permutation order.
pub fn brute_force_makespan(spec: &Spec) -> Option<i64> {
    let n = spec.n();
    let m = spec.assemblers();
    let constraints = spec.constraints();
    let transit = spec.transit();
    let order_edges: Vec<(usize, usize)> = constraints.iter().map(|&(u, v, _)| (u, v)).collect();
    let perms = linear_extensions(n, &order_edges);
    let capable: Vec<Vec<usize>> = (0..n).map(|i| (0..m).filter(|&j| spec.duration(i, j).is_some()).collect()).collect();
    if capable.iter().any(Vec::is_empty) {
        return None;
    }
    let mut preds: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for &(u, v, h) in &constraints {
        preds[v].push((u, h));
    }
    let mut best: Option<i64> = None;
    let mut choice = vec![0usize; n];
    loop {
        let assign: Vec<usize> = (0..n).map(|i| capable[i][choice[i]]).collect();
        'perm: for p in &perms {
            let mut free = vec![0i64; m];
            let mut finish = vec![0i64; n];
            let mut span = 0;
            for &v in p {
                let a = assign[v];
                let mut start = free[a];
                for &(u, handover) in &preds[v] {
                    let mut ready = finish[u];
                    if handover && assign[u] != a {
                        match transit[assign[u]][a] {
                            Some(t) => ready += t,
                            None => continue 'perm,
                        }
                    }
                    start = start.max(ready);
                }
                finish[v] = start + spec.duration(v, a).unwrap();
                free[a] = finish[v];
                span = span.max(finish[v]);
                if best.is_some_and(|b| span >= b) {
                    continue 'perm;
                }
            }
            best = Some(best.map_or(span, |b| b.min(span)));
        }
        // Next assignment in mixed radix.
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            choice[i] += 1;
            if choice[i] < capable[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Independent legality check of a schedule for `spec`; returns one line
/// per problem.
#[allow(clippy::needless_range_loop)]
pub fn legality_problems(spec: &Spec, schedule: &Schedule) -> Vec<String> {
    let mut out = Vec::new();
    let n = spec.n();
    let mut placed: Vec<Option<(usize, i64, i64)>> = vec![None; n];
    for e in &schedule.entries {
        let Some(i) = (0..n).find(|&i| action_id(i) == e.action_instance_id) else {
            out.push(format!("unknown action {}", e.action_instance_id));
            continue;
        };
        let Some(j) = (0..spec.assemblers()).find(|&j| assembler_id(j) == e.assembler_id.as_str()) else {
            out.push(format!("unknown assembler {}", e.assembler_id));
            continue;
        };
        if placed[i].is_some() {
            out.push(format!("{} scheduled twice", action_id(i)));
        }
        placed[i] = Some((j, e.start.as_micros(), e.finish.as_micros()));
    }
    let unit = Time::from_units(1).as_micros();
    for i in 0..n {
        let Some((j, s, f)) = placed[i] else {
            out.push(format!("{} not scheduled", action_id(i)));
            continue;
        };
        if s < 0 {
            out.push(format!("{} starts before 0", action_id(i)));
        }
        match spec.duration(i, j) {
            None => out.push(format!("{} on {} lacks the skill", action_id(i), assembler_id(j))),
            Some(d) if f - s != d * unit => out.push(format!("{} has duration {} not {d}", action_id(i), f - s)),
            _ => {}
        }
    }
    let transit = spec.transit();
    for (u, v, handover) in spec.constraints() {
        if let (Some((ju, _, fu)), Some((jv, sv, _))) = (placed[u], placed[v]) {
            let mut ready = fu;
            if handover && ju != jv {
                match transit[ju][jv] {
                    Some(t) => ready += t * unit,
                    None => out.push(format!("no route for {}->{}", action_id(u), action_id(v))),
                }
            }
            if sv < ready {
                out.push(format!("{} starts before {} delivers", action_id(v), action_id(u)));
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if let (Some((ja, sa, fa)), Some((jb, sb, fb))) = (placed[a], placed[b]) {
                if ja == jb && sa < fb && sb < fa {
                    out.push(format!("{} and {} overlap on {}", action_id(a), action_id(b), assembler_id(ja)));
                }
            }
        }
    }
    let span = placed.iter().flatten().map(|p| p.2).max().unwrap_or(0);
    if schedule.makespan.as_micros() != span {
        out.push(format!("makespan {} but last finish {span}", schedule.makespan.as_micros()));
    }
    out
}
