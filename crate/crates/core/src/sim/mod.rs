//! Discrete-event evaluation of a platform-specific process model on its
//! platform over one or more product units. The report gives makespan and
//! per-assembler utilization along with passive-buffer occupancy.
//!
//! The embedded single-unit schedule is the dispatch template: every
//! assembler works through its template actions unit after unit, an action
//! never starts before its template offset from the unit's release, and
//! items handed between assemblers travel over the platform route (and wait
//! in any passive connector on it until the receiving action starts).

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::apm::{flatten_to_action_graph, AssemblyProcessModel, Stage};
use crate::aspm::{Capacity, PlatformModel, Routes};
use crate::ids::{kind_tag, AssemblerId};
use crate::time::Time;

kind_tag!(SimReportTag, "sim-report");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub quantity: u32,
    /// Time between successive unit releases; zero releases all at once.
    pub inter_unit_release: Time,
    /// Carried into the report unmodified.
    pub quality_params: BTreeMap<String, String>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            quantity: 1,
            inter_unit_release: Time::ZERO,
            quality_params: BTreeMap::new(),
        }
    }
}

impl SimConfig {
    pub fn with_quantity(quantity: u32) -> Self {
        SimConfig {
            quantity,
            ..SimConfig::default()
        }
    }
}

/// An item that found a bounded passive connector full and waited.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityEvent {
    pub connector: String,
    pub unit: u32,
    pub action: String,
    pub at: Time,
    pub blocked_for: Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimReport {
    pub kind: SimReportTag,
    pub model: String,
    pub platform: String,
    pub quantity: u32,
    pub total_makespan: Time,
    /// Longest release-to-completion time of any single unit.
    pub per_unit_makespan: Time,
    pub busy: BTreeMap<AssemblerId, Time>,
    pub utilization: BTreeMap<AssemblerId, f64>,
    pub passive_buffer_peak: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub capacity_exceeded: Vec<CapacityEvent>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub quality_params: BTreeMap<String, String>,
}

impl SimReport {
    pub fn mean_utilization(&self) -> f64 {
        if self.utilization.is_empty() {
            0.0
        } else {
            self.utilization.values().sum::<f64>() / self.utilization.len() as f64
        }
    }

    /// Aligned plain-text rendering.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model            {}", self.model);
        let _ = writeln!(out, "platform         {}", self.platform);
        let _ = writeln!(out, "quantity         {}", self.quantity);
        let _ = writeln!(out, "total makespan   {}", self.total_makespan);
        let _ = writeln!(out, "unit makespan    {}", self.per_unit_makespan);
        let width = self.busy.keys().map(|k| k.as_str().len()).max().unwrap_or(0).max(9);
        let _ = writeln!(out, "\n{:<width$}  {:>10}  {:>11}", "assembler", "busy", "utilization");
        for (a, busy) in &self.busy {
            let _ = writeln!(
                out,
                "{:<width$}  {:>10}  {:>11.4}",
                a.as_str(),
                busy.to_string(),
                self.utilization.get(a).copied().unwrap_or(0.0)
            );
        }
        if !self.passive_buffer_peak.is_empty() {
            let width = self.passive_buffer_peak.keys().map(String::len).max().unwrap_or(0).max(9);
            let _ = writeln!(out, "\n{:<width$}  {:>5}", "connector", "peak");
            for (c, peak) in &self.passive_buffer_peak {
                let _ = writeln!(out, "{c:<width$}  {peak:>5}");
            }
        }
        for e in &self.capacity_exceeded {
            let _ = writeln!(
                out,
                "capacity exceeded on {} at {}: unit {} {} blocked for {}",
                e.connector, e.at, e.unit, e.action, e.blocked_for
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("BINDING_MISMATCH: model is bound to platform `{bound}`, not `{given}`")]
    BindingMismatch { bound: String, given: String },
    #[error("NOT_PLATFORM_SPECIFIC: model `{0}` has no schedule")]
    NotPlatformSpecific(String),
    #[error("INVALID_SCHEDULE: {0}")]
    InvalidSchedule(String),
    #[error("NO_ROUTE: no route from `{from}` to `{to}` for a hand-over")]
    NoRoute { from: String, to: String },
    #[error("CAPACITY_EXCEEDED: passive connector `{connector}` is full and no staged item can leave")]
    CapacityExceeded { connector: String },
    #[error("ZERO_QUANTITY: at least one unit must be simulated")]
    ZeroQuantity,
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::BindingMismatch { .. } => "BINDING_MISMATCH",
            SimError::NotPlatformSpecific(_) => "NOT_PLATFORM_SPECIFIC",
            SimError::InvalidSchedule(_) => "INVALID_SCHEDULE",
            SimError::NoRoute { .. } => "NO_ROUTE",
            SimError::CapacityExceeded { .. } => "CAPACITY_EXCEEDED",
            SimError::ZeroQuantity => "ZERO_QUANTITY",
        }
    }
}

#[derive(Debug, Clone)]
enum Event {
    Finish(usize),
    Arrive { job: usize, buffers: Vec<usize> },
    Wake,
}

struct Buffer {
    id: String,
    capacity: Option<u32>,
    occupied: u32,
    peak: u32,
    waiting: VecDeque<(usize, Vec<usize>, Time)>,
}

impl Buffer {
    fn has_room(&self) -> bool {
        self.capacity.is_none_or(|c| self.occupied < c)
    }
}

struct Engine {
    n: usize,
    now: Time,
    seq: u64,
    heap: BinaryHeap<Reverse<(Time, u64)>>,
    events: HashMap<u64, Event>,
    pending: Vec<usize>,
    release: Vec<Time>,
    held: Vec<Vec<usize>>,
    finish: Vec<Option<Time>>,
    buffers: Vec<Buffer>,
    capacity_events: Vec<CapacityEvent>,
}

impl Engine {
    fn push(&mut self, at: Time, e: Event) {
        self.seq += 1;
        self.events.insert(self.seq, e);
        self.heap.push(Reverse((at, self.seq)));
    }

    fn deliver(&mut self, job: usize) {
        self.pending[job] -= 1;
    }

    fn occupy(&mut self, job: usize, buffers: Vec<usize>) {
        for &b in &buffers {
            let buf = &mut self.buffers[b];
            buf.occupied += 1;
            buf.peak = buf.peak.max(buf.occupied);
        }
        self.held[job].extend(buffers);
        self.deliver(job);
    }

    fn arrive(&mut self, job: usize, buffers: Vec<usize>, since: Time) -> bool {
        if buffers.iter().all(|&b| self.buffers[b].has_room()) {
            self.occupy(job, buffers);
            true
        } else {
            let full = *buffers
                .iter()
                .find(|&&b| !self.buffers[b].has_room())
                .expect("some buffer full");
            self.buffers[full].waiting.push_back((job, buffers, since));
            false
        }
    }

    /// Frees the slots `job` held and admits waiting items in FIFO order.
    fn release_slots(&mut self, job: usize, action_ids: &[String]) {
        let held = std::mem::take(&mut self.held[job]);
        for &b in &held {
            self.buffers[b].occupied -= 1;
        }
        for &b in &held {
            while self.buffers[b].has_room() {
                let Some((waiter, bufs, since)) = self.buffers[b].waiting.pop_front() else {
                    break;
                };
                if !self.arrive(waiter, bufs, since) {
                    continue;
                }
                self.capacity_events.push(CapacityEvent {
                    connector: self.buffers[b].id.clone(),
                    unit: (waiter / self.n) as u32 + 1,
                    action: action_ids[waiter % self.n].clone(),
                    at: since,
                    blocked_for: self.now - since,
                });
            }
        }
    }
}

/// Replays the embedded schedule for `config.quantity` units.
pub fn simulate(ps_apm: &AssemblyProcessModel, platform: &PlatformModel, config: &SimConfig) -> Result<SimReport, SimError> {
    if config.quantity == 0 {
        return Err(SimError::ZeroQuantity);
    }
    let binding = match (&ps_apm.stage, &ps_apm.platform_binding) {
        (Stage::PlatformSpecific, Some(b)) => b,
        _ => return Err(SimError::NotPlatformSpecific(ps_apm.id.clone())),
    };
    if binding.platform_ref != platform.id {
        return Err(SimError::BindingMismatch {
            bound: binding.platform_ref.clone(),
            given: platform.id.clone(),
        });
    }

    let graph = flatten_to_action_graph(ps_apm);
    let n = graph.len();
    let assemblers: Vec<AssemblerId> = platform.assemblers().iter().map(|s| s.assembler.id.clone()).collect();
    let mut template: Vec<Option<(usize, Time, Time)>> = vec![None; n];
    for e in &binding.schedule.entries {
        let v = graph
            .index_of(&e.action_instance_id)
            .ok_or_else(|| SimError::InvalidSchedule(format!("unknown action `{}`", e.action_instance_id)))?;
        let a = assemblers
            .iter()
            .position(|x| *x == e.assembler_id)
            .ok_or_else(|| SimError::InvalidSchedule(format!("unknown assembler `{}`", e.assembler_id)))?;
        if template[v].is_some() {
            return Err(SimError::InvalidSchedule(format!("`{}` scheduled twice", e.action_instance_id)));
        }
        if e.finish < e.start {
            return Err(SimError::InvalidSchedule(format!("`{}` finishes before it starts", e.action_instance_id)));
        }
        template[v] = Some((a, e.start, e.finish - e.start));
    }
    let template: Vec<(usize, Time, Time)> = template
        .into_iter()
        .enumerate()
        .map(|(v, t)| t.ok_or_else(|| SimError::InvalidSchedule(format!("`{}` is not scheduled", graph.nodes[v].id))))
        .collect::<Result<_, _>>()?;

    let routes = Routes::new(platform);
    let passive: Vec<&crate::aspm::PlatformConnector> = platform
        .connectors
        .iter()
        .filter(|c| c.kind == crate::aspm::ConnectorKind::Passive)
        .collect();
    let buffer_index: HashMap<&str, usize> = passive.iter().enumerate().map(|(i, c)| (c.id.as_str(), i)).collect();

    // Hand-over route per flattened edge.
    let mut handover: HashMap<(usize, usize), (Time, Vec<usize>)> = HashMap::new();
    for (u, v) in graph.dag.edges() {
        let (au, av) = (template[u].0, template[v].0);
        if graph.same_operation(u, v) && au != av {
            let r = routes.get(&assemblers[au], &assemblers[av]).ok_or_else(|| SimError::NoRoute {
                from: assemblers[au].to_string(),
                to: assemblers[av].to_string(),
            })?;
            handover.insert((u, v), (r.transit, r.passive.iter().map(|p| buffer_index[p.as_str()]).collect()));
        }
    }

    let q = config.quantity as usize;
    let jobs = n * q;
    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); assemblers.len()];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| (template[x].1, &graph.nodes[x].id).cmp(&(template[y].1, &graph.nodes[y].id)));
    for unit in 0..q {
        for &v in &order {
            queues[template[v].0].push_back(unit * n + v);
        }
    }
    let unit_release = |unit: usize| -> Time {
        Time::from_micros(config.inter_unit_release.as_micros() * unit as i64)
    };

    let mut eng = Engine {
        n,
        now: Time::ZERO,
        seq: 0,
        heap: BinaryHeap::new(),
        events: HashMap::new(),
        pending: (0..jobs).map(|j| graph.dag.predecessors(j % n).count()).collect(),
        release: (0..jobs).map(|j| unit_release(j / n) + template[j % n].1).collect(),
        held: vec![Vec::new(); jobs],
        finish: vec![None; jobs],
        buffers: passive
            .iter()
            .map(|c| Buffer {
                id: c.id.clone(),
                capacity: match c.capacity() {
                    Capacity::Bounded(k) => Some(k),
                    Capacity::Unbounded => None,
                },
                occupied: 0,
                peak: 0,
                waiting: VecDeque::new(),
            })
            .collect(),
        capacity_events: Vec::new(),
    };
    let action_ids: Vec<String> = graph.nodes.iter().map(|x| x.id.clone()).collect();
    let mut busy_until: Vec<Option<usize>> = vec![None; assemblers.len()];
    let mut busy_time = vec![Time::ZERO; assemblers.len()];
    eng.push(Time::ZERO, Event::Wake);

    while let Some(Reverse((at, seq))) = eng.heap.pop() {
        eng.now = at;
        match eng.events.remove(&seq).expect("event") {
            Event::Finish(j) => {
                let v = j % n;
                let a = template[v].0;
                busy_until[a] = None;
                eng.finish[j] = Some(at);
                let base = j - v;
                for w in graph.dag.successors(v) {
                    match handover.get(&(v, w)) {
                        Some((transit, bufs)) => eng.push(at + *transit, Event::Arrive { job: base + w, buffers: bufs.clone() }),
                        None => eng.deliver(base + w),
                    }
                }
            }
            Event::Arrive { job, buffers } => {
                eng.arrive(job, buffers, at);
            }
            Event::Wake => {}
        }
        // Dispatch idle assemblers until nothing changes.
        loop {
            let mut progressed = false;
            for a in 0..assemblers.len() {
                if busy_until[a].is_some() {
                    continue;
                }
                let Some(&j) = queues[a].front() else { continue };
                if eng.pending[j] > 0 {
                    continue;
                }
                if eng.release[j] > eng.now {
                    let r = eng.release[j];
                    eng.push(r, Event::Wake);
                    continue;
                }
                queues[a].pop_front();
                busy_until[a] = Some(j);
                let d = template[j % n].2;
                busy_time[a] += d;
                let now = eng.now;
                eng.push(now + d, Event::Finish(j));
                eng.release_slots(j, &action_ids);
                progressed = true;
            }
            if !progressed {
                break;
            }
        }
    }

    if eng.finish.iter().any(Option::is_none) {
        let stuck = eng
            .buffers
            .iter()
            .find(|b| !b.waiting.is_empty())
            .map(|b| b.id.clone())
            .unwrap_or_default();
        return Err(SimError::CapacityExceeded { connector: stuck });
    }

    let finish: Vec<Time> = eng.finish.iter().map(|f| f.expect("finished")).collect();
    let total = finish.iter().copied().max().unwrap_or_default();
    let per_unit = (0..q)
        .map(|u| {
            let end = finish[u * n..(u + 1) * n].iter().copied().max().unwrap_or_default();
            end.checked_sub(unit_release(u)).unwrap_or_default()
        })
        .max()
        .unwrap_or_default();
    let ratio = |busy: Time| -> f64 {
        if total.is_zero() {
            0.0
        } else {
            busy.as_micros() as f64 / total.as_micros() as f64
        }
    };
    Ok(SimReport {
        kind: SimReportTag,
        model: ps_apm.id.clone(),
        platform: platform.id.clone(),
        quantity: config.quantity,
        total_makespan: total,
        per_unit_makespan: per_unit,
        busy: assemblers.iter().cloned().zip(busy_time.iter().copied()).collect(),
        utilization: assemblers.iter().cloned().zip(busy_time.iter().map(|b| ratio(*b))).collect(),
        passive_buffer_peak: eng.buffers.iter().map(|b| (b.id.clone(), b.peak)).collect(),
        capacity_exceeded: eng.capacity_events,
        quality_params: config.quality_params.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedScenario {
    pub rank: usize,
    pub label: String,
    pub total_makespan: Time,
    pub mean_utilization: f64,
}

/// Ranks scenarios by total makespan, then mean utilization (higher first),
/// then label.
pub fn compare_scenarios(reports: &[(String, SimReport)]) -> Vec<RankedScenario> {
    let mut rows: Vec<RankedScenario> = reports
        .iter()
        .map(|(label, r)| RankedScenario {
            rank: 0,
            label: label.clone(),
            total_makespan: r.total_makespan,
            mean_utilization: r.mean_utilization(),
        })
        .collect();
    rows.sort_by(|a, b| {
        a.total_makespan
            .cmp(&b.total_makespan)
            .then(b.mean_utilization.total_cmp(&a.mean_utilization))
            .then(a.label.cmp(&b.label))
    });
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    rows
}

pub fn comparison_table(rows: &[RankedScenario]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(8);
    let mut out = format!("{:>4}  {:<width$}  {:>14}  {:>16}\n", "rank", "scenario", "total makespan", "mean utilization");
    for r in rows {
        let _ = writeln!(
            out,
            "{:>4}  {:<width$}  {:>14}  {:>16.4}",
            r.rank,
            r.label,
            r.total_makespan.to_string(),
            r.mean_utilization
        );
    }
    out
}
