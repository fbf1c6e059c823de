//! Branch-and-bound for the minimum-makespan schedule.
//!
//! The search appends one (action, assembler) pair at a time to a serial
//! schedule and only explores sequences whose start times are
//! non-decreasing; every schedule can be left-shifted into such a sequence
//! without growing its makespan, so the restriction keeps optimality.

use crate::time::Time;

use super::instance::{Instance, Placed};

struct Search<'a> {
    inst: &'a Instance,
    /// Longest min-duration path starting at each action (inclusive).
    tail: Vec<Time>,
    min_dur: Vec<Time>,
    placed: Vec<Option<Placed>>,
    free: Vec<Time>,
    remaining_preds: Vec<usize>,
    count: usize,
    /// Best makespan known; branches that cannot beat (or, in the second
    /// pass, match) it are cut.
    bound: Time,
    /// Second pass: stop at the first schedule reaching `bound`.
    find_first: bool,
    best: Option<Vec<Option<Placed>>>,
}

impl Search<'_> {
    fn lower_bound(&self, last_start: Time, current: Time) -> Time {
        let inst = self.inst;
        let mut est = vec![Time::ZERO; inst.len()];
        let mut lb = current;
        let earliest_free = self.free.iter().copied().min().unwrap_or_default();
        let mut work = Time::ZERO;
        for &v in &inst.topo {
            if self.placed[v].is_some() {
                continue;
            }
            let mut e = last_start.max(earliest_free);
            for &(u, _) in &inst.preds[v] {
                let f = match self.placed[u] {
                    Some(p) => p.finish,
                    None => est[u] + self.min_dur[u],
                };
                e = e.max(f);
            }
            est[v] = e;
            lb = lb.max(e + self.tail[v]);
            work += self.min_dur[v];
        }
        // Average final load over all assemblers.
        let m = self.free.len() as i64;
        let total: i64 = self.free.iter().map(|t| t.as_micros()).sum::<i64>() + work.as_micros();
        let avg = Time::from_micros((total + m - 1) / m);
        lb.max(avg)
    }

    fn cut(&self, lb: Time) -> bool {
        if self.find_first {
            lb > self.bound
        } else {
            lb >= self.bound
        }
    }

    /// Returns true to stop the whole search.
    fn dfs(&mut self, last_start: Time, current: Time) -> bool {
        let inst = self.inst;
        if self.count == inst.len() {
            if self.find_first {
                if current == self.bound {
                    self.best = Some(self.placed.clone());
                    return true;
                }
            } else if current < self.bound {
                self.bound = current;
                self.best = Some(self.placed.clone());
            }
            return false;
        }
        if self.cut(self.lower_bound(last_start, current)) {
            return false;
        }
        // Candidate actions in id order for a canonical search order.
        let mut ready: Vec<usize> = (0..inst.len())
            .filter(|&v| self.placed[v].is_none() && self.remaining_preds[v] == 0)
            .collect();
        ready.sort_by(|&a, &b| inst.graph.nodes[a].id.cmp(&inst.graph.nodes[b].id));

        for v in ready {
            for (a, d) in inst.capable(v).collect::<Vec<_>>() {
                let Some(r) = inst.ready_time(v, a, &self.placed) else {
                    continue;
                };
                let start = r.max(self.free[a]);
                if start < last_start {
                    continue;
                }
                let finish = start + d;
                let next = current.max(finish);
                if self.cut(next) {
                    continue;
                }
                let saved_free = self.free[a];
                self.free[a] = finish;
                self.placed[v] = Some(Placed {
                    assembler: a,
                    start,
                    finish,
                });
                self.count += 1;
                for w in inst.graph.dag.successors(v) {
                    self.remaining_preds[w] -= 1;
                }
                let stop = self.dfs(start, next);
                for w in inst.graph.dag.successors(v) {
                    self.remaining_preds[w] += 1;
                }
                self.count -= 1;
                self.placed[v] = None;
                self.free[a] = saved_free;
                if stop {
                    return true;
                }
            }
        }
        false
    }
}

/// Minimum-makespan placement. `upper` must be the makespan of some
/// feasible schedule (e.g. the list heuristic's). Returns the first optimal
/// schedule in the canonical search order (actions by id, then assemblers
/// by id), or `None` if the instance has no feasible schedule.
pub(crate) fn exact_placement(inst: &Instance, upper: Option<Time>) -> Option<Vec<Option<Placed>>> {
    let n = inst.len();
    let min_dur: Vec<Time> = (0..n).map(|v| inst.min_duration(v)).collect();
    let mut tail = vec![Time::ZERO; n];
    for &v in inst.topo.iter().rev() {
        let after = inst
            .graph
            .dag
            .successors(v)
            .map(|w| tail[w])
            .max()
            .unwrap_or_default();
        tail[v] = min_dur[v] + after;
    }
    let fresh = |bound: Time, find_first: bool| Search {
        inst,
        tail: tail.clone(),
        min_dur: min_dur.clone(),
        placed: vec![None; n],
        free: vec![Time::ZERO; inst.assemblers.len()],
        remaining_preds: (0..n).map(|v| inst.preds[v].len()).collect(),
        count: 0,
        bound,
        find_first,
        best: None,
    };

    // Pass 1: optimal value. Start just above the known upper bound so a
    // schedule matching it is still recorded.
    let start_bound = match upper {
        Some(u) => u + Time::from_micros(1),
        None => Time::from_micros(i64::MAX / 4),
    };
    let mut search = fresh(start_bound, false);
    search.dfs(Time::ZERO, Time::ZERO);
    search.best.as_ref()?;
    let optimum = search.bound;

    // Pass 2: first schedule in canonical order reaching the optimum.
    let mut canonical = fresh(optimum, true);
    canonical.dfs(Time::ZERO, Time::ZERO);
    canonical.best
}
