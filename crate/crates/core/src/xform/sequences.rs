use serde::{Deserialize, Serialize};

use crate::apm::AssemblyProcessModel;
use crate::dag::Dag;

/// Largest level [`count_sequences`] accepts.
pub const COUNT_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceEnumeration {
    pub level: String,
    pub sequences: Vec<Vec<String>>,
    /// Number of sequences emitted.
    pub count: u64,
    /// More sequences exist than were emitted.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SequenceError {
    #[error("UNKNOWN_LEVEL: no process `{0}` in the model")]
    UnknownLevel(String),
    #[error("LEVEL_TOO_LARGE: level `{level}` has {size} activities; at most {COUNT_CAP} can be counted")]
    LevelTooLarge { level: String, size: usize },
}

impl SequenceError {
    pub fn code(&self) -> &'static str {
        match self {
            SequenceError::UnknownLevel(_) => "UNKNOWN_LEVEL",
            SequenceError::LevelTooLarge { .. } => "LEVEL_TOO_LARGE",
        }
    }
}

/// Activities of one process level sorted by id, with the precedence among
/// them (direct, or through the level's child processes).
pub fn level_activity_order(apm: &AssemblyProcessModel, level: &str) -> Result<(Vec<String>, Dag), SequenceError> {
    let process = apm
        .root
        .find(level)
        .ok_or_else(|| SequenceError::UnknownLevel(level.to_owned()))?;
    let members = process.member_ids();
    let mut full = Dag::new(members.len());
    for p in &process.precedence {
        let pos = |id: &str| members.iter().position(|m| *m == id);
        if let (Some(u), Some(v)) = (pos(&p.before), pos(&p.after)) {
            full.add_edge(u, v);
        }
    }
    let reach = full.transitive_closure();

    let mut activities: Vec<(String, usize)> = process
        .activities
        .iter()
        .map(|a| (a.id.clone(), members.iter().position(|m| *m == a.id).expect("member")))
        .collect();
    activities.sort();
    let mut dag = Dag::new(activities.len());
    for (i, (_, mi)) in activities.iter().enumerate() {
        for (j, (_, mj)) in activities.iter().enumerate() {
            if reach[*mi][*mj] {
                dag.add_edge(i, j);
            }
        }
    }
    Ok((activities.into_iter().map(|(id, _)| id).collect(), dag))
}

/// Linear extensions of a level's activity precedence, in lexicographic
/// order of activity ids, at most `limit` of them.
pub fn enumerate_sequences(
    apm: &AssemblyProcessModel,
    level: &str,
    limit: usize,
) -> Result<SequenceEnumeration, SequenceError> {
    let (ids, dag) = level_activity_order(apm, level)?;
    let mut state = Enumerator {
        dag: &dag,
        remaining_preds: (0..dag.len()).map(|v| dag.predecessors(v).count()).collect(),
        placed: vec![false; dag.len()],
        prefix: Vec::with_capacity(dag.len()),
        out: Vec::new(),
        limit,
        truncated: false,
    };
    state.extend();
    let sequences: Vec<Vec<String>> = state
        .out
        .into_iter()
        .map(|seq| seq.into_iter().map(|i| ids[i].clone()).collect())
        .collect();
    Ok(SequenceEnumeration {
        level: level.to_owned(),
        count: sequences.len() as u64,
        sequences,
        truncated: state.truncated,
    })
}

struct Enumerator<'a> {
    dag: &'a Dag,
    remaining_preds: Vec<usize>,
    placed: Vec<bool>,
    prefix: Vec<usize>,
    out: Vec<Vec<usize>>,
    limit: usize,
    truncated: bool,
}

impl Enumerator<'_> {
    /// Returns false once the limit is hit and a further sequence exists.
    fn extend(&mut self) -> bool {
        if self.prefix.len() == self.dag.len() {
            if self.out.len() == self.limit {
                self.truncated = true;
                return false;
            }
            self.out.push(self.prefix.clone());
            return true;
        }
        for v in 0..self.dag.len() {
            if self.placed[v] || self.remaining_preds[v] > 0 {
                continue;
            }
            self.placed[v] = true;
            self.prefix.push(v);
            for w in self.dag.successors(v) {
                self.remaining_preds[w] -= 1;
            }
            let go_on = self.extend();
            for w in self.dag.successors(v) {
                self.remaining_preds[w] += 1;
            }
            self.prefix.pop();
            self.placed[v] = false;
            if !go_on {
                return false;
            }
        }
        true
    }
}

/// Exact number of linear extensions of a level, by memoized backtracking
/// over placed-activity subsets.
pub fn count_sequences(apm: &AssemblyProcessModel, level: &str) -> Result<u64, SequenceError> {
    let (ids, dag) = level_activity_order(apm, level)?;
    let n = ids.len();
    if n > COUNT_CAP {
        return Err(SequenceError::LevelTooLarge {
            level: level.to_owned(),
            size: n,
        });
    }
    let pred_mask: Vec<usize> = (0..n)
        .map(|v| dag.predecessors(v).fold(0usize, |m, u| m | (1 << u)))
        .collect();
    let mut ways = vec![0u64; 1 << n];
    ways[0] = 1;
    for mask in 0..(1usize << n) {
        let w = ways[mask];
        if w == 0 {
            continue;
        }
        for (v, &preds) in pred_mask.iter().enumerate() {
            if mask & (1 << v) == 0 && preds & !mask == 0 {
                ways[mask | (1 << v)] += w;
            }
        }
    }
    Ok(ways[(1 << n) - 1])
}
