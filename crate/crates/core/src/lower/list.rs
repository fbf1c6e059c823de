use std::cmp::Reverse;

use crate::time::Time;

use super::instance::{Instance, Placed};
use super::LowerError;

/// Serial list scheduling: repeatedly take the ready action with the longest
/// (fastest-assembler) duration, ties by action id, and append it to the
/// capable assembler where it can start earliest, ties by assembler id.
pub(crate) fn list_schedule(inst: &Instance) -> Result<Vec<Option<Placed>>, LowerError> {
    let n = inst.len();
    let mut placed: Vec<Option<Placed>> = vec![None; n];
    let mut free = vec![Time::ZERO; inst.assemblers.len()];
    let mut remaining: Vec<usize> = (0..n).map(|v| inst.preds[v].len()).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&v| remaining[v] == 0).collect();

    while !ready.is_empty() {
        let (pos, &v) = ready
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| (Reverse(inst.min_duration(v)), &inst.graph.nodes[v].id))
            .expect("non-empty");
        ready.swap_remove(pos);

        let mut best: Option<Placed> = None;
        for (a, d) in inst.capable(v) {
            let Some(r) = inst.ready_time(v, a, &placed) else {
                continue;
            };
            let start = r.max(free[a]);
            if best.is_none_or(|b| start < b.start) {
                best = Some(Placed {
                    assembler: a,
                    start,
                    finish: start + d,
                });
            }
        }
        let p = best.ok_or_else(|| LowerError::NoRoute {
            action: inst.graph.nodes[v].id.clone(),
        })?;
        free[p.assembler] = p.finish;
        placed[v] = Some(p);
        for w in inst.graph.dag.successors(v) {
            remaining[w] -= 1;
            if remaining[w] == 0 {
                ready.push(w);
            }
        }
    }
    Ok(placed)
}
