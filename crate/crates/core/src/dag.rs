//! Minimal index-based DAG utilities used by the precedence passes.

use std::collections::BTreeSet;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dag {
    succ: Vec<BTreeSet<usize>>,
    pred: Vec<BTreeSet<usize>>,
}

impl Dag {
    pub fn new(n: usize) -> Self {
        Dag {
            succ: vec![BTreeSet::new(); n],
            pred: vec![BTreeSet::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    /// Adds `from -> to`; returns false if the edge was already present.
    pub fn add_edge(&mut self, from: usize, to: usize) -> bool {
        self.pred[to].insert(from);
        self.succ[from].insert(to)
    }

    pub fn successors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.succ[v].iter().copied()
    }

    pub fn predecessors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.pred[v].iter().copied()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from].contains(&to)
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(BTreeSet::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(u, s)| s.iter().map(move |&v| (u, v)))
    }

    pub fn sources(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.pred[v].is_empty()).collect()
    }

    pub fn sinks(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.succ[v].is_empty()).collect()
    }

    /// Kahn's algorithm, smallest index first. `Err` carries the nodes left
    /// on a cycle (or downstream of one).
    pub fn topological_order(&self) -> Result<Vec<usize>, Vec<usize>> {
        let mut indeg: Vec<usize> = self.pred.iter().map(BTreeSet::len).collect();
        let mut ready: BTreeSet<usize> = (0..self.len()).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for w in self.successors(v) {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        if order.len() == self.len() {
            Ok(order)
        } else {
            Err((0..self.len()).filter(|&v| indeg[v] > 0).collect())
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    /// Reachability matrix (`reach[u][v]` iff a non-empty path u ~> v).
    pub fn transitive_closure(&self) -> Vec<Vec<bool>> {
        let n = self.len();
        let mut reach = vec![vec![false; n]; n];
        for (u, row) in reach.iter_mut().enumerate() {
            let mut stack: Vec<usize> = self.successors(u).collect();
            while let Some(v) = stack.pop() {
                if !row[v] {
                    row[v] = true;
                    stack.extend(self.successors(v));
                }
            }
        }
        reach
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond_order_and_closure() {
        let mut d = Dag::new(4);
        d.add_edge(0, 1);
        d.add_edge(0, 2);
        d.add_edge(1, 3);
        d.add_edge(2, 3);
        assert_eq!(d.topological_order().unwrap(), vec![0, 1, 2, 3]);
        let c = d.transitive_closure();
        assert!(c[0][3]);
        assert!(!c[1][2]);
        assert_eq!(d.sources(), vec![0]);
        assert_eq!(d.sinks(), vec![3]);
    }

    #[test]
    fn cycle_detected() {
        let mut d = Dag::new(3);
        d.add_edge(0, 1);
        d.add_edge(1, 0);
        d.add_edge(1, 2);
        assert_eq!(d.topological_order().unwrap_err(), vec![0, 1, 2]);
    }
}
