use std::collections::{BTreeSet, HashMap};

use crate::dag::Dag;
use crate::ids::ActionId;

use super::{Activity, AssemblyProcessModel, Operation, Precedence, ProcessLevel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionNode {
    pub id: String,
    pub action: ActionId,
    pub operation: String,
}

/// Precedence DAG over every action instance of a process model.
#[derive(Debug, Clone)]
pub struct ActionGraph {
    pub nodes: Vec<ActionNode>,
    pub dag: Dag,
    index: HashMap<String, usize>,
}

impl ActionGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Whether an edge between `u` and `v` stems from an operation's own
    /// action precedence.
    pub fn same_operation(&self, u: usize, v: usize) -> bool {
        self.nodes[u].operation == self.nodes[v].operation
    }

    pub fn named_edges(&self) -> Vec<(&str, &str)> {
        self.dag
            .edges()
            .map(|(u, v)| (self.nodes[u].id.as_str(), self.nodes[v].id.as_str()))
            .collect()
    }
}

#[derive(Debug, Default, Clone)]
struct Fragment {
    sources: Vec<usize>,
    sinks: Vec<usize>,
}

impl Fragment {
    fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}

#[derive(Default)]
struct Builder {
    nodes: Vec<ActionNode>,
    edges: BTreeSet<(usize, usize)>,
}

impl Builder {
    fn process(&mut self, p: &ProcessLevel) -> Fragment {
        let mut members: Vec<(&str, Fragment)> = Vec::new();
        for c in &p.child_processes {
            members.push((&c.id, self.process(c)));
        }
        for a in &p.activities {
            members.push((&a.id, self.activity(a)));
        }
        self.compose(members, &p.precedence)
    }

    fn activity(&mut self, a: &Activity) -> Fragment {
        let mut members: Vec<(&str, Fragment)> = Vec::new();
        for s in &a.sub_activities {
            members.push((&s.id, self.activity(s)));
        }
        for op in &a.operations {
            members.push((&op.id, self.operation(op)));
        }
        self.compose(members, &a.precedence)
    }

    fn operation(&mut self, op: &Operation) -> Fragment {
        let members = op
            .actions
            .iter()
            .map(|inst| {
                let node = self.nodes.len();
                self.nodes.push(ActionNode {
                    id: inst.id.clone(),
                    action: inst.action.clone(),
                    operation: op.id.clone(),
                });
                (
                    inst.id.as_str(),
                    Fragment {
                        sources: vec![node],
                        sinks: vec![node],
                    },
                )
            })
            .collect();
        self.compose(members, &op.precedence)
    }

    /// Joins member fragments: for every member edge X -> Y, each sink of X
    /// precedes each source of Y. Members without actions pass order
    /// through to their successors.
    fn compose(&mut self, members: Vec<(&str, Fragment)>, precedence: &[Precedence]) -> Fragment {
        let position: HashMap<&str, usize> = members.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); members.len()];
        for e in precedence {
            if let (Some(&u), Some(&v)) = (position.get(e.before.as_str()), position.get(e.after.as_str())) {
                succ[u].push(v);
            }
        }
        let effective = |start: usize| -> BTreeSet<usize> {
            let mut out = BTreeSet::new();
            let mut seen = BTreeSet::new();
            let mut stack = succ[start].clone();
            while let Some(v) = stack.pop() {
                if !seen.insert(v) {
                    continue;
                }
                if members[v].1.is_empty() {
                    stack.extend(succ[v].iter().copied());
                } else {
                    out.insert(v);
                }
            }
            out
        };

        let mut has_pred = vec![false; members.len()];
        let mut has_succ = vec![false; members.len()];
        for (x, (_, fx)) in members.iter().enumerate() {
            if fx.is_empty() {
                continue;
            }
            for y in effective(x) {
                has_pred[y] = true;
                has_succ[x] = true;
                for &s in &fx.sinks {
                    for &t in &members[y].1.sources {
                        self.edges.insert((s, t));
                    }
                }
            }
        }
        let mut out = Fragment::default();
        for (i, (_, f)) in members.iter().enumerate() {
            if !has_pred[i] {
                out.sources.extend(&f.sources);
            }
            if !has_succ[i] {
                out.sinks.extend(&f.sinks);
            }
        }
        out
    }
}

/// Collapses the four-level hierarchy into a DAG over action instances.
///
/// Edges are the operations' own action precedence plus, for every edge
/// X -> Y at a higher level, an edge from each sink action of X to each
/// source action of Y.
pub fn flatten_to_action_graph(model: &AssemblyProcessModel) -> ActionGraph {
    let mut b = Builder::default();
    b.process(&model.root);
    let mut dag = Dag::new(b.nodes.len());
    for (u, v) in b.edges {
        dag.add_edge(u, v);
    }
    let index = b.nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
    ActionGraph {
        nodes: b.nodes,
        dag,
        index,
    }
}
