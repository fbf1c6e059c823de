//! Sanity checks of the test oracles themselves on hand-countable cases.

mod common;

use common::*;

#[test]
fn permutation_filter_counts() {
    assert_eq!(permutations(4).len(), 24);
    assert_eq!(linear_extensions(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).len(), 2);
    assert_eq!(linear_extensions(4, &[(0, 1), (2, 3)]).len(), 6);
    assert_eq!(linear_extensions(3, &[(0, 1), (1, 2), (2, 0)]).len(), 0);
}

#[test]
fn closure_of_chain() {
    let c = closure(3, &[(0, 1), (1, 2)]);
    assert!(c[0][2] && !c[2][0] && !c[0][0]);
}

fn spec(actions: Vec<(&'static str, usize)>, edges: Vec<(usize, usize)>, skills: Vec<Vec<&'static str>>, d: &[(&'static str, i64)]) -> Spec {
    let ops = actions.iter().map(|a| a.1).max().unwrap() + 1;
    let skills: Vec<std::collections::BTreeSet<&'static str>> = skills.into_iter().map(|s| s.into_iter().collect()).collect();
    let mut durations = std::collections::BTreeMap::new();
    for (j, set) in skills.iter().enumerate() {
        for s in set {
            durations.insert((*s, j), d.iter().find(|x| x.0 == *s).unwrap().1);
        }
    }
    Spec {
        actions,
        ops,
        op_edges: vec![],
        action_edges: edges,
        skills,
        durations,
        links: vec![],
    }
}

#[test]
fn brute_force_lpt_example() {
    // 3 independent actions, durations 3,2,2 on two equal assemblers: 4.
    let s = spec(
        vec![("screw", 0), ("pick", 0), ("place", 0)],
        vec![],
        vec![vec!["screw", "pick", "place"]; 2],
        &[("screw", 3), ("pick", 2), ("place", 2)],
    );
    assert_eq!(brute_force_makespan(&s), Some(4));
}

#[test]
fn brute_force_diamond() {
    let mut s = spec(
        vec![("pick", 0), ("pick", 0), ("pick", 0), ("pick", 0)],
        vec![(0, 1), (0, 2), (1, 3), (2, 3)],
        vec![vec!["pick"]; 2],
        &[("pick", 1)],
    );
    s.links = vec![(0, 1, 0), (1, 0, 0)];
    assert_eq!(brute_force_makespan(&s), Some(3));
    // Without any route the hand-overs are impossible: one assembler does all.
    s.links.clear();
    assert_eq!(brute_force_makespan(&s), Some(4));
}
