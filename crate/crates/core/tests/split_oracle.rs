mod common;

use common::{close, oracle_best_split, random_dataset, reference_cart, RefTree};
use irf_core::{best_split, grow, seeded_rng, NodeData, Task, TreeConfig, TreeNode};
use rand::Rng;

fn check_against_oracle(task: Task, lambda: f64, seed: u64) {
    let mut rng = seeded_rng(seed);
    let mut compared = 0;
    for case in 0..200 {
        let n_envs = rng.random_range(1..=3);
        let data = random_dataset(&mut rng, task, n_envs);
        let rows: Vec<usize> = if rng.random_bool(0.5) {
            (0..data.n_rows()).collect()
        } else {
            (0..data.n_rows())
                .map(|_| rng.random_range(0..data.n_rows()))
                .collect()
        };
        let node = NodeData::new(&data, &rows).unwrap();
        let got = best_split(&node, lambda, task, 1);
        let want = oracle_best_split(&data, &rows, lambda, task);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some(w)) => {
                compared += 1;
                assert_eq!(g.split.feature, w.feature, "case {case}: {g:?} vs {w:?}");
                assert!(close(g.split.threshold, w.threshold, 1e-12), "case {case}");
                assert!(close(g.impurity, w.impurity, 1e-9), "case {case}");
                assert!(close(g.penalty, w.penalty, 1e-9), "case {case}");
                assert!(close(g.objective, w.objective, 1e-9), "case {case}");
            }
            (g, w) => panic!("case {case}: crate {g:?}, oracle {w:?}"),
        }
    }
    assert!(compared >= 150, "only {compared} non-trivial cases");
}

#[test]
fn unpenalized_classification_matches_exhaustive_search() {
    check_against_oracle(Task::Classification, 0.0, 1);
}

#[test]
fn unpenalized_regression_matches_exhaustive_search() {
    check_against_oracle(Task::Regression, 0.0, 2);
}

#[test]
fn penalized_classification_matches_exhaustive_search() {
    check_against_oracle(Task::Classification, 1.0, 3);
    check_against_oracle(Task::Classification, 10.0, 4);
}

#[test]
fn penalized_regression_matches_exhaustive_search() {
    check_against_oracle(Task::Regression, 1.0, 5);
    check_against_oracle(Task::Regression, 10.0, 6);
}

fn same_tree(got: &TreeNode, want: &RefTree) -> bool {
    match (got, want) {
        (TreeNode::Leaf { prediction, n }, RefTree::Leaf(p, m)) => n == m && close(*prediction, *p, 1e-12),
        (
            TreeNode::Internal {
                split, left, right, n,
            },
            RefTree::Split(j, c, m, l, r),
        ) => {
            split.feature == *j
                && close(split.threshold, *c, 1e-12)
                && n == m
                && same_tree(left, l)
                && same_tree(right, r)
        }
        _ => false,
    }
}

#[test]
fn single_environment_tree_matches_reference_cart() {
    let mut rng = seeded_rng(7);
    for case in 0..200 {
        let task = if case % 2 == 0 {
            Task::Classification
        } else {
            Task::Regression
        };
        let data = random_dataset(&mut rng, task, 1);
        let rows: Vec<usize> = (0..data.n_rows()).collect();
        let max_depth = rng.random_range(1..=6);
        let tree = grow(&data, &rows, &TreeConfig::new(task, max_depth, 0.0)).unwrap();
        let reference = reference_cart(&data, &rows, 0, max_depth, task);
        assert!(same_tree(&tree, &reference), "case {case}: {tree:?} vs {reference:?}");
    }
}

#[test]
fn deep_tree_fits_conflict_free_training_data() {
    let mut rng = seeded_rng(8);
    for _ in 0..50 {
        let data = random_dataset(&mut rng, Task::Classification, 2);
        // drop rows whose feature vector repeats with a different label
        let rows: Vec<usize> = (0..data.n_rows())
            .filter(|&i| {
                (0..data.n_rows()).all(|k| data.row(k) != data.row(i) || data.labels()[k] == data.labels()[i])
            })
            .collect();
        if rows.is_empty() {
            continue;
        }
        let tree = grow(&data, &rows, &TreeConfig::new(Task::Classification, 64, 0.0)).unwrap();
        for &r in &rows {
            let p = tree.predict_one(&data.row(r), data.n_features()).unwrap();
            assert_eq!(p, data.labels()[r]);
        }
    }
}
