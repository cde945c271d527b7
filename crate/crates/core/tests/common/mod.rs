//! Naive reference implementations used as test oracles. They favour
//! directness over speed: every candidate split is materialized and scored
//! from scratch.

#![allow(dead_code)]

use irf_core::{Dataset, Task};
use rand::Rng;

pub const TIE: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct OracleSplit {
    pub feature: usize,
    pub threshold: f64,
    pub impurity: f64,
    pub penalty: f64,
    pub objective: f64,
}

fn impurity(labels: &[f64], task: Task) -> f64 {
    let n = labels.len() as f64;
    match task {
        Task::Classification => {
            let p = labels.iter().filter(|&&y| y == 1.0).count() as f64 / n;
            1.0 - p * p - (1.0 - p) * (1.0 - p)
        }
        Task::Regression => {
            let m = labels.iter().sum::<f64>() / n;
            labels.iter().map(|y| (y - m).powi(2)).sum::<f64>() / n
        }
    }
}

fn side(data: &Dataset, rows: &[usize], j: usize, c: f64, left: bool) -> Vec<usize> {
    rows.iter()
        .copied()
        .filter(|&r| (data.value(r, j) <= c) == left)
        .collect()
}

fn labels_of(data: &Dataset, rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&r| data.labels()[r]).collect()
}

/// Per-environment penalty computed straight from the definitions.
pub fn oracle_penalty(data: &Dataset, rows: &[usize], j: usize, c: f64, task: Task) -> f64 {
    let mut values = Vec::new();
    for e in 0..data.n_envs() {
        let node: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&r| data.env_ids()[r] == e)
            .collect();
        if node.is_empty() {
            continue;
        }
        let left = side(data, &node, j, c, true);
        match task {
            Task::Classification => {
                let count = |rs: &[usize], cls: f64| {
                    rs.iter().filter(|&&r| data.labels()[r] == cls).count() as f64
                };
                let cr1 = (count(&left, 1.0) + 0.5) / (count(&node, 1.0) + 1.0);
                let cr0 = (count(&left, 0.0) + 0.5) / (count(&node, 0.0) + 1.0);
                values.push(cr1 / cr0);
            }
            Task::Regression => {
                if left.is_empty() {
                    continue;
                }
                let mean = |rs: &[usize]| labels_of(data, rs).iter().sum::<f64>() / rs.len() as f64;
                values.push(mean(&left) - mean(&node));
            }
        }
    }
    if values.len() < 2 {
        return 0.0;
    }
    match task {
        Task::Classification => {
            let hi = values.iter().cloned().fold(f64::MIN, f64::max);
            let lo = values.iter().cloned().fold(f64::MAX, f64::min);
            hi / lo - 1.0
        }
        Task::Regression => {
            let m = values.iter().sum::<f64>() / values.len() as f64;
            values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64
        }
    }
}

/// Exhaustive search over every midpoint of every feature.
pub fn oracle_best_split(data: &Dataset, rows: &[usize], lambda: f64, task: Task) -> Option<OracleSplit> {
    let y = labels_of(data, rows);
    if y.iter().all(|&v| v == y[0]) {
        return None;
    }
    let n = rows.len() as f64;
    let mut best: Option<OracleSplit> = None;
    for j in 0..data.n_features() {
        let mut vals: Vec<f64> = rows.iter().map(|&r| data.value(r, j)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let c = (w[0] + w[1]) / 2.0;
            let left = side(data, rows, j, c, true);
            let right = side(data, rows, j, c, false);
            let g = left.len() as f64 / n * impurity(&labels_of(data, &left), task)
                + right.len() as f64 / n * impurity(&labels_of(data, &right), task);
            let pen = oracle_penalty(data, rows, j, c, task);
            let obj = g + lambda * pen;
            let better = match best {
                None => true,
                Some(b) => obj < b.objective - TIE * b.objective.abs().max(1.0),
            };
            if better {
                best = Some(OracleSplit {
                    feature: j,
                    threshold: c,
                    impurity: g,
                    penalty: pen,
                    objective: obj,
                });
            }
        }
    }
    best
}

/// Minimal CART tree, written independently of the crate's tree module.
#[derive(Debug, Clone)]
pub enum RefTree {
    Leaf(f64, usize),
    Split(usize, f64, usize, Box<RefTree>, Box<RefTree>),
}

pub fn reference_cart(data: &Dataset, rows: &[usize], depth: usize, max_depth: usize, task: Task) -> RefTree {
    let y = labels_of(data, rows);
    let leaf = RefTree::Leaf(y.iter().sum::<f64>() / y.len() as f64, rows.len());
    if depth >= max_depth {
        return leaf;
    }
    match oracle_best_split(data, rows, 0.0, task) {
        None => leaf,
        Some(s) => {
            let l = side(data, rows, s.feature, s.threshold, true);
            let r = side(data, rows, s.feature, s.threshold, false);
            RefTree::Split(
                s.feature,
                s.threshold,
                rows.len(),
                Box::new(reference_cart(data, &l, depth + 1, max_depth, task)),
                Box::new(reference_cart(data, &r, depth + 1, max_depth, task)),
            )
        }
    }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// A small random dataset. Feature values come from a coarse grid half the
/// time so that repeated values and tied objectives are common.
pub fn random_dataset<R: Rng>(rng: &mut R, task: Task, n_envs: usize) -> Dataset {
    let n = rng.random_range(n_envs.max(2)..=40);
    let p = rng.random_range(1..=4);
    let coarse = rng.random_bool(0.5);
    let columns: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            (0..n)
                .map(|_| {
                    if coarse {
                        rng.random_range(0..5) as f64
                    } else {
                        rng.random_range(-3.0..3.0)
                    }
                })
                .collect()
        })
        .collect();
    let labels: Vec<f64> = (0..n)
        .map(|_| match task {
            Task::Classification => rng.random_range(0..2) as f64,
            Task::Regression => {
                if coarse {
                    rng.random_range(0..4) as f64
                } else {
                    rng.random_range(-5.0..5.0)
                }
            }
        })
        .collect();
    let env_ids: Vec<usize> = (0..n)
        .map(|i| if i < n_envs { i } else { rng.random_range(0..n_envs) })
        .collect();
    Dataset::from_columns(columns, labels, env_ids, task).unwrap()
}
