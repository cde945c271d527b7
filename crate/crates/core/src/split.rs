//! Split evaluation: impurities, per-environment changing rates, invariance
//! penalties and the exhaustive search for the split minimizing
//! `G + lambda * L`.
//!
//! Classification uses the ratio of the positive and negative changing rates
//! as the per-environment invariant; the penalty is the largest pairwise
//! ratio of invariants minus one. Regression uses the shift of the label
//! mean on the left side as the invariant and its variance across
//! environments as the penalty.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Dataset, Task};
use crate::error::{Error, Result};

/// Objectives closer than this (relative to `max(1, |best|)`) are ties.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// The rule `x[feature] <= threshold` sends a row left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
}

impl SplitCandidate {
    pub fn new(feature: usize, threshold: f64) -> Self {
        SplitCandidate { feature, threshold }
    }

    #[inline]
    pub fn goes_left(&self, x: &[f64]) -> bool {
        x[self.feature] <= self.threshold
    }

    #[inline]
    fn row_goes_left(&self, data: &Dataset, row: usize) -> bool {
        data.value(row, self.feature) <= self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Impurity {
    Gini,
    Mse,
}

impl From<Task> for Impurity {
    fn from(task: Task) -> Self {
        match task {
            Task::Classification => Impurity::Gini,
            Task::Regression => Impurity::Mse,
        }
    }
}

impl Impurity {
    pub fn eval(self, labels: &[f64]) -> Result<f64> {
        match self {
            Impurity::Gini => gini(labels),
            Impurity::Mse => mse_impurity(labels),
        }
    }
}

/// The rows reaching a tree node. Rows may repeat (bootstrap samples).
#[derive(Debug, Clone, Copy)]
pub struct NodeData<'a> {
    data: &'a Dataset,
    rows: &'a [usize],
}

impl<'a> NodeData<'a> {
    pub fn new(data: &'a Dataset, rows: &'a [usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(NodeData { data, rows })
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn rows(&self) -> &'a [usize] {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The node's rows split by environment, indexed by environment id.
    pub fn env_rows(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.data.n_envs()];
        for &r in self.rows {
            out[self.data.env_ids()[r]].push(r);
        }
        out
    }

    pub fn labels(&self) -> Vec<f64> {
        let y = self.data.labels();
        self.rows.iter().map(|&r| y[r]).collect()
    }
}

/// Per-environment invariants and the resulting penalty for one split.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyReport {
    /// Indexed by environment id; `None` when the environment does not
    /// contribute at this node.
    pub invariants: Vec<Option<f64>>,
    pub penalty: f64,
}

impl PenaltyReport {
    pub fn contributing(&self) -> usize {
        self.invariants.iter().filter(|v| v.is_some()).count()
    }
}

/// A split together with the pieces of its penalized objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSplit {
    pub split: SplitCandidate,
    pub impurity: f64,
    pub penalty: f64,
    pub objective: f64,
}

pub fn gini(labels: &[f64]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptySet);
    }
    let pos = labels.iter().filter(|&&y| y == 1.0).count();
    Ok(gini_counts(labels.len() - pos, pos))
}

#[inline]
fn gini_counts(neg: usize, pos: usize) -> f64 {
    let n = (neg + pos) as f64;
    let p1 = pos as f64 / n;
    let p0 = neg as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

/// Population variance of the labels.
pub fn mse_impurity(labels: &[f64]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = labels.len() as f64;
    let mean = labels.iter().sum::<f64>() / n;
    Ok(labels.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n)
}

pub fn weighted_impurity(
    node: &NodeData<'_>,
    split: SplitCandidate,
    impurity: Impurity,
) -> Result<f64> {
    let y = node.data.labels();
    let (left, right): (Vec<f64>, Vec<f64>) = {
        let mut l = Vec::new();
        let mut r = Vec::new();
        for &row in node.rows {
            if split.row_goes_left(node.data, row) {
                l.push(y[row]);
            } else {
                r.push(y[row]);
            }
        }
        (l, r)
    };
    if left.is_empty() || right.is_empty() {
        return Err(Error::DegenerateSplit);
    }
    let n = node.len() as f64;
    Ok(left.len() as f64 / n * impurity.eval(&left)?
        + right.len() as f64 / n * impurity.eval(&right)?)
}

/// Class counts of a set of rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub neg: usize,
    pub pos: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.neg + self.pos
    }

    #[inline]
    fn add(&mut self, label: f64) {
        if label == 1.0 {
            self.pos += 1;
        } else {
            self.neg += 1;
        }
    }
}

/// Raw positive and negative changing rates `(CR1, CR0)` of a left side
/// relative to its node.
pub fn changing_rates(left: ClassCounts, node: ClassCounts) -> Result<(f64, f64)> {
    if left.total() == 0 || node.pos == 0 || node.neg == 0 {
        return Err(Error::UndefinedRate);
    }
    let nl = left.total() as f64;
    let n = node.total() as f64;
    let cr1 = (left.pos as f64 / nl) / (node.pos as f64 / n);
    let cr0 = (left.neg as f64 / nl) / (node.neg as f64 / n);
    Ok((cr1, cr0))
}

/// `CR1 / CR0` with one half-weighted dummy sample of each class added to
/// the left counts and one to the node counts. Always finite and positive.
#[inline]
pub fn smoothed_invariant(left: ClassCounts, node: ClassCounts) -> f64 {
    let cr1 = (left.pos as f64 + 0.5) / (node.pos as f64 + 1.0);
    let cr0 = (left.neg as f64 + 0.5) / (node.neg as f64 + 1.0);
    cr1 / cr0
}

fn class_counts(
    data: &Dataset,
    rows: &[usize],
    split: SplitCandidate,
) -> (ClassCounts, ClassCounts) {
    let y = data.labels();
    let mut left = ClassCounts::default();
    let mut node = ClassCounts::default();
    for &r in rows {
        node.add(y[r]);
        if split.row_goes_left(data, r) {
            left.add(y[r]);
        }
    }
    (left, node)
}

/// Raw changing rates within one environment's rows.
pub fn changing_rates_cls(
    data: &Dataset,
    env_rows: &[usize],
    split: SplitCandidate,
) -> Result<(f64, f64)> {
    let (left, node) = class_counts(data, env_rows, split);
    changing_rates(left, node)
}

/// Raw invariant `CR1 / CR0` within one environment's rows.
pub fn raw_invariant_cls(data: &Dataset, env_rows: &[usize], split: SplitCandidate) -> Result<f64> {
    let (cr1, cr0) = changing_rates_cls(data, env_rows, split)?;
    if cr0 == 0.0 {
        return Err(Error::UndefinedRate);
    }
    Ok(cr1 / cr0)
}

pub fn smoothed_invariant_cls(data: &Dataset, env_rows: &[usize], split: SplitCandidate) -> f64 {
    let (left, node) = class_counts(data, env_rows, split);
    smoothed_invariant(left, node)
}

/// `max / min - 1` over positive invariants; zero for fewer than two.
pub fn ratio_penalty(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi / lo - 1.0
}

/// Population variance; zero for fewer than two values. Values are sorted
/// first so the result does not depend on environment order.
pub fn variance_penalty(values: &mut [f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

pub fn penalty_cls(node: &NodeData<'_>, split: SplitCandidate) -> PenaltyReport {
    let invariants: Vec<Option<f64>> = node
        .env_rows()
        .iter()
        .map(|rows| (!rows.is_empty()).then(|| smoothed_invariant_cls(node.data, rows, split)))
        .collect();
    let values: Vec<f64> = invariants.iter().flatten().copied().collect();
    PenaltyReport {
        penalty: ratio_penalty(&values),
        invariants,
    }
}

/// Left-side label mean minus node label mean within one environment.
pub fn changing_rate_reg(data: &Dataset, env_rows: &[usize], split: SplitCandidate) -> Result<f64> {
    if env_rows.is_empty() {
        return Err(Error::EmptySet);
    }
    let y = data.labels();
    let (mut left_sum, mut left_n, mut sum) = (0.0, 0usize, 0.0);
    for &r in env_rows {
        sum += y[r];
        if split.row_goes_left(data, r) {
            left_sum += y[r];
            left_n += 1;
        }
    }
    if left_n == 0 {
        return Err(Error::EmptyLeft);
    }
    Ok(left_sum / left_n as f64 - sum / env_rows.len() as f64)
}

/// Environments with no rows at the node or none on the left are excluded.
pub fn penalty_reg(node: &NodeData<'_>, split: SplitCandidate) -> PenaltyReport {
    let invariants: Vec<Option<f64>> = node
        .env_rows()
        .iter()
        .map(|rows| changing_rate_reg(node.data, rows, split).ok())
        .collect();
    let mut values: Vec<f64> = invariants.iter().flatten().copied().collect();
    PenaltyReport {
        penalty: variance_penalty(&mut values),
        invariants,
    }
}

pub fn penalty(node: &NodeData<'_>, split: SplitCandidate, task: Task) -> PenaltyReport {
    match task {
        Task::Classification => penalty_cls(node, split),
        Task::Regression => penalty_reg(node, split),
    }
}

/// Threshold between two consecutive distinct values `a < b`; always
/// satisfies `a <= t < b`.
#[inline]
pub fn midpoint(a: f64, b: f64) -> f64 {
    let t = a * 0.5 + b * 0.5;
    if t < b && t >= a {
        t
    } else {
        a
    }
}

/// Best penalized split over every feature.
pub fn best_split(
    node: &NodeData<'_>,
    lambda: f64,
    task: Task,
    min_leaf: usize,
) -> Option<ScoredSplit> {
    let features: Vec<usize> = (0..node.data.n_features()).collect();
    best_split_among(node, &features, lambda, task, min_leaf)
}

/// Best penalized split over the listed features. Candidates are the
/// midpoints between consecutive distinct values of each column; both
/// pooled sides must hold at least `min_leaf` rows. Ties go to the smaller
/// feature index, then the smaller threshold, in the order `features` lists
/// them (pass them ascending).
pub fn best_split_among(
    node: &NodeData<'_>,
    features: &[usize],
    lambda: f64,
    task: Task,
    min_leaf: usize,
) -> Option<ScoredSplit> {
    let mut search = SplitSearch::new(node, lambda, task, min_leaf.max(1))?;
    let mut order = Vec::with_capacity(node.len());
    for &j in features {
        order.clear();
        order.extend_from_slice(node.rows);
        sort_by_feature(node.data, j, &mut order);
        search.scan_feature(j, &order);
    }
    search.finish()
}

/// Orders rows by the value of feature `j`, breaking ties by row index.
pub(crate) fn sort_by_feature(data: &Dataset, j: usize, rows: &mut [usize]) {
    let col = data.column(j);
    rows.sort_unstable_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
}

/// As [`best_split_among`], with `sorted[j][range]` holding the node's rows
/// already ordered by feature `j`.
pub(crate) fn best_split_presorted(
    node: &NodeData<'_>,
    sorted: &[Vec<usize>],
    range: core::ops::Range<usize>,
    features: &[usize],
    lambda: f64,
    task: Task,
    min_leaf: usize,
) -> Option<ScoredSplit> {
    let mut search = SplitSearch::new(node, lambda, task, min_leaf.max(1))?;
    for &j in features {
        search.scan_feature(j, &sorted[j][range.clone()]);
    }
    search.finish()
}

enum NodeStats {
    Cls {
        pooled: ClassCounts,
        per_env: Vec<ClassCounts>,
        left_env: Vec<ClassCounts>,
    },
    Reg {
        mean: f64,
        sum: f64,
        sumsq: f64,
        env_n: Vec<usize>,
        env_mean: Vec<f64>,
        left_env_n: Vec<usize>,
        left_env_sum: Vec<f64>,
        rates: Vec<f64>,
    },
}

struct SplitSearch<'n, 'a> {
    node: &'n NodeData<'a>,
    lambda: f64,
    task: Task,
    min_leaf: usize,
    stats: NodeStats,
    best: Option<(SplitCandidate, f64, f64)>,
    best_objective: f64,
}

impl<'n, 'a> SplitSearch<'n, 'a> {
    /// `None` when the node is pure or has constant labels.
    fn new(node: &'n NodeData<'a>, lambda: f64, task: Task, min_leaf: usize) -> Option<Self> {
        let data = node.data;
        let y = data.labels();
        let env = data.env_ids();
        let n_envs = data.n_envs();
        let stats = match task {
            Task::Classification => {
                let mut pooled = ClassCounts::default();
                let mut per_env = vec![ClassCounts::default(); n_envs];
                for &r in node.rows {
                    pooled.add(y[r]);
                    per_env[env[r]].add(y[r]);
                }
                if pooled.pos == 0 || pooled.neg == 0 {
                    return None;
                }
                NodeStats::Cls {
                    pooled,
                    per_env,
                    left_env: vec![ClassCounts::default(); n_envs],
                }
            }
            Task::Regression => {
                let first = y[node.rows[0]];
                if node.rows.iter().all(|&r| y[r] == first) {
                    return None;
                }
                let n = node.len() as f64;
                let mean = node.rows.iter().map(|&r| y[r]).sum::<f64>() / n;
                let mut env_n = vec![0usize; n_envs];
                let mut env_sum = vec![0.0; n_envs];
                let (mut sum, mut sumsq) = (0.0, 0.0);
                for &r in node.rows {
                    let c = y[r] - mean;
                    sum += c;
                    sumsq += c * c;
                    env_n[env[r]] += 1;
                    env_sum[env[r]] += y[r];
                }
                let env_mean = env_sum
                    .iter()
                    .zip(&env_n)
                    .map(|(&s, &k)| if k > 0 { s / k as f64 } else { 0.0 })
                    .collect();
                NodeStats::Reg {
                    mean,
                    sum,
                    sumsq,
                    env_n,
                    env_mean,
                    left_env_n: vec![0; n_envs],
                    left_env_sum: vec![0.0; n_envs],
                    rates: Vec::with_capacity(n_envs),
                }
            }
        };
        Some(SplitSearch {
            node,
            lambda,
            task,
            min_leaf,
            stats,
            best: None,
            best_objective: f64::INFINITY,
        })
    }

    fn finish(self) -> Option<ScoredSplit> {
        let (split, impurity, penalty_value) = self.best?;
        let penalty_value = if self.lambda == 0.0 {
            penalty(self.node, split, self.task).penalty
        } else {
            penalty_value
        };
        Some(ScoredSplit {
            split,
            impurity,
            penalty: penalty_value,
            objective: impurity + self.lambda * penalty_value,
        })
    }

    /// `order` holds the node's rows sorted by the feature's value.
    fn scan_feature(&mut self, feature: usize, order: &[usize]) {
        let data = self.node.data;
        let col = data.column(feature);
        let y = data.labels();
        let env = data.env_ids();
        let n = self.node.len();
        debug_assert_eq!(order.len(), n);
        if n < 2 * self.min_leaf {
            return;
        }
        if col[order[0]] == col[order[n - 1]] {
            return;
        }
        let with_penalty = self.lambda != 0.0;
        let nf = n as f64;

        match &mut self.stats {
            NodeStats::Cls {
                pooled,
                per_env,
                left_env,
            } => {
                left_env.iter_mut().for_each(|c| *c = ClassCounts::default());
                let mut left = ClassCounts::default();
                for k in 0..n - 1 {
                    let r = order[k];
                    let v = col[r];
                    left.add(y[r]);
                    left_env[env[r]].add(y[r]);
                    let next = col[order[k + 1]];
                    let nl = k + 1;
                    if v == next || nl < self.min_leaf || n - nl < self.min_leaf {
                        continue;
                    }
                    let right = ClassCounts {
                        neg: pooled.neg - left.neg,
                        pos: pooled.pos - left.pos,
                    };
                    let impurity = nl as f64 / nf * gini_counts(left.neg, left.pos)
                        + (n - nl) as f64 / nf * gini_counts(right.neg, right.pos);
                    let pen = if with_penalty {
                        let (mut lo, mut hi, mut k_env) = (f64::INFINITY, 0.0f64, 0);
                        for (l, t) in left_env.iter().zip(per_env.iter()) {
                            if t.total() > 0 {
                                let inv = smoothed_invariant(*l, *t);
                                lo = lo.min(inv);
                                hi = hi.max(inv);
                                k_env += 1;
                            }
                        }
                        if k_env < 2 {
                            0.0
                        } else {
                            hi / lo - 1.0
                        }
                    } else {
                        0.0
                    };
                    let c = midpoint(v, next);
                    offer(
                        &mut self.best,
                        &mut self.best_objective,
                        self.lambda,
                        SplitCandidate::new(feature, c),
                        impurity,
                        pen,
                    );
                }
            }
            NodeStats::Reg {
                mean,
                sum,
                sumsq,
                env_n,
                env_mean,
                left_env_n,
                left_env_sum,
                rates,
            } => {
                left_env_n.iter_mut().for_each(|c| *c = 0);
                left_env_sum.iter_mut().for_each(|s| *s = 0.0);
                let (mut ls, mut lss) = (0.0, 0.0);
                for k in 0..n - 1 {
                    let r = order[k];
                    let v = col[r];
                    let c = y[r] - *mean;
                    ls += c;
                    lss += c * c;
                    left_env_n[env[r]] += 1;
                    left_env_sum[env[r]] += y[r];
                    let next = col[order[k + 1]];
                    let nl = k + 1;
                    if v == next || nl < self.min_leaf || n - nl < self.min_leaf {
                        continue;
                    }
                    let nr = n - nl;
                    let rs = *sum - ls;
                    let rss = *sumsq - lss;
                    let sse_l = lss - ls * ls / nl as f64;
                    let sse_r = rss - rs * rs / nr as f64;
                    let impurity = ((sse_l + sse_r) / nf).max(0.0);
                    let pen = if with_penalty {
                        rates.clear();
                        for e in 0..env_n.len() {
                            if env_n[e] > 0 && left_env_n[e] > 0 {
                                rates.push(left_env_sum[e] / left_env_n[e] as f64 - env_mean[e]);
                            }
                        }
                        variance_penalty(rates)
                    } else {
                        0.0
                    };
                    let c = midpoint(v, next);
                    offer(
                        &mut self.best,
                        &mut self.best_objective,
                        self.lambda,
                        SplitCandidate::new(feature, c),
                        impurity,
                        pen,
                    );
                }
            }
        }
    }
}

#[inline]
fn offer(
    best: &mut Option<(SplitCandidate, f64, f64)>,
    best_objective: &mut f64,
    lambda: f64,
    split: SplitCandidate,
    impurity: f64,
    penalty: f64,
) {
    let objective = if lambda == 0.0 {
        impurity
    } else {
        impurity + lambda * penalty
    };
    let margin = TIE_TOLERANCE * best_objective.abs().max(1.0);
    if best.is_none() || objective < *best_objective - margin {
        *best = Some((split, impurity, penalty));
        *best_objective = objective;
    }
}
