//! Invariant decision trees: recursive penalized splitting, prediction and
//! split-frequency feature importance.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use crate::data::{Dataset, Task};
use crate::error::{Error, Result};
use crate::split::{best_split_presorted, sort_by_feature, NodeData, SplitCandidate};

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        split: SplitCandidate,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
        n: usize,
    },
    /// `prediction` is the class-1 fraction for classification and the label
    /// mean for regression.
    Leaf { prediction: f64, n: usize },
}

impl TreeNode {
    pub fn n_samples(&self) -> usize {
        match self {
            TreeNode::Internal { n, .. } | TreeNode::Leaf { n, .. } => *n,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    /// Descends to a leaf; rows with `x[j] <= c` go left.
    pub fn predict_one(&self, x: &[f64], n_features: usize) -> Result<f64> {
        if x.len() != n_features {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                got: x.len(),
            });
        }
        Ok(self.descend(x))
    }

    pub(crate) fn descend(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return *prediction,
                TreeNode::Internal {
                    split, left, right, ..
                } => node = if split.goes_left(x) { left } else { right },
            }
        }
    }

    /// Sum of `n_m / n_total` over the internal nodes splitting on each
    /// feature.
    pub fn feature_importance(&self, n_total: usize, n_features: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_features];
        self.accumulate_importance(n_total as f64, &mut out);
        out
    }

    fn accumulate_importance(&self, n_total: f64, out: &mut [f64]) {
        if let TreeNode::Internal {
            split, left, right, n,
        } = self
        {
            out[split.feature] += *n as f64 / n_total;
            left.accumulate_importance(n_total, out);
            right.accumulate_importance(n_total, out);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    /// The root sits at depth 0; nodes at `max_depth` become leaves.
    pub max_depth: usize,
    pub lambda: f64,
    pub min_leaf: usize,
    pub task: Task,
    /// Not used by growth; forests copy their seed here.
    pub seed: u64,
}

impl TreeConfig {
    pub fn new(task: Task, max_depth: usize, lambda: f64) -> Self {
        TreeConfig {
            max_depth,
            lambda,
            min_leaf: 1,
            task,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidConfig("max_depth must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig("lambda must be finite and >= 0".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidConfig("min_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

/// Grows a tree on `rows` of `data` (repeats allowed).
pub fn grow(data: &Dataset, rows: &[usize], cfg: &TreeConfig) -> Result<TreeNode> {
    grow_with(data, rows, cfg, None::<&mut (usize, rand_chacha::ChaCha8Rng)>)
}

/// As [`grow`], optionally scanning a fresh random subset of `k` features at
/// every node.
pub(crate) fn grow_with<R: Rng>(
    data: &Dataset,
    rows: &[usize],
    cfg: &TreeConfig,
    subsample: Option<&mut (usize, R)>,
) -> Result<TreeNode> {
    cfg.validate()?;
    if cfg.task != data.task() {
        return Err(Error::InvalidConfig(
            "tree task does not match dataset task".into(),
        ));
    }
    NodeData::new(data, rows)?;
    let sorted = (0..data.n_features())
        .map(|j| {
            let mut order = rows.to_vec();
            sort_by_feature(data, j, &mut order);
            order
        })
        .collect();
    let mut grower = Grower {
        data,
        cfg,
        subsample,
        all_features: (0..data.n_features()).collect(),
        rows: rows.to_vec(),
        sorted,
        spill: Vec::with_capacity(rows.len()),
    };
    Ok(grower.grow(0, rows.len(), 0))
}

/// Each node owns the range `lo..hi` of `rows` and of every list in
/// `sorted`, where `sorted[j]` is ordered by feature `j`. Columns are sorted
/// once per tree and stably partitioned in place on the way down.
struct Grower<'a, 's, R> {
    data: &'a Dataset,
    cfg: &'a TreeConfig,
    subsample: Option<&'s mut (usize, R)>,
    all_features: Vec<usize>,
    rows: Vec<usize>,
    sorted: Vec<Vec<usize>>,
    spill: Vec<usize>,
}

impl<R: Rng> Grower<'_, '_, R> {
    fn grow(&mut self, lo: usize, hi: usize, depth: usize) -> TreeNode {
        let rows = &self.rows[lo..hi];
        let leaf = || TreeNode::Leaf {
            prediction: leaf_value(self.data, rows),
            n: rows.len(),
        };
        if depth >= self.cfg.max_depth {
            return leaf();
        }
        let sampled;
        let features = match self.subsample.as_deref_mut() {
            None => &self.all_features,
            Some((k, rng)) => {
                let mut f = index::sample(rng, self.all_features.len(), *k).into_vec();
                f.sort_unstable();
                sampled = f;
                &sampled
            }
        };
        let node = NodeData::new(self.data, rows).expect("non-empty by construction");
        let best = best_split_presorted(
            &node,
            &self.sorted,
            lo..hi,
            features,
            self.cfg.lambda,
            self.cfg.task,
            self.cfg.min_leaf,
        );
        let Some(best) = best else {
            return leaf();
        };
        let split = best.split;
        let col = self.data.column(split.feature);
        let goes_left = |r: usize| col[r] <= split.threshold;
        let mid = stable_partition(&mut self.rows[lo..hi], &mut self.spill, goes_left);
        for order in &mut self.sorted {
            stable_partition(&mut order[lo..hi], &mut self.spill, goes_left);
        }
        TreeNode::Internal {
            split,
            left: Box::new(self.grow(lo, lo + mid, depth + 1)),
            right: Box::new(self.grow(lo + mid, hi, depth + 1)),
            n: hi - lo,
        }
    }
}

/// Moves the items matching `goes_left` to the front, keeping relative order
/// on both sides. Returns how many went left.
fn stable_partition(
    items: &mut [usize],
    spill: &mut Vec<usize>,
    goes_left: impl Fn(usize) -> bool,
) -> usize {
    spill.clear();
    let mut k = 0;
    for i in 0..items.len() {
        let r = items[i];
        if goes_left(r) {
            items[k] = r;
            k += 1;
        } else {
            spill.push(r);
        }
    }
    items[k..].copy_from_slice(spill);
    k
}

/// Pooled positive fraction or label mean.
fn leaf_value(data: &Dataset, rows: &[usize]) -> f64 {
    let y = data.labels();
    rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64
}
