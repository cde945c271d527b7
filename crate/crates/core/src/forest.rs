//! Invariant random forests.
//!
//! Every tree sees a bootstrap sample drawn separately inside each training
//! environment, so environment sizes are preserved exactly. Each tree owns
//! the RNG stream `(seed, tree index)`, which makes a fit independent of how
//! trees are scheduled across threads.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, Task};
use crate::error::{Error, Result};
use crate::seeded_rng;
use crate::tree::{grow_with, TreeConfig, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSubsampling {
    /// Every node scans all features.
    None,
    /// Every node scans a fresh random subset of `ceil(sqrt(p))` features.
    SqrtP,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub tree: TreeConfig,
    pub feature_subsampling: FeatureSubsampling,
    pub seed: u64,
}

impl ForestConfig {
    /// Invariant forest: all features at every node.
    pub fn invariant(task: Task, n_trees: usize, max_depth: usize, lambda: f64, seed: u64) -> Self {
        ForestConfig {
            n_trees,
            tree: TreeConfig {
                seed,
                ..TreeConfig::new(task, max_depth, lambda)
            },
            feature_subsampling: FeatureSubsampling::None,
            seed,
        }
    }

    /// Plain random forest baseline: no penalty, `sqrt(p)` features per node.
    pub fn random_forest(task: Task, n_trees: usize, max_depth: usize, seed: u64) -> Self {
        ForestConfig {
            feature_subsampling: FeatureSubsampling::SqrtP,
            ..Self::invariant(task, n_trees, max_depth, 0.0, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
        }
        self.tree.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<TreeNode>,
    task: Task,
    n_features: usize,
    config: ForestConfig,
}

impl ForestModel {
    /// Assembles a model from already grown trees.
    pub fn new(
        trees: Vec<TreeNode>,
        task: Task,
        n_features: usize,
        config: ForestConfig,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidConfig("a forest needs at least one tree".into()));
        }
        if n_features == 0 {
            return Err(Error::EmptyFeatureSet);
        }
        Ok(ForestModel {
            trees,
            task,
            n_features,
            config,
        })
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Mean of the tree outputs: the averaged class-1 probability for
    /// classification, the averaged prediction for regression.
    pub fn predict_mean_row(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut outs: Vec<f64> = self.trees.iter().map(|t| t.descend(x)).collect();
        // summing in sorted order makes the result independent of tree order
        outs.sort_unstable_by(f64::total_cmp);
        Ok(outs.iter().sum::<f64>() / outs.len() as f64)
    }

    /// Hard label (class 1 iff the mean probability exceeds 0.5) or the
    /// regression mean.
    pub fn predict_row(&self, x: &[f64]) -> Result<f64> {
        let mean = self.predict_mean_row(x)?;
        Ok(match self.task {
            Task::Classification => {
                if mean > 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Task::Regression => mean,
        })
    }

    pub fn predict_rows<X: AsRef<[f64]>>(&self, rows: &[X]) -> Result<Vec<f64>> {
        rows.iter().map(|x| self.predict_row(x.as_ref())).collect()
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.for_each_row(data, |m, x| m.predict_row(x))
    }

    pub fn predict_mean(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.for_each_row(data, |m, x| m.predict_mean_row(x))
    }

    fn for_each_row(
        &self,
        data: &Dataset,
        f: impl Fn(&Self, &[f64]) -> Result<f64>,
    ) -> Result<Vec<f64>> {
        if data.n_features() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: data.n_features(),
            });
        }
        let mut x = vec![0.0; self.n_features];
        (0..data.n_rows())
            .map(|i| {
                for (j, v) in x.iter_mut().enumerate() {
                    *v = data.value(i, j);
                }
                f(self, &x)
            })
            .collect()
    }

    /// Mean over trees of the per-tree split-frequency importance.
    pub fn feature_importance(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.n_features];
        for t in &self.trees {
            let imp = t.feature_importance(t.n_samples(), self.n_features);
            for (acc, v) in total.iter_mut().zip(imp) {
                *acc += v;
            }
        }
        let k = self.trees.len() as f64;
        total.iter_mut().for_each(|v| *v /= k);
        total
    }
}

/// RNG stream of tree `tree_index`.
pub fn tree_rng(seed: u64, tree_index: usize) -> ChaCha8Rng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(tree_index as u64);
    rng
}

/// Draws, for each environment in id order, as many rows as it holds,
/// uniformly with replacement from that environment.
pub fn bootstrap_per_env<R: Rng>(data: &Dataset, rng: &mut R) -> Vec<usize> {
    let part = data.partition();
    let mut out = Vec::with_capacity(data.n_rows());
    for rows in part.iter() {
        for _ in 0..rows.len() {
            out.push(rows[rng.random_range(0..rows.len())]);
        }
    }
    out
}

/// The bootstrap sample tree `tree_index` of a fit with `seed` trains on.
pub fn bootstrap_rows(data: &Dataset, seed: u64, tree_index: usize) -> Vec<usize> {
    bootstrap_per_env(data, &mut tree_rng(seed, tree_index))
}

fn subset_size(p: usize) -> usize {
    (libm::ceil(libm::sqrt(p as f64)) as usize).clamp(1, p)
}

fn fit_tree(data: &Dataset, cfg: &ForestConfig, t: usize) -> Result<TreeNode> {
    let mut rng = tree_rng(cfg.seed, t);
    let rows = bootstrap_per_env(data, &mut rng);
    match cfg.feature_subsampling {
        FeatureSubsampling::None => grow_with(data, &rows, &cfg.tree, None::<&mut (usize, ChaCha8Rng)>),
        FeatureSubsampling::SqrtP => {
            let mut sub = (subset_size(data.n_features()), rng);
            grow_with(data, &rows, &cfg.tree, Some(&mut sub))
        }
    }
}

pub fn fit(data: &Dataset, cfg: &ForestConfig) -> Result<ForestModel> {
    cfg.validate()?;
    if cfg.tree.task != data.task() {
        return Err(Error::InvalidConfig(
            "forest task does not match dataset task".into(),
        ));
    }

    #[cfg(feature = "parallel")]
    let trees: Result<Vec<TreeNode>> = {
        use rayon::prelude::*;
        (0..cfg.n_trees)
            .into_par_iter()
            .map(|t| fit_tree(data, cfg, t))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let trees: Result<Vec<TreeNode>> = (0..cfg.n_trees).map(|t| fit_tree(data, cfg, t)).collect();

    ForestModel::new(trees?, data.task(), data.n_features(), cfg.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_classification, ClassGenConfig};
    use crate::split::SplitCandidate;
    use alloc::boxed::Box;

    fn stump(feature: usize, lo: f64, hi: f64) -> TreeNode {
        TreeNode::Internal {
            split: SplitCandidate::new(feature, 0.0),
            left: Box::new(TreeNode::Leaf { prediction: lo, n: 1 }),
            right: Box::new(TreeNode::Leaf { prediction: hi, n: 1 }),
            n: 2,
        }
    }

    fn model(trees: Vec<TreeNode>, task: Task) -> ForestModel {
        let cfg = ForestConfig::invariant(task, trees.len(), 1, 0.0, 0);
        ForestModel::new(trees, task, 2, cfg).unwrap()
    }

    #[test]
    fn aggregation_rules() {
        let leaf = |p| TreeNode::Leaf { prediction: p, n: 1 };
        let m = model(vec![leaf(1.0), leaf(1.0)], Task::Classification);
        assert_eq!(m.predict_row(&[0.0, 0.0]).unwrap(), 1.0);
        let m = model(vec![leaf(0.6), leaf(0.4)], Task::Classification);
        assert_eq!(m.predict_mean_row(&[0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(m.predict_row(&[0.0, 0.0]).unwrap(), 0.0);
        let m = model(vec![leaf(2.0), leaf(4.0)], Task::Regression);
        assert_eq!(m.predict_row(&[0.0, 0.0]).unwrap(), 3.0);
        assert_eq!(
            m.predict_row(&[0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn importance_averages_trees() {
        let m = model(vec![stump(0, 0.0, 1.0)], Task::Classification);
        assert_eq!(m.feature_importance(), vec![1.0, 0.0]);
        let m = model(vec![stump(0, 0.0, 1.0), stump(1, 0.0, 1.0)], Task::Classification);
        assert_eq!(m.feature_importance(), vec![0.5, 0.5]);
    }

    #[test]
    fn bootstrap_preserves_env_sizes() {
        let mut cfg = ClassGenConfig::new(1, vec![0.1, 0.4, 0.2], 7, 3);
        cfg.n_per_env = 7;
        let (d, _) = generate_classification(&cfg).unwrap();
        for t in 0..10 {
            let rows = bootstrap_rows(&d, 11, t);
            let mut hist = [0usize; 3];
            for &r in &rows {
                hist[d.env_ids()[r]] += 1;
            }
            assert_eq!(hist, [7, 7, 7]);
        }
        assert_ne!(bootstrap_rows(&d, 11, 0), bootstrap_rows(&d, 11, 1));
    }

    #[test]
    fn subset_size_rounds_up() {
        assert_eq!(subset_size(1), 1);
        assert_eq!(subset_size(2), 2);
        assert_eq!(subset_size(4), 2);
        assert_eq!(subset_size(5), 3);
        assert_eq!(subset_size(40), 7);
    }

    #[test]
    fn rejects_bad_config() {
        let (d, _) = generate_classification(&ClassGenConfig::new(1, vec![0.1], 10, 0)).unwrap();
        assert!(fit(&d, &ForestConfig::invariant(Task::Classification, 0, 3, 0.0, 0)).is_err());
        assert!(fit(&d, &ForestConfig::invariant(Task::Regression, 1, 3, 0.0, 0)).is_err());
        assert!(ForestModel::new(vec![], Task::Regression, 1, ForestConfig::invariant(Task::Regression, 1, 1, 0.0, 0)).is_err());
    }
}
