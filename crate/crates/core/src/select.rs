//! Validation-based hyperparameter selection.
//!
//! Stage one picks the maximum depth of the plain random forest baseline on
//! the validation set. Stage two keeps that depth and picks the invariance
//! weight of the invariant forest. Both stages minimize cross-entropy
//! (classification) or MSE (regression); ties keep the earlier grid entry.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Dataset, Task};
use crate::error::{Error, Result};
use crate::forest::{fit, ForestConfig};
use crate::metrics::{cross_entropy, mse};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Pooled training data, no validation set.
    S1,
    /// Pooled training data plus a validation environment.
    S2,
    /// Training environments known, plus a validation environment.
    S3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub scenario: Scenario,
    pub lambda_grid: Vec<f64>,
    pub depth_grid: Vec<usize>,
    /// Depth used when there is nothing to select on.
    pub fixed_depth: usize,
    pub n_trees: usize,
}

impl Protocol {
    pub fn new(task: Task, scenario: Scenario) -> Self {
        let (depth_grid, fixed_depth) = match task {
            Task::Classification => (vec![5, 10, 15], 10),
            Task::Regression => (vec![10, 15, 20], 20),
        };
        let n_trees = match (task, scenario) {
            (Task::Regression, Scenario::S2 | Scenario::S3) => 10,
            _ => 50,
        };
        Protocol {
            scenario,
            lambda_grid: vec![0.0, 1.0, 5.0, 10.0],
            depth_grid,
            fixed_depth,
            n_trees,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() || self.depth_grid.is_empty() {
            return Err(Error::InvalidConfig("selection grids must be non-empty".into()));
        }
        if self.lambda_grid.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::InvalidConfig("lambda grid values must be >= 0".into()));
        }
        if self.depth_grid.contains(&0) || self.fixed_depth == 0 || self.n_trees == 0 {
            return Err(Error::InvalidConfig("depths and tree count must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub depth: usize,
    pub lambda: f64,
    pub depth_loss: f64,
    pub lambda_loss: f64,
}

/// Two-stage argmin over the grids in ascending order; the first minimum
/// wins, so ties resolve to the smaller depth and the smaller lambda.
pub fn select_by<E>(
    depth_grid: &[usize],
    lambda_grid: &[f64],
    mut depth_loss: impl FnMut(usize) -> core::result::Result<f64, E>,
    mut lambda_loss: impl FnMut(usize, f64) -> core::result::Result<f64, E>,
) -> core::result::Result<Selection, E> {
    let mut depths = depth_grid.to_vec();
    depths.sort_unstable();
    depths.dedup();
    let mut lambdas = lambda_grid.to_vec();
    lambdas.sort_unstable_by(f64::total_cmp);
    lambdas.dedup();

    let mut best_depth = (depths[0], f64::INFINITY);
    for &d in &depths {
        let loss = depth_loss(d)?;
        if loss < best_depth.1 {
            best_depth = (d, loss);
        }
    }
    let depth = best_depth.0;
    let mut best_lambda = (lambdas[0], f64::INFINITY);
    for &l in &lambdas {
        let loss = lambda_loss(depth, l)?;
        if loss < best_lambda.1 {
            best_lambda = (l, loss);
        }
    }
    Ok(Selection {
        depth,
        lambda: best_lambda.0,
        depth_loss: best_depth.1,
        lambda_loss: best_lambda.1,
    })
}

/// Validation loss of a fitted forest configuration.
pub fn validation_loss(train: &Dataset, valid: &Dataset, cfg: &ForestConfig) -> Result<f64> {
    let model = fit(train, cfg)?;
    match train.task() {
        Task::Classification => cross_entropy(&model.predict_mean(valid)?, valid.labels()),
        Task::Regression => mse(&model.predict(valid)?, valid.labels()),
    }
}

/// Picks `(depth, lambda)` on `valid`. Only `valid` is used for scoring;
/// forests are fitted on `train` with the given seed.
pub fn select_hyperparams(
    train: &Dataset,
    valid: &Dataset,
    proto: &Protocol,
    seed: u64,
) -> Result<Selection> {
    proto.validate()?;
    if proto.scenario == Scenario::S1 {
        return Err(Error::InvalidConfig(
            "scenario S1 has no validation set to select on".into(),
        ));
    }
    if valid.n_rows() == 0 {
        return Err(Error::EmptyValidation);
    }
    if valid.n_features() != train.n_features() {
        return Err(Error::DimensionMismatch {
            expected: train.n_features(),
            got: valid.n_features(),
        });
    }
    if valid.task() != train.task() {
        return Err(Error::InvalidConfig("validation task differs from training task".into()));
    }
    let task = train.task();
    select_by(
        &proto.depth_grid,
        &proto.lambda_grid,
        |depth| {
            let cfg = ForestConfig::random_forest(task, proto.n_trees, depth, seed);
            validation_loss(train, valid, &cfg)
        },
        |depth, lambda| {
            let cfg = ForestConfig::invariant(task, proto.n_trees, depth, lambda, seed);
            validation_loss(train, valid, &cfg)
        },
    )
}
