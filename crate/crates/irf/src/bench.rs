//! Synthetic out-of-distribution benchmark.
//!
//! Each cell `(task, d, seed)` draws three environments from the synthetic
//! generators, trains every method on the first two and scores it on the
//! third. Classification reports test accuracy in percent; regression
//! reports test MSE divided by the baseline method's MSE on the same seed.
//! Forest feature importances are summed over the stable and the
//! environmental column blocks.

use std::fmt::Write as _;
use std::path::Path;

use irf_core::metrics::{accuracy, mean, mse, sample_std};
use irf_core::{
    fit, generate_classification, generate_regression, ClassGenConfig, Dataset,
    FeatureSubsampling, ForestConfig, ForestModel, Protocol, RegGenConfig, Scenario, Task,
};
use rayon::prelude::*;

use crate::error::{IrfError, Result};

/// Flip rates of the environmental block in the two training environments
/// and the test environment.
pub const CLASS_ENV_FLIPS: [f64; 3] = [0.1, 0.4, 0.7];
/// Noise scales of the environmental block, same layout.
pub const REG_ENV_NOISE: [f64; 3] = [0.1, 2.0, 5.0];
pub const DEFAULT_N_PER_ENV: usize = 2000;
pub const DEFAULT_DIMS: [usize; 4] = [2, 5, 10, 20];
pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub name: String,
    pub lambda: f64,
    pub subsampling: FeatureSubsampling,
}

impl MethodSpec {
    /// Random forest baseline: no penalty, `sqrt(p)` features per node.
    pub fn random_forest() -> Self {
        MethodSpec {
            name: "RF".into(),
            lambda: 0.0,
            subsampling: FeatureSubsampling::SqrtP,
        }
    }

    pub fn invariant(lambda: f64) -> Self {
        MethodSpec {
            name: "IRF".into(),
            lambda,
            subsampling: FeatureSubsampling::None,
        }
    }

    fn forest_config(&self, task: Task, n_trees: usize, depth: usize, seed: u64) -> ForestConfig {
        ForestConfig {
            feature_subsampling: self.subsampling,
            ..ForestConfig::invariant(task, n_trees, depth, self.lambda, seed)
        }
    }
}

/// RF baseline followed by IRF at lambda 0, 1, 5 and 10.
pub fn default_methods() -> Vec<MethodSpec> {
    let mut m = vec![MethodSpec::random_forest()];
    m.extend([0.0, 1.0, 5.0, 10.0].map(MethodSpec::invariant));
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub tasks: Vec<Task>,
    pub dims: Vec<usize>,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodSpec>,
    /// Index into `methods` of the regression MSE reference.
    pub baseline: usize,
    pub n_per_env: usize,
    pub n_trees: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            tasks: vec![Task::Classification, Task::Regression],
            dims: DEFAULT_DIMS.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            methods: default_methods(),
            baseline: 0,
            n_per_env: DEFAULT_N_PER_ENV,
            n_trees: 50,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(IrfError::Core(irf_core::Error::InvalidConfig(msg.into())));
        if self.tasks.is_empty() || self.dims.is_empty() || self.seeds.is_empty() {
            return bad("tasks, dims and seeds must be non-empty");
        }
        if self.methods.is_empty() || self.baseline >= self.methods.len() {
            return bad("methods must be non-empty and contain the baseline");
        }
        if self.dims.contains(&0) || self.n_per_env == 0 || self.n_trees == 0 {
            return bad("d, n_per_env and n_trees must be positive");
        }
        Ok(())
    }
}

/// Training environments and the held-out test environment of one cell.
#[derive(Debug, Clone)]
pub struct SynthSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub stable: Vec<usize>,
}

pub fn synth_split(task: Task, d: usize, n_per_env: usize, seed: u64) -> Result<SynthSplit> {
    let (all, stable) = match task {
        Task::Classification => generate_classification(&ClassGenConfig::new(
            d,
            CLASS_ENV_FLIPS.to_vec(),
            n_per_env,
            seed,
        ))?,
        Task::Regression => generate_regression(&RegGenConfig::new(
            d,
            REG_ENV_NOISE.to_vec(),
            n_per_env,
            seed,
        ))?,
    };
    Ok(SynthSplit {
        train: all.select_envs(&[0, 1])?,
        test: all.select_envs(&[2])?,
        stable,
    })
}

/// Depth used when nothing is tuned.
pub fn fixed_depth(task: Task) -> usize {
    Protocol::new(task, Scenario::S1).fixed_depth
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    /// Accuracy in percent, or raw test MSE.
    pub metric: f64,
    pub stable_importance: f64,
    pub env_importance: f64,
}

/// Fits on `train` only, then scores on `test`.
pub fn evaluate_method(
    train: &Dataset,
    test: &Dataset,
    stable: &[usize],
    method: &MethodSpec,
    n_trees: usize,
    seed: u64,
) -> Result<(MethodOutcome, ForestModel)> {
    let task = train.task();
    let cfg = method.forest_config(task, n_trees, fixed_depth(task), seed);
    let model = fit(train, &cfg)?;
    let pred = model.predict(test)?;
    let metric = match task {
        Task::Classification => 100.0 * accuracy(&pred, test.labels())?,
        Task::Regression => mse(&pred, test.labels())?,
    };
    let importance = model.feature_importance();
    let stable_importance = stable.iter().map(|&j| importance[j]).sum();
    let env_importance = importance.iter().sum::<f64>() - stable_importance;
    Ok((
        MethodOutcome {
            metric,
            stable_importance,
            env_importance,
        },
        model,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub task: Task,
    pub d: usize,
    pub seed: u64,
    /// One outcome per configured method, in order.
    pub outcomes: Vec<MethodOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub config: BenchConfig,
    pub cells: Vec<CellResult>,
}

/// Runs every `(task, d, seed)` cell; cells run in parallel and are
/// collected in configuration order.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchRun> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &task in &cfg.tasks {
        for &d in &cfg.dims {
            for &seed in &cfg.seeds {
                jobs.push((task, d, seed));
            }
        }
    }
    let cells = jobs
        .par_iter()
        .map(|&(task, d, seed)| {
            let split = synth_split(task, d, cfg.n_per_env, seed)?;
            let outcomes = cfg
                .methods
                .par_iter()
                .map(|m| {
                    evaluate_method(&split.train, &split.test, &split.stable, m, cfg.n_trees, seed)
                        .map(|(o, _)| o)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CellResult {
                task,
                d,
                seed,
                outcomes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchRun {
        config: cfg.clone(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub task: Task,
    pub d: usize,
    pub method: String,
    pub lambda: f64,
    pub depth: usize,
    pub metric_mean: f64,
    pub metric_std: f64,
    pub n_seeds: usize,
    /// Per-seed values behind the mean, in seed order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub n_per_env: usize,
    pub n_trees: usize,
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceRow {
    pub task: Task,
    pub d: usize,
    pub method: String,
    pub lambda: f64,
    pub stable_mean: f64,
    pub stable_std: f64,
    pub env_mean: f64,
    pub env_std: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceTable {
    pub rows: Vec<ImportanceRow>,
}

impl BenchRun {
    fn cells_for(&self, task: Task, d: usize) -> Vec<&CellResult> {
        self.cells
            .iter()
            .filter(|c| c.task == task && c.d == d)
            .collect()
    }

    /// Mean and sample std over seeds of accuracy (classification) or of
    /// the MSE ratio to the baseline (regression).
    pub fn report(&self) -> BenchReport {
        let cfg = &self.config;
        let mut rows = Vec::new();
        for &task in &cfg.tasks {
            for &d in &cfg.dims {
                let cells = self.cells_for(task, d);
                for (k, m) in cfg.methods.iter().enumerate() {
                    let values: Vec<f64> = cells
                        .iter()
                        .map(|c| match task {
                            Task::Classification => c.outcomes[k].metric,
                            Task::Regression => {
                                c.outcomes[k].metric / c.outcomes[cfg.baseline].metric
                            }
                        })
                        .collect();
                    rows.push(BenchRow {
                        task,
                        d,
                        method: m.name.clone(),
                        lambda: m.lambda,
                        depth: fixed_depth(task),
                        metric_mean: mean(&values),
                        metric_std: sample_std(&values),
                        n_seeds: values.len(),
                        values,
                    });
                }
            }
        }
        BenchReport {
            n_per_env: cfg.n_per_env,
            n_trees: cfg.n_trees,
            rows,
        }
    }

    pub fn importance(&self) -> ImportanceTable {
        let cfg = &self.config;
        let mut rows = Vec::new();
        for &task in &cfg.tasks {
            for &d in &cfg.dims {
                let cells = self.cells_for(task, d);
                for (k, m) in cfg.methods.iter().enumerate() {
                    let stable: Vec<f64> =
                        cells.iter().map(|c| c.outcomes[k].stable_importance).collect();
                    let env: Vec<f64> = cells.iter().map(|c| c.outcomes[k].env_importance).collect();
                    rows.push(ImportanceRow {
                        task,
                        d,
                        method: m.name.clone(),
                        lambda: m.lambda,
                        stable_mean: mean(&stable),
                        stable_std: sample_std(&stable),
                        env_mean: mean(&env),
                        env_std: sample_std(&env),
                        n_seeds: stable.len(),
                    });
                }
            }
        }
        ImportanceTable { rows }
    }
}

pub fn run_synth_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    Ok(run_bench(cfg)?.report())
}

/// Importance sums of the invariant forest at lambda 0, 1, 5 and 10.
pub fn run_importance_bench(
    tasks: &[Task],
    dims: &[usize],
    seeds: &[u64],
    n_per_env: usize,
    n_trees: usize,
) -> Result<ImportanceTable> {
    let cfg = BenchConfig {
        tasks: tasks.to_vec(),
        dims: dims.to_vec(),
        seeds: seeds.to_vec(),
        methods: [0.0, 1.0, 5.0, 10.0].map(MethodSpec::invariant).to_vec(),
        baseline: 0,
        n_per_env,
        n_trees,
    };
    Ok(run_bench(&cfg)?.importance())
}

pub fn task_name(task: Task) -> &'static str {
    match task {
        Task::Classification => "classification",
        Task::Regression => "regression",
    }
}

impl BenchReport {
    pub fn find(&self, task: Task, d: usize, method: &str, lambda: f64) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.task == task && r.d == d && r.method == method && r.lambda == lambda)
    }

    /// Comma-separated table preceded by a `#` comment line with the run
    /// size.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# n_per_env={} n_trees={}", self.n_per_env, self.n_trees).unwrap();
        writeln!(s, "task,d,method,lambda,depth,metric_mean,metric_std,n_seeds").unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                task_name(r.task),
                r.d,
                r.method,
                r.lambda,
                r.depth,
                r.metric_mean,
                r.metric_std,
                r.n_seeds
            )
            .unwrap();
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "n_per_env={}  n_trees={}  (classification: test accuracy %, regression: MSE / RF MSE)",
            self.n_per_env, self.n_trees
        )
        .unwrap();
        writeln!(
            s,
            "{:<15}{:>4}  {:<7}{:>7}{:>7}{:>10}{:>9}{:>7}",
            "task", "d", "method", "lambda", "depth", "mean", "std", "seeds"
        )
        .unwrap();
        for r in &self.rows {
            let (mean, std) = match r.task {
                Task::Classification => (format!("{:.2}", r.metric_mean), format!("{:.2}", r.metric_std)),
                Task::Regression => (format!("{:.3}", r.metric_mean), format!("{:.3}", r.metric_std)),
            };
            writeln!(
                s,
                "{:<15}{:>4}  {:<7}{:>7}{:>7}{:>10}{:>9}{:>7}",
                task_name(r.task),
                r.d,
                r.method,
                r.lambda,
                r.depth,
                mean,
                std,
                r.n_seeds
            )
            .unwrap();
        }
        s
    }
}

impl ImportanceTable {
    pub fn find(&self, task: Task, d: usize, method: &str, lambda: f64) -> Option<&ImportanceRow> {
        self.rows
            .iter()
            .find(|r| r.task == task && r.d == d && r.method == method && r.lambda == lambda)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "task,d,method,lambda,stable_mean,stable_std,environmental_mean,environmental_std,n_seeds\n",
        );
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                task_name(r.task),
                r.d,
                r.method,
                r.lambda,
                r.stable_mean,
                r.stable_std,
                r.env_mean,
                r.env_std,
                r.n_seeds
            )
            .unwrap();
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{:<15}{:>4}  {:<7}{:>7}{:>14}{:>16}",
            "task", "d", "method", "lambda", "stable", "environmental"
        )
        .unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{:<15}{:>4}  {:<7}{:>7}{:>14}{:>16}",
                task_name(r.task),
                r.d,
                r.method,
                r.lambda,
                format!("{:.2} ({:.2})", r.stable_mean, r.stable_std),
                format!("{:.2} ({:.2})", r.env_mean, r.env_std),
            )
            .unwrap();
        }
        s
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| IrfError::io(path, e))
}
