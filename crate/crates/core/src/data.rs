//! Dataset representation and the synthetic data-generating processes.
//!
//! A [`Dataset`] is a dense numeric feature matrix paired with a label vector
//! and an environment id per row. Features are stored column-major because
//! split search walks one column at a time.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::{Bernoulli, Distribution};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Classification,
    Regression,
}

/// Immutable feature matrix + labels + environment ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_rows: usize,
    n_features: usize,
    columns: Vec<f64>,
    labels: Vec<f64>,
    env_ids: Vec<usize>,
    n_envs: usize,
    task: Task,
}

impl Dataset {
    /// Builds a dataset from row-major feature vectors.
    pub fn from_rows(
        rows: &[Vec<f64>],
        labels: Vec<f64>,
        env_ids: Vec<usize>,
        task: Task,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let p = rows[0].len();
        let n = rows.len();
        let mut columns = vec![0.0; n * p];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                columns[j * n + i] = v;
            }
        }
        Self::build(n, p, columns, labels, env_ids, task)
    }

    /// Builds a dataset from feature columns, each of length `labels.len()`.
    pub fn from_columns(
        columns: Vec<Vec<f64>>,
        labels: Vec<f64>,
        env_ids: Vec<usize>,
        task: Task,
    ) -> Result<Self> {
        let n = labels.len();
        let p = columns.len();
        let mut flat = Vec::with_capacity(n * p);
        for col in &columns {
            if col.len() != n {
                return Err(Error::LengthMismatch {
                    left: col.len(),
                    right: n,
                });
            }
            flat.extend_from_slice(col);
        }
        Self::build(n, p, flat, labels, env_ids, task)
    }

    fn build(
        n: usize,
        p: usize,
        columns: Vec<f64>,
        labels: Vec<f64>,
        env_ids: Vec<usize>,
        task: Task,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if p == 0 {
            return Err(Error::EmptyFeatureSet);
        }
        if labels.len() != n {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: n,
            });
        }
        if env_ids.len() != n {
            return Err(Error::LengthMismatch {
                left: env_ids.len(),
                right: n,
            });
        }
        for j in 0..p {
            if let Some(i) = columns[j * n..(j + 1) * n]
                .iter()
                .position(|v| !v.is_finite())
            {
                return Err(Error::NonFinite { row: i, col: Some(j) });
            }
        }
        for (row, &value) in labels.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { row, col: None });
            }
            if task == Task::Classification && value != 0.0 && value != 1.0 {
                return Err(Error::InvalidLabel { row, value });
            }
        }
        let n_envs = env_ids.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; n_envs];
        for &e in &env_ids {
            seen[e] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::MissingEnvironment { missing });
        }
        Ok(Dataset {
            n_rows: n,
            n_features: p,
            columns,
            labels,
            env_ids,
            n_envs,
            task,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_envs(&self) -> usize {
        self.n_envs
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn env_ids(&self) -> &[usize] {
        &self.env_ids
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.n_rows..(j + 1) * self.n_rows]
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.columns[feature * self.n_rows + row]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n_features).map(|j| self.value(i, j)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows).map(|i| self.row(i)).collect()
    }

    pub fn partition(&self) -> EnvPartition {
        EnvPartition::new(&self.env_ids, self.n_envs)
    }

    /// Copies the given rows (repeats allowed) into a new dataset. Environment
    /// ids are remapped densely in order of first appearance.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        let mut remap = vec![usize::MAX; self.n_envs];
        let mut next = 0;
        let env_ids = rows
            .iter()
            .map(|&i| {
                let e = self.env_ids[i];
                if remap[e] == usize::MAX {
                    remap[e] = next;
                    next += 1;
                }
                remap[e]
            })
            .collect();
        self.gather(rows, env_ids)
    }

    /// Keeps the rows of the listed environments; `envs[k]` becomes id `k`.
    pub fn select_envs(&self, envs: &[usize]) -> Result<Dataset> {
        let mut remap = vec![usize::MAX; self.n_envs];
        for (k, &e) in envs.iter().enumerate() {
            if e >= self.n_envs {
                return Err(Error::MissingEnvironment { missing: e });
            }
            remap[e] = k;
        }
        let rows: Vec<usize> = (0..self.n_rows)
            .filter(|&i| remap[self.env_ids[i]] != usize::MAX)
            .collect();
        let env_ids = rows.iter().map(|&i| remap[self.env_ids[i]]).collect();
        self.gather(&rows, env_ids)
    }

    fn gather(&self, rows: &[usize], env_ids: Vec<usize>) -> Result<Dataset> {
        let n = rows.len();
        let mut columns = Vec::with_capacity(n * self.n_features);
        for j in 0..self.n_features {
            let col = self.column(j);
            columns.extend(rows.iter().map(|&i| col[i]));
        }
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        Self::build(n, self.n_features, columns, labels, env_ids, self.task)
    }
}

/// Row indices grouped by environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvPartition {
    groups: Vec<Vec<usize>>,
}

impl EnvPartition {
    pub fn new(env_ids: &[usize], n_envs: usize) -> Self {
        let mut groups = vec![Vec::new(); n_envs];
        for (i, &e) in env_ids.iter().enumerate() {
            groups[e].push(i);
        }
        EnvPartition { groups }
    }

    pub fn n_envs(&self) -> usize {
        self.groups.len()
    }

    pub fn rows(&self, env: usize) -> &[usize] {
        &self.groups[env]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.groups.iter().map(Vec::as_slice)
    }
}

/// Label-first binary process: a stable block whose flip rate is shared by
/// all environments and an environmental block whose flip rate varies.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGenConfig {
    pub d: usize,
    pub label_prior: f64,
    pub stable_flip: f64,
    pub env_flips: Vec<f64>,
    pub noise_std: f64,
    pub n_per_env: usize,
    pub seed: u64,
}

impl ClassGenConfig {
    pub fn new(d: usize, env_flips: Vec<f64>, n_per_env: usize, seed: u64) -> Self {
        ClassGenConfig {
            d,
            label_prior: 0.5,
            stable_flip: 0.3,
            env_flips,
            noise_std: 1.0,
            n_per_env,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if self.d == 0 {
            return Err(Error::InvalidConfig("d must be positive".into()));
        }
        if self.n_per_env == 0 {
            return Err(Error::InvalidConfig("n_per_env must be positive".into()));
        }
        if self.env_flips.is_empty() {
            return Err(Error::InvalidConfig("env_flips must be non-empty".into()));
        }
        if !open_unit(self.label_prior) || !open_unit(self.stable_flip) {
            return Err(Error::InvalidConfig(
                "label_prior and stable_flip must lie in (0, 1)".into(),
            ));
        }
        if let Some(u) = self.env_flips.iter().find(|&&u| !open_unit(u)) {
            return Err(Error::InvalidConfig(format!(
                "environment flip {u} is outside (0, 1)"
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidConfig("noise_std must be >= 0".into()));
        }
        Ok(())
    }
}

/// Linear process with a stable block and a noisy copy of the label whose
/// noise level depends on the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct RegGenConfig {
    pub d: usize,
    pub env_noise_stds: Vec<f64>,
    pub n_per_env: usize,
    pub seed: u64,
}

impl RegGenConfig {
    pub fn new(d: usize, env_noise_stds: Vec<f64>, n_per_env: usize, seed: u64) -> Self {
        RegGenConfig {
            d,
            env_noise_stds,
            n_per_env,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidConfig("d must be positive".into()));
        }
        if self.n_per_env == 0 {
            return Err(Error::InvalidConfig("n_per_env must be positive".into()));
        }
        if self.env_noise_stds.is_empty() {
            return Err(Error::InvalidConfig(
                "env_noise_stds must be non-empty".into(),
            ));
        }
        if self
            .env_noise_stds
            .iter()
            .any(|s| !(*s > 0.0 && s.is_finite()))
        {
            return Err(Error::InvalidConfig(
                "environment noise stds must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Draws `n_per_env` rows per environment. Columns `0..d` are the stable
/// block, `d..2d` the environmental block; the returned index set lists the
/// stable columns.
pub fn generate_classification(cfg: &ClassGenConfig) -> Result<(Dataset, Vec<usize>)> {
    cfg.validate()?;
    let d = cfg.d;
    let n = cfg.n_per_env * cfg.env_flips.len();
    let mut rng = seeded_rng(cfg.seed);
    let label = Bernoulli::new(cfg.label_prior).expect("validated");
    let stable = Bernoulli::new(cfg.stable_flip).expect("validated");

    let mut columns = vec![Vec::with_capacity(n); 2 * d];
    let mut labels = Vec::with_capacity(n);
    let mut env_ids = Vec::with_capacity(n);
    for (e, &u) in cfg.env_flips.iter().enumerate() {
        let env_flip = Bernoulli::new(u).expect("validated");
        for _ in 0..cfg.n_per_env {
            let y = label.sample(&mut rng);
            for (block, flip) in [(0, &stable), (d, &env_flip)] {
                for k in 0..d {
                    let c = flip.sample(&mut rng);
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let x = if y != c { 1.0 } else { 0.0 };
                    columns[block + k].push(x + cfg.noise_std * z);
                }
            }
            labels.push(if y { 1.0 } else { 0.0 });
            env_ids.push(e);
        }
    }
    let data = Dataset::from_columns(columns, labels, env_ids, Task::Classification)?;
    Ok((data, (0..d).collect()))
}

/// Draws `n_per_env` rows per environment: stable block `X1 ~ N(0, I)`,
/// `Y = sum(X1) + N(0, d)`, and each environmental column
/// `Y + N(0, sigma_e^2 d)` with independent noise per column.
pub fn generate_regression(cfg: &RegGenConfig) -> Result<(Dataset, Vec<usize>)> {
    cfg.validate()?;
    let d = cfg.d;
    let n = cfg.n_per_env * cfg.env_noise_stds.len();
    let mut rng = seeded_rng(cfg.seed);
    let label_noise = libm::sqrt(d as f64);

    let mut columns = vec![Vec::with_capacity(n); 2 * d];
    let mut labels = Vec::with_capacity(n);
    let mut env_ids = Vec::with_capacity(n);
    for (e, &sigma) in cfg.env_noise_stds.iter().enumerate() {
        let env_noise = sigma * label_noise;
        for _ in 0..cfg.n_per_env {
            let mut y = 0.0;
            for col in columns.iter_mut().take(d) {
                let x: f64 = StandardNormal.sample(&mut rng);
                col.push(x);
                y += x;
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            y += label_noise * z;
            for col in columns.iter_mut().skip(d) {
                let z: f64 = StandardNormal.sample(&mut rng);
                col.push(y + env_noise * z);
            }
            labels.push(y);
            env_ids.push(e);
        }
    }
    let data = Dataset::from_columns(columns, labels, env_ids, Task::Regression)?;
    Ok((data, (0..d).collect()))
}
