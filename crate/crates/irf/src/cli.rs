//! Command-line front end.
//!
//! Exit codes: 0 success, 1 data or model error, 2 usage error. Results go
//! to standard output as `key=value` lines (or `index,value` lines for
//! `importance`); diagnostics go to standard error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use irf_core::metrics::{accuracy, mse};
use irf_core::{fit, select_hyperparams, ForestConfig, Protocol, Scenario, Task};

use crate::bench::{self, BenchConfig};
use crate::csv_io::{load_csv, load_feature_rows};
use crate::error::{IrfError, Result};
use crate::model_file::{load_model, save_model, SavedModel};

#[derive(Debug, Parser)]
#[command(name = "irf", version, about = "Invariant decision trees and random forests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Cls,
    Reg,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Cls => Task::Classification,
            TaskArg::Reg => Task::Regression,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a forest on a CSV file and write the model.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        label: String,
        #[arg(long)]
        env: String,
        #[arg(long, value_enum)]
        task: TaskArg,
        /// Invariance penalty weight (>= 0). Selected on --valid when omitted.
        #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// Maximum depth. Selected on --valid, or the task default, when omitted.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        depth: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trees: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Validation CSV with the same columns; enables hyperparameter selection.
        #[arg(long)]
        valid: Option<PathBuf>,
    },
    /// Write one prediction per row of a CSV file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print per-feature importance, largest first.
    Importance {
        #[arg(long)]
        model: PathBuf,
    },
    /// Run the synthetic out-of-distribution benchmark.
    SynthBench {
        /// Omit to run both tasks.
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
        #[arg(long, value_parser = parse_dims, default_value = "2,5,10,20")]
        dims: ::std::vec::Vec<usize>,
        #[arg(long, value_parser = parse_seeds, default_value = "0,1,2,3,4")]
        seeds: ::std::vec::Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the stable/environmental importance table here.
        #[arg(long)]
        importance_out: Option<PathBuf>,
        #[arg(long, default_value_t = bench::DEFAULT_N_PER_ENV, value_parser = parse_positive)]
        n_per_env: usize,
        #[arg(long, default_value_t = 50, value_parser = parse_positive)]
        trees: usize,
    },
}

fn parse_lambda(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err("lambda must be a finite value >= 0".into());
    }
    Ok(v)
}

fn parse_positive(s: &str) -> std::result::Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("{s:?} is not a positive integer")),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Err("list is empty".into());
    }
    s.split(',')
        .map(|item| {
            item.trim()
                .parse::<T>()
                .map_err(|_| format!("{item:?} is not a valid entry"))
        })
        .collect()
}

fn parse_dims(s: &str) -> std::result::Result<Vec<usize>, String> {
    let dims: Vec<usize> = parse_list(s)?;
    if dims.contains(&0) {
        return Err("dimensions must be positive".into());
    }
    Ok(dims)
}

fn parse_seeds(s: &str) -> std::result::Result<Vec<u64>, String> {
    parse_list(s)
}

/// Runs a parsed invocation, returning what to print on success.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Train {
            data,
            label,
            env,
            task,
            lambda,
            depth,
            trees,
            seed,
            out,
            valid,
        } => {
            if valid.is_none() && lambda.is_none() {
                Cli::command()
                    .error(
                        clap::error::ErrorKind::MissingRequiredArgument,
                        "--lambda is required unless --valid is given",
                    )
                    .exit();
            }
            train(TrainArgs {
                data,
                label,
                env,
                task: task.into(),
                lambda,
                depth: depth.map(|d| d as usize),
                trees: trees.map(|t| t as usize),
                seed,
                out,
                valid,
            })
        }
        Command::Predict { model, data, out } => predict(&model, &data, &out),
        Command::Importance { model } => importance(&model),
        Command::SynthBench {
            task,
            dims,
            seeds,
            out,
            importance_out,
            n_per_env,
            trees,
        } => {
            let cfg = BenchConfig {
                tasks: match task {
                    Some(t) => vec![t.into()],
                    None => vec![Task::Classification, Task::Regression],
                },
                dims,
                seeds,
                n_per_env,
                n_trees: trees,
                ..BenchConfig::default()
            };
            let run = bench::run_bench(&cfg)?;
            let report = run.report();
            bench::write_text(&out, &report.to_csv())?;
            let mut text = report.to_text();
            if let Some(path) = importance_out {
                let table = run.importance();
                bench::write_text(&path, &table.to_csv())?;
                text.push('\n');
                text.push_str(&table.to_text());
            }
            Ok(text)
        }
    }
}

struct TrainArgs {
    data: PathBuf,
    label: String,
    env: String,
    task: Task,
    lambda: Option<f64>,
    depth: Option<usize>,
    trees: Option<usize>,
    seed: u64,
    out: PathBuf,
    valid: Option<PathBuf>,
}

fn train(args: TrainArgs) -> Result<String> {
    let task = args.task;
    let train = load_csv(&args.data, &args.label, &args.env, task)?;
    let mut out = String::new();
    let (depth, lambda, n_trees) = match &args.valid {
        Some(valid_path) => {
            let valid = load_csv(valid_path, &args.label, &args.env, task)?;
            if valid.feature_names != train.feature_names {
                return Err(IrfError::FeatureMismatch {
                    expected: train.feature_names.len(),
                    got: valid
                        .feature_names
                        .iter()
                        .filter(|n| train.feature_names.contains(n))
                        .count(),
                });
            }
            let mut proto = Protocol::new(task, Scenario::S3);
            if let Some(d) = args.depth {
                proto.depth_grid = vec![d];
            }
            if let Some(l) = args.lambda {
                proto.lambda_grid = vec![l];
            }
            if let Some(t) = args.trees {
                proto.n_trees = t;
            }
            let sel = select_hyperparams(&train.dataset, &valid.dataset, &proto, args.seed)?;
            writeln!(out, "validation_loss={}", sel.lambda_loss).unwrap();
            (sel.depth, sel.lambda, proto.n_trees)
        }
        None => (
            args.depth.unwrap_or_else(|| bench::fixed_depth(task)),
            args.lambda.expect("checked by the caller"),
            args.trees.unwrap_or(50),
        ),
    };
    let cfg = ForestConfig::invariant(task, n_trees, depth, lambda, args.seed);
    let model = fit(&train.dataset, &cfg)?;
    let pred = model.predict(&train.dataset)?;
    let (metric_name, metric) = match task {
        Task::Classification => ("train_accuracy", accuracy(&pred, train.dataset.labels())?),
        Task::Regression => ("train_mse", mse(&pred, train.dataset.labels())?),
    };
    save_model(
        &SavedModel {
            model,
            feature_names: train.feature_names,
            label: Some(args.label),
        },
        &args.out,
    )?;
    writeln!(out, "task={}", bench::task_name(task)).unwrap();
    writeln!(out, "depth={depth}").unwrap();
    writeln!(out, "lambda={lambda}").unwrap();
    writeln!(out, "trees={n_trees}").unwrap();
    writeln!(out, "seed={}", args.seed).unwrap();
    writeln!(out, "{metric_name}={metric}").unwrap();
    Ok(out)
}

fn predict(model_path: &Path, data: &Path, out_path: &Path) -> Result<String> {
    let saved = load_model(model_path)?;
    let (rows, labels) = load_feature_rows(data, &saved.feature_names, saved.label.as_deref())?;
    let pred = saved.model.predict_rows(&rows)?;
    let mut csv = String::from("prediction\n");
    for p in &pred {
        writeln!(csv, "{p}").unwrap();
    }
    bench::write_text(out_path, &csv)?;
    let mut out = format!("rows={}\n", pred.len());
    if let Some(y) = labels {
        match saved.model.task() {
            Task::Classification => writeln!(out, "accuracy={}", accuracy(&pred, &y)?),
            Task::Regression => writeln!(out, "mse={}", mse(&pred, &y)?),
        }
        .unwrap();
    }
    Ok(out)
}

fn importance(model_path: &PathBuf) -> Result<String> {
    let saved = load_model(model_path)?;
    let imp = saved.model.feature_importance();
    let mut order: Vec<usize> = (0..imp.len()).collect();
    order.sort_by(|&a, &b| imp[b].total_cmp(&imp[a]).then(a.cmp(&b)));
    let mut out = String::new();
    for j in order {
        writeln!(out, "{j},{}", imp[j]).unwrap();
    }
    Ok(out)
}
