//! JSON model files.
//!
//! ```json
//! {
//!   "format": "irf-model",
//!   "version": 1,
//!   "task": "classification",
//!   "p": 2,
//!   "feature_names": ["x0", "x1"],
//!   "label": "y",
//!   "config": {"n_trees": 1, "max_depth": 10, "lambda": 1.0, "min_leaf": 1,
//!              "feature_subsampling": "none", "seed": 0},
//!   "trees": [{"j": 0, "c": 0.5, "n": 4,
//!              "left": {"pred": 0.0, "n": 2}, "right": {"pred": 1.0, "n": 2}}]
//! }
//! ```
//!
//! Internal nodes send rows with `x[j] <= c` left. Floats are written in
//! their shortest exact form, so a load reproduces the model bit for bit.

use std::fs;
use std::path::Path;

use irf_core::{FeatureSubsampling, ForestConfig, ForestModel, SplitCandidate, Task, TreeConfig, TreeNode};
use serde::{Deserialize, Serialize};

use crate::error::{IrfError, Result};

pub const FORMAT_NAME: &str = "irf-model";
pub const FORMAT_VERSION: u64 = 1;

/// A fitted forest with the column names it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: ForestModel,
    pub feature_names: Vec<String>,
    pub label: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum TaskRecord {
    Classification,
    Regression,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SubsamplingRecord {
    None,
    Sqrt,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigRecord {
    n_trees: usize,
    max_depth: usize,
    lambda: f64,
    min_leaf: usize,
    feature_subsampling: SubsamplingRecord,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeRecord {
    Internal {
        j: usize,
        c: f64,
        n: usize,
        left: Box<NodeRecord>,
        right: Box<NodeRecord>,
    },
    Leaf {
        pred: f64,
        n: usize,
    },
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    format: String,
    version: u64,
    task: TaskRecord,
    p: usize,
    feature_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    config: ConfigRecord,
    trees: Vec<NodeRecord>,
}

#[derive(Deserialize)]
struct Header {
    format: Option<String>,
    version: Option<u64>,
}

fn node_record(node: &TreeNode) -> NodeRecord {
    match node {
        TreeNode::Internal {
            split, left, right, n,
        } => NodeRecord::Internal {
            j: split.feature,
            c: split.threshold,
            n: *n,
            left: Box::new(node_record(left)),
            right: Box::new(node_record(right)),
        },
        TreeNode::Leaf { prediction, n } => NodeRecord::Leaf {
            pred: *prediction,
            n: *n,
        },
    }
}

fn tree_node(rec: NodeRecord, p: usize) -> Result<TreeNode> {
    Ok(match rec {
        NodeRecord::Internal {
            j, c, n, left, right,
        } => {
            if j >= p || !c.is_finite() {
                return Err(IrfError::MalformedModel(format!(
                    "split on feature {j} at {c} is invalid for {p} features"
                )));
            }
            TreeNode::Internal {
                split: SplitCandidate::new(j, c),
                left: Box::new(tree_node(*left, p)?),
                right: Box::new(tree_node(*right, p)?),
                n,
            }
        }
        NodeRecord::Leaf { pred, n } => {
            if !pred.is_finite() {
                return Err(IrfError::MalformedModel("leaf prediction is not finite".into()));
            }
            TreeNode::Leaf {
                prediction: pred,
                n,
            }
        }
    })
}

fn to_record(saved: &SavedModel) -> ModelRecord {
    let model = &saved.model;
    let cfg = model.config();
    ModelRecord {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        task: match model.task() {
            Task::Classification => TaskRecord::Classification,
            Task::Regression => TaskRecord::Regression,
        },
        p: model.n_features(),
        feature_names: saved.feature_names.clone(),
        label: saved.label.clone(),
        config: ConfigRecord {
            n_trees: cfg.n_trees,
            max_depth: cfg.tree.max_depth,
            lambda: cfg.tree.lambda,
            min_leaf: cfg.tree.min_leaf,
            feature_subsampling: match cfg.feature_subsampling {
                FeatureSubsampling::None => SubsamplingRecord::None,
                FeatureSubsampling::SqrtP => SubsamplingRecord::Sqrt,
            },
            seed: cfg.seed,
        },
        trees: model.trees().iter().map(node_record).collect(),
    }
}

fn from_record(rec: ModelRecord) -> Result<SavedModel> {
    if rec.feature_names.len() != rec.p {
        return Err(IrfError::MalformedModel(format!(
            "{} feature names for {} features",
            rec.feature_names.len(),
            rec.p
        )));
    }
    let task = match rec.task {
        TaskRecord::Classification => Task::Classification,
        TaskRecord::Regression => Task::Regression,
    };
    let c = rec.config;
    let config = ForestConfig {
        n_trees: c.n_trees,
        tree: TreeConfig {
            max_depth: c.max_depth,
            lambda: c.lambda,
            min_leaf: c.min_leaf,
            task,
            seed: c.seed,
        },
        feature_subsampling: match c.feature_subsampling {
            SubsamplingRecord::None => FeatureSubsampling::None,
            SubsamplingRecord::Sqrt => FeatureSubsampling::SqrtP,
        },
        seed: c.seed,
    };
    let p = rec.p;
    let trees = rec
        .trees
        .into_iter()
        .map(|t| tree_node(t, p))
        .collect::<Result<Vec<_>>>()?;
    let model = ForestModel::new(trees, task, p, config)
        .map_err(|e| IrfError::MalformedModel(e.to_string()))?;
    Ok(SavedModel {
        model,
        feature_names: rec.feature_names,
        label: rec.label,
    })
}

pub fn model_to_string(saved: &SavedModel) -> Result<String> {
    serde_json::to_string_pretty(&to_record(saved))
        .map_err(|e| IrfError::MalformedModel(e.to_string()))
}

pub fn model_from_str(text: &str) -> Result<SavedModel> {
    let malformed = |e: serde_json::Error| IrfError::MalformedModel(e.to_string());
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let value = serde_json::Value::deserialize(&mut de).map_err(malformed)?;
    de.end().map_err(malformed)?;
    let header = Header::deserialize(&value).map_err(malformed)?;
    if header.format.as_deref() != Some(FORMAT_NAME) {
        return Err(IrfError::MalformedModel(format!(
            "format field is not {FORMAT_NAME:?}"
        )));
    }
    match header.version {
        Some(FORMAT_VERSION) => {}
        Some(found) => {
            return Err(IrfError::VersionMismatch {
                found,
                expected: FORMAT_VERSION,
            })
        }
        None => return Err(IrfError::MalformedModel("missing version field".into())),
    }
    let rec = ModelRecord::deserialize(value).map_err(malformed)?;
    from_record(rec)
}

pub fn save_model(saved: &SavedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = model_to_string(saved)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| IrfError::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IrfError::io(path, e))?;
    model_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump_model() -> SavedModel {
        let tree = TreeNode::Internal {
            split: SplitCandidate::new(1, 0.1 + 0.2),
            left: Box::new(TreeNode::Leaf { prediction: 1.0 / 3.0, n: 3 }),
            right: Box::new(TreeNode::Leaf { prediction: 1.0, n: 1 }),
            n: 4,
        };
        let cfg = ForestConfig::invariant(Task::Classification, 1, 10, 5.0, 42);
        SavedModel {
            model: ForestModel::new(vec![tree], Task::Classification, 2, cfg).unwrap(),
            feature_names: vec!["a".into(), "b".into()],
            label: Some("y".into()),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = stump_model();
        let text = model_to_string(&m).unwrap();
        assert_eq!(model_from_str(&text).unwrap(), m);
    }

    #[test]
    fn truncated_is_malformed() {
        let text = model_to_string(&stump_model()).unwrap();
        let cut = &text[..text.len() / 2];
        assert!(matches!(model_from_str(cut), Err(IrfError::MalformedModel(_))));
        assert!(matches!(model_from_str(""), Err(IrfError::MalformedModel(_))));
    }

    #[test]
    fn other_version_is_rejected() {
        let text = model_to_string(&stump_model()).unwrap();
        let bumped = text.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(
            model_from_str(&bumped),
            Err(IrfError::VersionMismatch { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn out_of_range_feature_is_malformed() {
        let text = model_to_string(&stump_model()).unwrap();
        let bad = text.replace("\"j\": 1", "\"j\": 7");
        assert!(matches!(model_from_str(&bad), Err(IrfError::MalformedModel(_))));
    }
}
