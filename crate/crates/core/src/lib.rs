//! Invariant decision trees and invariant random forests.
//!
//! Trees are grown with a split criterion that adds, to the usual pooled
//! impurity, a penalty on how differently a split behaves across training
//! environments. Splits on features whose relation to the label is stable
//! across environments are favoured, which helps when the test environment
//! has not been seen during training.
//!
//! The crate is `no_std` and only needs `alloc`. The `parallel` feature
//! grows the trees of a forest on the rayon thread pool.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod data;
mod error;
pub mod forest;
pub mod metrics;
pub mod select;
pub mod split;
pub mod tree;

pub use data::{
    generate_classification, generate_regression, ClassGenConfig, Dataset, EnvPartition,
    RegGenConfig, Task,
};
pub use error::{Error, Result};
pub use forest::{fit, FeatureSubsampling, ForestConfig, ForestModel};
pub use select::{select_hyperparams, Protocol, Scenario, Selection};
pub use split::{best_split, NodeData, PenaltyReport, ScoredSplit, SplitCandidate};
pub use tree::{grow, TreeConfig, TreeNode};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The project-wide generator: ChaCha8 seeded from a `u64`.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
