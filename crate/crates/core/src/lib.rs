//! Riemann-Lebesgue forests for regression.
//!
//! A Riemann-Lebesgue tree grows like CART, except that each internal node
//! may instead cut on the response: the node's points are split by `y < z`
//! for the variance-optimal `z`, and a small local random forest estimates
//! `y` for new points so they can be routed. The choice between the two cut
//! types is random, with a Riemann probability that is either derived from
//! the two best gains or fixed by the user. A forest subsamples rows without
//! replacement for every tree and averages the tree predictions.
//!
//! The crate also carries the experiment machinery around the learner:
//! synthetic models, stratified cross-validation with the corrected
//! resampled t-test, grid tuning, timing, and a Monte Carlo normality check.

pub mod dataset;
mod error;
pub mod eval;
pub mod forest;
mod io;
pub mod normality;
pub mod rng;
pub mod split;
pub mod stats;
pub mod synth;
pub mod tree;

pub use dataset::{
    load_csv, stratified_folds, subsample_without_replacement, Dataset, FoldAssignment,
};
pub use error::{Error, ErrorKind, Result};
pub use forest::{
    fit_forest, load_forest, predict_batch, predict_forest, save_forest, ForestParams,
    TrainedForest,
};
pub use io::write_atomic;
pub use rng::RandomState;
pub use synth::{Model, SyntheticSpec};
pub use tree::{fit_rl_tree, predict_tree, tree_stats, PMode, TreeNode, TreeParams};
