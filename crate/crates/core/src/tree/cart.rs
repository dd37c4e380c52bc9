//! Plain CART trees: the reference builder and the local forests carried by
//! Lebesgue nodes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_sample, is_constant, node_mean, predict_tree, sample_features, TreeNode, FEATURES, LEFT,
    RIGHT,
};
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::rng::RandomState;
use crate::split::{riemann_kernel, Scratch};
use crate::stats::CompensatedSum;

/// Minimum node size inside local forests.
pub const LOCAL_MIN_NODE: usize = 5;

fn grow(
    ds: &Dataset,
    indices: Vec<usize>,
    mtry: usize,
    min_node: usize,
    rng: RandomState,
    scratch: &mut Scratch,
) -> TreeNode {
    let y = ds.target();
    if indices.len() <= min_node || is_constant(y, &indices) {
        return TreeNode::Leaf {
            mean: node_mean(y, &indices),
        };
    }
    let mean = node_mean(y, &indices);
    let features = sample_features(ds.d(), mtry, &rng.child(FEATURES));
    match riemann_kernel(ds, &indices, mean, &features, scratch) {
        Some(split) if split.gain > 0.0 => {
            let x = ds.feature(split.feature);
            let (left, right): (Vec<usize>, Vec<usize>) =
                indices.iter().partition(|&&i| x[i] < split.threshold);
            TreeNode::Riemann {
                j: split.feature,
                z: split.threshold,
                left: Box::new(grow(ds, left, mtry, min_node, rng.child(LEFT), scratch)),
                right: Box::new(grow(ds, right, mtry, min_node, rng.child(RIGHT), scratch)),
            }
        }
        _ => TreeNode::Leaf { mean },
    }
}

/// Grow a classical CART regression tree. Uses the same split kernel,
/// feature bagging and stream labels as the Riemann-Lebesgue builder, so a
/// Riemann-Lebesgue tree with fixed `p = 1` reproduces it exactly.
pub fn fit_cart_tree(
    ds: &Dataset,
    sample: &[usize],
    mtry: usize,
    min_node: usize,
    rng: &RandomState,
) -> Result<TreeNode> {
    check_sample(ds, sample)?;
    if mtry < 1 || mtry > ds.d() {
        return Err(invalid(format!(
            "mtry must be in 1..={}, got {mtry}",
            ds.d()
        )));
    }
    if min_node < 1 {
        return Err(invalid("min_node must be at least 1"));
    }
    Ok(grow(
        ds,
        sample.to_vec(),
        mtry,
        min_node,
        *rng,
        &mut Scratch::default(),
    ))
}

/// Bootstrap forest of CART trees fitted on one node's points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalForest {
    trees: Vec<TreeNode>,
}

impl LocalForest {
    pub fn from_trees(trees: Vec<TreeNode>) -> Self {
        assert!(!trees.is_empty(), "local forest needs at least one tree");
        Self { trees }
    }

    pub(crate) fn fit_on(
        ds: &Dataset,
        indices: &[usize],
        m_trees: usize,
        mtry: usize,
        rng: &RandomState,
        scratch: &mut Scratch,
    ) -> Self {
        let n = indices.len();
        let trees = (0..m_trees as u64)
            .map(|t| {
                let stream = rng.child(t);
                let mut draw = stream.rng();
                let boot: Vec<usize> = (0..n).map(|_| indices[draw.random_range(0..n)]).collect();
                grow(ds, boot, mtry, LOCAL_MIN_NODE, stream.child(0), scratch)
            })
            .collect();
        Self { trees }
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let mut acc = CompensatedSum::new();
        for tree in &self.trees {
            acc.add(predict_tree(tree, x)?);
        }
        Ok(acc.value() / self.trees.len() as f64)
    }
}
