//! Subagged ensembles of Riemann-Lebesgue trees.
//!
//! Tree `i` draws `k = ceil(alpha * n)` rows without replacement and grows on
//! them. Every tree's randomness is derived from `(seed, i)`, so trees can be
//! built in any order or in parallel with identical results.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{subsample_without_replacement, Dataset};
use crate::error::{invalid, Error, Result};
use crate::io::write_atomic;
use crate::rng::RandomState;
use crate::tree::{
    fit_cart_tree, fit_rl_tree, predict_tree, tree_stats, PMode, TreeNode, TreeParams,
};

pub use crate::stats::mse;

pub const FORMAT_VERSION: u64 = 1;

const SAMPLE: u64 = 1;
const TREE: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub m_trees: usize,
    /// Subagging ratio `k / n`.
    pub alpha: f64,
    pub tree: TreeParams,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            m_trees: 100,
            alpha: 0.632,
            tree: TreeParams::default(),
            seed: 42,
        }
    }
}

impl ForestParams {
    /// Classical random-forest baseline: every node takes a Riemann cut.
    pub fn rf_baseline(mut self) -> Self {
        self.tree.p_mode = PMode::Fixed(1.0);
        self
    }

    pub fn with_p_mode(mut self, p_mode: PMode) -> Self {
        self.tree.p_mode = p_mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, n: usize, d: usize) -> Result<(usize, usize)> {
        if self.m_trees < 1 {
            return Err(invalid("m_trees must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        let mtry = self.tree.validate(d)?;
        let k = subsample_size(n, self.alpha);
        if k < 2 {
            return Err(invalid(format!(
                "subsample size ceil({} * {n}) = {k} is below 2",
                self.alpha
            )));
        }
        Ok((k, mtry))
    }
}

/// `ceil(alpha * n)`, ignoring rounding noise in the product.
pub fn subsample_size(n: usize, alpha: f64) -> usize {
    let raw = alpha * n as f64;
    let nearest = raw.round();
    let k = if (raw - nearest).abs() < 1e-9 {
        nearest
    } else {
        raw.ceil()
    };
    (k as usize).min(n)
}

/// Rows used by tree `tree_index` of a forest with the given seed.
pub fn tree_subsample(n: usize, k: usize, seed: u64, tree_index: usize) -> Result<Vec<usize>> {
    let stream = RandomState::new(seed)
        .child(tree_index as u64)
        .child(SAMPLE);
    subsample_without_replacement(n, k, &mut stream.rng())
}

fn tree_stream(seed: u64, tree_index: usize) -> RandomState {
    RandomState::new(seed).child(tree_index as u64).child(TREE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedForest {
    pub params: ForestParams,
    pub d: usize,
    pub trees: Vec<TreeNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestStats {
    pub trees: usize,
    pub leaf_count: usize,
    pub riemann_count: usize,
    pub lebesgue_count: usize,
    pub max_depth: usize,
    pub mean_depth: f64,
    /// Lebesgue nodes over all internal nodes; 0 when there are none.
    pub lebesgue_fraction: f64,
}

fn fit_with<F>(ds: &Dataset, params: &ForestParams, grow: F) -> Result<TrainedForest>
where
    F: Fn(&[usize], &RandomState, usize) -> Result<TreeNode> + Sync,
{
    let (k, mtry) = params.validate(ds.n(), ds.d())?;
    let trees = (0..params.m_trees)
        .into_par_iter()
        .map(|i| {
            let sample = tree_subsample(ds.n(), k, params.seed, i)?;
            grow(&sample, &tree_stream(params.seed, i), mtry)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut params = *params;
    params.tree.mtry = Some(mtry);
    Ok(TrainedForest {
        params,
        d: ds.d(),
        trees,
    })
}

pub fn fit_forest(ds: &Dataset, params: &ForestParams) -> Result<TrainedForest> {
    fit_with(ds, params, |sample, rng, mtry| {
        let tree = TreeParams {
            mtry: Some(mtry),
            ..params.tree
        };
        fit_rl_tree(ds, sample, &tree, rng)
    })
}

/// Subagged forest of plain CART trees with the same per-tree subsamples
/// and streams as [`fit_forest`]. `p_mode` and `m_local` are ignored.
pub fn fit_cart_forest(ds: &Dataset, params: &ForestParams) -> Result<TrainedForest> {
    let min_node = params.tree.min_node;
    let mut forest = fit_with(ds, params, |sample, rng, mtry| {
        fit_cart_tree(ds, sample, mtry, min_node, rng)
    })?;
    forest.params.tree.p_mode = PMode::Fixed(1.0);
    Ok(forest)
}

impl TrainedForest {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        predict_forest(self, x)
    }

    pub fn stats(&self) -> ForestStats {
        let mut out = ForestStats {
            trees: self.trees.len(),
            leaf_count: 0,
            riemann_count: 0,
            lebesgue_count: 0,
            max_depth: 0,
            mean_depth: 0.0,
            lebesgue_fraction: 0.0,
        };
        let mut depth_sum = 0usize;
        for tree in &self.trees {
            let s = tree_stats(tree);
            out.leaf_count += s.leaf_count;
            out.riemann_count += s.riemann_count;
            out.lebesgue_count += s.lebesgue_count;
            out.max_depth = out.max_depth.max(s.depth);
            depth_sum += s.depth;
        }
        out.mean_depth = depth_sum as f64 / self.trees.len().max(1) as f64;
        let internal = out.riemann_count + out.lebesgue_count;
        if internal > 0 {
            out.lebesgue_fraction = out.lebesgue_count as f64 / internal as f64;
        }
        out
    }
}

/// Mean of the member trees' predictions.
pub fn predict_forest(f: &TrainedForest, x: &[f64]) -> Result<f64> {
    if x.len() != f.d {
        return Err(Error::Shape(format!(
            "forest expects {} features, got {}",
            f.d,
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("prediction input contains a non-finite value"));
    }
    let mut total = 0.0;
    for tree in &f.trees {
        total += predict_tree(tree, x)?;
    }
    Ok(total / f.trees.len() as f64)
}

/// Predictions for every row of `ds`, in row order.
pub fn predict_batch(f: &TrainedForest, ds: &Dataset) -> Result<Vec<f64>> {
    if ds.d() != f.d {
        return Err(Error::Shape(format!(
            "forest expects {} features, data has {}",
            f.d,
            ds.d()
        )));
    }
    (0..ds.n())
        .into_par_iter()
        .map(|i| predict_forest(f, &ds.row(i)))
        .collect()
}

#[derive(Serialize)]
struct ModelRef<'a> {
    format_version: u64,
    params: &'a ForestParams,
    d: usize,
    trees: &'a [TreeNode],
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u64,
}

#[derive(Deserialize)]
struct ModelOwned {
    #[allow(dead_code)]
    format_version: u64,
    params: ForestParams,
    d: usize,
    trees: Vec<TreeNode>,
}

pub fn to_json(f: &TrainedForest) -> Result<String> {
    Ok(serde_json::to_string(&ModelRef {
        format_version: FORMAT_VERSION,
        params: &f.params,
        d: f.d,
        trees: &f.trees,
    })?)
}

fn parse_unbounded<'de, T: Deserialize<'de>>(text: &'de str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let value = T::deserialize(&mut de)?;
    de.end()?;
    Ok(value)
}

pub fn from_json(text: &str) -> Result<TrainedForest> {
    let probe: VersionProbe = parse_unbounded(text)?;
    if probe.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: probe.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let m: ModelOwned = parse_unbounded(text)?;
    if m.trees.is_empty() {
        return Err(Error::Shape("model has no trees".into()));
    }
    if m.d == 0 {
        return Err(Error::Shape("model has zero feature dimension".into()));
    }
    m.params.tree.validate(m.d)?;
    Ok(TrainedForest {
        params: m.params,
        d: m.d,
        trees: m.trees,
    })
}

/// Writes the model to a temporary sibling and renames it into place.
pub fn save_forest(f: &TrainedForest, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, to_json(f)?.as_bytes())
}

pub fn load_forest(path: impl AsRef<Path>) -> Result<TrainedForest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}
