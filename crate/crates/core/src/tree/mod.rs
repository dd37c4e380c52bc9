//! Riemann-Lebesgue trees.
//!
//! Each internal node is either a feature-axis cut or a response-axis cut.
//! The cut type is drawn per node: a Riemann cut with probability `p~`, a
//! Lebesgue cut otherwise. Since the response is unknown at prediction time,
//! a Lebesgue node carries a small random forest fitted on the node's
//! training points; its estimate of `y` decides the branch.

mod cart;

pub use cart::{fit_cart_tree, LocalForest, LOCAL_MIN_NODE};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::rng::RandomState;
use crate::split::{lebesgue_kernel, node_p_tilde, riemann_kernel, Scratch};
use crate::stats::CompensatedSum;

// Stream labels under a node's RandomState.
pub(crate) const FEATURES: u64 = 1;
pub(crate) const BERNOULLI: u64 = 2;
pub(crate) const LOCAL: u64 = 3;
pub(crate) const LEFT: u64 = 4;
pub(crate) const RIGHT: u64 = 5;

/// How a node's Riemann probability `p~` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "p", rename_all = "snake_case")]
pub enum PMode {
    /// `p~ = L~ / (L + L~)` from the node's best gains.
    DataDriven,
    /// The same constant for every node.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Nodes with at most this many points become leaves.
    pub min_node: usize,
    /// Features tried per node; `None` means `max(1, d / 3)`.
    pub mtry: Option<usize>,
    /// Trees in each local forest.
    pub m_local: usize,
    pub p_mode: PMode,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            min_node: 5,
            mtry: None,
            m_local: 10,
            p_mode: PMode::DataDriven,
        }
    }
}

pub fn default_mtry(d: usize) -> usize {
    (d / 3).max(1)
}

impl TreeParams {
    pub fn resolved_mtry(&self, d: usize) -> usize {
        self.mtry.unwrap_or_else(|| default_mtry(d))
    }

    /// Checks the parameters against a feature dimension and returns the effective mtry.
    pub fn validate(&self, d: usize) -> Result<usize> {
        if self.min_node < 1 {
            return Err(invalid("min_node must be at least 1"));
        }
        if self.m_local < 1 {
            return Err(invalid("m_local must be at least 1"));
        }
        let mtry = self.resolved_mtry(d);
        if mtry < 1 || mtry > d {
            return Err(invalid(format!("mtry must be in 1..={d}, got {mtry}")));
        }
        if let PMode::Fixed(p) = self.p_mode {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("fixed p must be in [0, 1], got {p}")));
            }
        }
        Ok(mtry)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Riemann {
        j: usize,
        z: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Lebesgue {
        zl: f64,
        local: LocalForest,
        down: Box<TreeNode>,
        up: Box<TreeNode>,
    },
    Leaf {
        mean: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Riemann,
    Lebesgue,
    Leaf,
}

/// What happened at one node during fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub depth: usize,
    pub n: usize,
    pub riemann_gain: Option<f64>,
    pub lebesgue_gain: Option<f64>,
    /// Data-driven `p~`; `None` when the node was not evaluated or both gains are zero.
    pub p_tilde: Option<f64>,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub leaf_count: usize,
    pub riemann_count: usize,
    pub lebesgue_count: usize,
    pub depth: usize,
}

pub(crate) fn node_mean(y: &[f64], indices: &[usize]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &i in indices {
        acc.add(y[i]);
    }
    acc.value() / indices.len() as f64
}

pub(crate) fn is_constant(y: &[f64], indices: &[usize]) -> bool {
    let first = y[indices[0]];
    indices.iter().all(|&i| y[i] == first)
}

/// `mtry` distinct feature indices, ascending.
pub(crate) fn sample_features(d: usize, mtry: usize, rng: &RandomState) -> Vec<usize> {
    let mut f = index::sample(&mut rng.rng(), d, mtry).into_vec();
    f.sort_unstable();
    f
}

pub(crate) fn check_sample(ds: &Dataset, sample: &[usize]) -> Result<()> {
    if sample.is_empty() {
        return Err(invalid("tree sample is empty"));
    }
    if let Some(&i) = sample.iter().find(|&&i| i >= ds.n()) {
        return Err(invalid(format!(
            "sample index {i} out of range for {} rows",
            ds.n()
        )));
    }
    Ok(())
}

struct Builder<'a> {
    ds: &'a Dataset,
    params: TreeParams,
    mtry: usize,
    local_mtry: usize,
    scratch: Scratch,
    trace: Option<Vec<NodeRecord>>,
}

enum Cut {
    Riemann,
    Lebesgue,
    None,
}

impl Builder<'_> {
    fn record(&mut self, rec: NodeRecord) {
        if let Some(t) = self.trace.as_mut() {
            t.push(rec);
        }
    }

    fn leaf(
        &mut self,
        indices: &[usize],
        depth: usize,
        gains: (Option<f64>, Option<f64>),
        p_tilde: Option<f64>,
    ) -> TreeNode {
        self.record(NodeRecord {
            depth,
            n: indices.len(),
            riemann_gain: gains.0,
            lebesgue_gain: gains.1,
            p_tilde,
            kind: NodeKind::Leaf,
        });
        TreeNode::Leaf {
            mean: node_mean(self.ds.target(), indices),
        }
    }

    fn build(&mut self, indices: Vec<usize>, rng: RandomState, depth: usize) -> TreeNode {
        let y = self.ds.target();
        if indices.len() <= self.params.min_node || is_constant(y, &indices) {
            return self.leaf(&indices, depth, (None, None), None);
        }
        let mean = node_mean(y, &indices);
        let features = sample_features(self.ds.d(), self.mtry, &rng.child(FEATURES));
        let riemann = riemann_kernel(self.ds, &indices, mean, &features, &mut self.scratch);
        let lebesgue = lebesgue_kernel(self.ds, &indices, mean, &mut self.scratch);
        let gains = (riemann.map(|s| s.gain), lebesgue.map(|s| s.gain));
        let p_tilde = node_p_tilde(gains.0.unwrap_or(0.0), gains.1.unwrap_or(0.0))
            .expect("split gains are finite and nonnegative");

        // Drawn in every mode so tree shapes stay comparable across p values.
        let u = rng.child(BERNOULLI).uniform();
        let riemann_ok = riemann.is_some_and(|s| s.gain > 0.0);
        let lebesgue_ok = lebesgue.is_some_and(|s| s.gain > 0.0);
        let (p, allow_riemann, allow_lebesgue) = match self.params.p_mode {
            PMode::DataDriven => (p_tilde, true, true),
            PMode::Fixed(p) => (Some(p), p > 0.0, p < 1.0),
        };
        let cut = match p {
            None => Cut::None,
            Some(p) if u < p => {
                if riemann_ok {
                    Cut::Riemann
                } else if allow_lebesgue && lebesgue_ok {
                    Cut::Lebesgue
                } else {
                    Cut::None
                }
            }
            Some(_) => {
                if lebesgue_ok {
                    Cut::Lebesgue
                } else if allow_riemann && riemann_ok {
                    Cut::Riemann
                } else {
                    Cut::None
                }
            }
        };

        let record = |kind| NodeRecord {
            depth,
            n: indices.len(),
            riemann_gain: gains.0,
            lebesgue_gain: gains.1,
            p_tilde,
            kind,
        };
        match cut {
            Cut::None => self.leaf(&indices, depth, gains, p_tilde),
            Cut::Riemann => {
                let split = riemann.expect("riemann split checked above");
                self.record(record(NodeKind::Riemann));
                let x = self.ds.feature(split.feature);
                let (left, right): (Vec<usize>, Vec<usize>) =
                    indices.iter().partition(|&&i| x[i] < split.threshold);
                debug_assert_eq!(left.len(), split.left_count);
                TreeNode::Riemann {
                    j: split.feature,
                    z: split.threshold,
                    left: Box::new(self.build(left, rng.child(LEFT), depth + 1)),
                    right: Box::new(self.build(right, rng.child(RIGHT), depth + 1)),
                }
            }
            Cut::Lebesgue => {
                let split = lebesgue.expect("lebesgue split checked above");
                self.record(record(NodeKind::Lebesgue));
                let local = LocalForest::fit_on(
                    self.ds,
                    &indices,
                    self.params.m_local,
                    self.local_mtry,
                    &rng.child(LOCAL),
                    &mut self.scratch,
                );
                let (down, up): (Vec<usize>, Vec<usize>) =
                    indices.iter().partition(|&&i| y[i] < split.threshold);
                debug_assert_eq!(down.len(), split.down_count);
                TreeNode::Lebesgue {
                    zl: split.threshold,
                    local,
                    down: Box::new(self.build(down, rng.child(LEFT), depth + 1)),
                    up: Box::new(self.build(up, rng.child(RIGHT), depth + 1)),
                }
            }
        }
    }
}

fn fit_impl(
    ds: &Dataset,
    sample: &[usize],
    params: &TreeParams,
    rng: &RandomState,
    trace: bool,
) -> Result<(TreeNode, Option<Vec<NodeRecord>>)> {
    check_sample(ds, sample)?;
    let mtry = params.validate(ds.d())?;
    let mut builder = Builder {
        ds,
        params: *params,
        mtry,
        local_mtry: default_mtry(ds.d()),
        scratch: Scratch::default(),
        trace: trace.then(Vec::new),
    };
    let tree = builder.build(sample.to_vec(), *rng, 0);
    Ok((tree, builder.trace))
}

/// Grow one tree on the rows listed in `sample`.
pub fn fit_rl_tree(
    ds: &Dataset,
    sample: &[usize],
    params: &TreeParams,
    rng: &RandomState,
) -> Result<TreeNode> {
    fit_impl(ds, sample, params, rng, false).map(|(t, _)| t)
}

/// Like [`fit_rl_tree`], also returning one record per node in build order.
pub fn fit_rl_tree_traced(
    ds: &Dataset,
    sample: &[usize],
    params: &TreeParams,
    rng: &RandomState,
) -> Result<(TreeNode, Vec<NodeRecord>)> {
    fit_impl(ds, sample, params, rng, true).map(|(t, r)| (t, r.unwrap_or_default()))
}

/// Route `x` to a leaf. Lebesgue nodes branch on the local forest's estimate.
pub fn predict_tree(tree: &TreeNode, x: &[f64]) -> Result<f64> {
    let mut node = tree;
    loop {
        match node {
            TreeNode::Leaf { mean } => return Ok(*mean),
            TreeNode::Riemann { j, z, left, right } => {
                let v = x.get(*j).ok_or_else(|| {
                    Error::Shape(format!(
                        "tree splits on feature {j}, input has {} values",
                        x.len()
                    ))
                })?;
                node = if *v < *z { left } else { right };
            }
            TreeNode::Lebesgue {
                zl,
                local,
                down,
                up,
            } => {
                let estimate = local.predict(x)?;
                node = if estimate < *zl { down } else { up };
            }
        }
    }
}

pub fn tree_stats(tree: &TreeNode) -> TreeStats {
    let mut stats = TreeStats::default();
    let mut stack = vec![(tree, 0usize)];
    while let Some((node, depth)) = stack.pop() {
        stats.depth = stats.depth.max(depth);
        match node {
            TreeNode::Leaf { .. } => stats.leaf_count += 1,
            TreeNode::Riemann { left, right, .. } => {
                stats.riemann_count += 1;
                stack.push((left, depth + 1));
                stack.push((right, depth + 1));
            }
            TreeNode::Lebesgue { down, up, .. } => {
                stats.lebesgue_count += 1;
                stack.push((down, depth + 1));
                stack.push((up, depth + 1));
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(mean: f64) -> Box<TreeNode> {
        Box::new(TreeNode::Leaf { mean })
    }

    fn fixed(p: f64, min_node: usize) -> TreeParams {
        TreeParams {
            min_node,
            mtry: None,
            m_local: 3,
            p_mode: PMode::Fixed(p),
        }
    }

    #[test]
    fn constant_response_is_single_leaf() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, (i * 7 % 5) as f64])
            .collect();
        let ds = Dataset::from_rows(&rows, vec![3.25; 20]).unwrap();
        let all: Vec<usize> = (0..20).collect();
        let tree = fit_rl_tree(&ds, &all, &TreeParams::default(), &RandomState::new(0)).unwrap();
        assert_eq!(tree, TreeNode::Leaf { mean: 3.25 });
    }

    #[test]
    fn lebesgue_root_with_uninformative_feature() {
        let ds =
            Dataset::from_rows(&vec![vec![1.0]; 6], vec![0.0, 0.0, 0.0, 10.0, 10.0, 10.0]).unwrap();
        let all: Vec<usize> = (0..6).collect();
        let tree = fit_rl_tree(&ds, &all, &fixed(0.0, 2), &RandomState::new(1)).unwrap();
        match &tree {
            TreeNode::Lebesgue { zl, down, up, .. } => {
                assert_eq!(*zl, 5.0);
                assert_eq!(**down, TreeNode::Leaf { mean: 0.0 });
                assert_eq!(**up, TreeNode::Leaf { mean: 10.0 });
            }
            other => panic!("expected a Lebesgue root, got {other:?}"),
        }
    }

    #[test]
    fn fixed_one_has_no_lebesgue_nodes() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 4) as f64]).collect();
        let y: Vec<f64> = (0..60).map(|i| ((i * 37) % 11) as f64).collect();
        let ds = Dataset::from_rows(&rows, y).unwrap();
        let all: Vec<usize> = (0..60).collect();
        for seed in 0..5 {
            let tree = fit_rl_tree(&ds, &all, &fixed(1.0, 2), &RandomState::new(seed)).unwrap();
            assert_eq!(tree_stats(&tree).lebesgue_count, 0);
        }
    }

    #[test]
    fn predict_leaf_and_threshold() {
        assert_eq!(
            predict_tree(&TreeNode::Leaf { mean: 3.7 }, &[99.0]).unwrap(),
            3.7
        );
        let stump = TreeNode::Riemann {
            j: 0,
            z: 2.5,
            left: leaf(0.0),
            right: leaf(1.0),
        };
        assert_eq!(predict_tree(&stump, &[1.0]).unwrap(), 0.0);
        assert_eq!(predict_tree(&stump, &[3.0]).unwrap(), 1.0);
        assert!(predict_tree(&stump, &[]).is_err());
    }

    #[test]
    fn lebesgue_routes_by_local_estimate() {
        let node = TreeNode::Lebesgue {
            zl: 5.0,
            local: LocalForest::from_trees(vec![TreeNode::Leaf { mean: 7.0 }]),
            down: leaf(-1.0),
            up: leaf(1.0),
        };
        for x in [-100.0, 0.0, 4.0, 1e9] {
            assert_eq!(predict_tree(&node, &[x]).unwrap(), 1.0);
        }
    }

    #[test]
    fn stats_census() {
        assert_eq!(
            tree_stats(&TreeNode::Leaf { mean: 0.0 }),
            TreeStats {
                leaf_count: 1,
                riemann_count: 0,
                lebesgue_count: 0,
                depth: 0
            }
        );
        let half = |z| TreeNode::Riemann {
            j: 0,
            z,
            left: leaf(0.0),
            right: leaf(1.0),
        };
        let balanced = TreeNode::Riemann {
            j: 0,
            z: 0.5,
            left: Box::new(half(0.25)),
            right: Box::new(half(0.75)),
        };
        assert_eq!(
            tree_stats(&balanced),
            TreeStats {
                leaf_count: 4,
                riemann_count: 3,
                lebesgue_count: 0,
                depth: 2
            }
        );
    }

    #[test]
    fn params_validation() {
        assert_eq!(TreeParams::default().validate(100).unwrap(), 33);
        assert_eq!(TreeParams::default().validate(2).unwrap(), 1);
        let bad = TreeParams {
            mtry: Some(5),
            ..TreeParams::default()
        };
        assert!(bad.validate(4).is_err());
        assert!(fixed(1.5, 5).validate(3).is_err());
        assert!(fixed(-0.1, 5).validate(3).is_err());
        let bad = TreeParams {
            min_node: 0,
            ..TreeParams::default()
        };
        assert!(bad.validate(3).is_err());
    }

    #[test]
    fn empty_sample_rejected() {
        let ds = Dataset::from_rows(&[vec![1.0]], vec![1.0]).unwrap();
        assert!(fit_rl_tree(&ds, &[], &TreeParams::default(), &RandomState::new(0)).is_err());
        assert!(fit_rl_tree(&ds, &[4], &TreeParams::default(), &RandomState::new(0)).is_err());
    }

    #[test]
    fn p_mode_json() {
        let v = serde_json::to_value(PMode::Fixed(0.4)).unwrap();
        assert_eq!(v, serde_json::json!({"mode": "fixed", "p": 0.4}));
        let v = serde_json::to_value(PMode::DataDriven).unwrap();
        assert_eq!(v, serde_json::json!({"mode": "data_driven"}));
    }

    #[test]
    fn tree_json_shape() {
        let tree = TreeNode::Riemann {
            j: 0,
            z: 2.5,
            left: leaf(0.0),
            right: leaf(1.0),
        };
        let v = serde_json::to_value(&tree).unwrap();
        assert_eq!(v["kind"], "riemann");
        assert_eq!(v["z"], 2.5);
        assert_eq!(v["left"]["kind"], "leaf");
        assert_eq!(v["right"]["mean"], 1.0);
    }
}
