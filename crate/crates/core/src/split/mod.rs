//! Optimal node splits.
//!
//! A Riemann split cuts a node on a feature coordinate (`x_j < z` goes left),
//! a Lebesgue split cuts it on the response (`y < z` goes down). Both are
//! scored by the same criterion, the decrease in mean squared deviation
//!
//! ```text
//! gain = (SSE(A) - SSE(A_1) - SSE(A_2)) / N(A)
//! ```
//!
//! Candidate thresholds are midpoints between consecutive distinct sorted
//! values inside the node. Scans go over features in ascending index order
//! and thresholds in ascending order; a candidate replaces the incumbent only
//! when it is better by more than [`TIE_TOLERANCE`], so ties resolve to the
//! smallest feature and then the smallest threshold.

mod oracle;

pub use oracle::{oracle_best_split_lebesgue, oracle_best_split_riemann, ORACLE_MAX_NODE};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::stats::CompensatedSum;

/// Gains closer than this are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// A set of rows belonging to one node, with cached response statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeView {
    indices: Vec<usize>,
    sum: f64,
    sum_sq: f64,
}

impl NodeView {
    pub fn new(ds: &Dataset, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("node must contain at least one point"));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= ds.n()) {
            return Err(invalid(format!(
                "row index {i} out of range for {} rows",
                ds.n()
            )));
        }
        let y = ds.target();
        let mut sum = CompensatedSum::new();
        let mut sum_sq = CompensatedSum::new();
        for &i in &indices {
            sum.add(y[i]);
            sum_sq.add(y[i] * y[i]);
        }
        Ok(Self {
            indices,
            sum: sum.value(),
            sum_sq: sum_sq.value(),
        })
    }

    /// Every row of the dataset.
    pub fn root(ds: &Dataset) -> Self {
        Self::new(ds, (0..ds.n()).collect()).expect("dataset is nonempty")
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn count(&self) -> usize {
        self.indices.len()
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count() as f64
    }

    /// Mean squared deviation of the node's responses (two-pass).
    pub fn mean_sq_deviation(&self, ds: &Dataset) -> f64 {
        let y = ds.target();
        let m = self.mean();
        let mut acc = CompensatedSum::new();
        for &i in &self.indices {
            acc.add((y[i] - m) * (y[i] - m));
        }
        acc.value() / self.count() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannSplit {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left_count: usize,
    pub right_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LebesgueSplit {
    pub threshold: f64,
    pub gain: f64,
    pub down_count: usize,
    pub up_count: usize,
}

/// Both candidate splits of a node and the resulting control probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitEvaluation {
    pub riemann: Option<RiemannSplit>,
    pub lebesgue: Option<LebesgueSplit>,
    pub p_tilde: Option<f64>,
}

/// Threshold `z` with `a < z <= b`, so that `v < z` selects exactly the values `<= a`.
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) * 0.5;
    if m > a && m <= b {
        m
    } else {
        b
    }
}

/// Reusable buffer for the sort-and-scan kernels.
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    pairs: Vec<(f64, f64)>,
}

/// Running-sum scan over `(key, centered response)` pairs sorted by key.
/// Returns `(threshold, gain, left_count)` of the best cut, or `None` if
/// the key is constant.
fn scan_sorted(pairs: &[(f64, f64)]) -> Option<(f64, f64, usize)> {
    let n = pairs.len();
    let nf = n as f64;
    let mut total = CompensatedSum::new();
    for &(_, c) in pairs {
        total.add(c);
    }
    let total = total.value();
    let base = total * total / nf;

    let mut best: Option<(f64, f64, usize)> = None;
    let mut left = CompensatedSum::new();
    for i in 0..n - 1 {
        left.add(pairs[i].1);
        let (a, b) = (pairs[i].0, pairs[i + 1].0);
        if a >= b {
            continue;
        }
        let n_left = (i + 1) as f64;
        let n_right = nf - n_left;
        let s_left = left.value();
        let s_right = total - s_left;
        let gain = ((s_left * s_left / n_left + s_right * s_right / n_right - base) / nf).max(0.0);
        if best.is_none_or(|(_, g, _)| gain > g + TIE_TOLERANCE) {
            best = Some((midpoint(a, b), gain, i + 1));
        }
    }
    best
}

/// Fast Riemann search. `features` must be sorted ascending and in range.
pub(crate) fn riemann_kernel(
    ds: &Dataset,
    indices: &[usize],
    mean: f64,
    features: &[usize],
    scratch: &mut Scratch,
) -> Option<RiemannSplit> {
    let y = ds.target();
    let n = indices.len();
    let mut best: Option<RiemannSplit> = None;
    for &j in features {
        let x = ds.feature(j);
        scratch.pairs.clear();
        scratch
            .pairs
            .extend(indices.iter().map(|&i| (x[i], y[i] - mean)));
        scratch.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((threshold, gain, left_count)) = scan_sorted(&scratch.pairs) {
            if best.is_none_or(|b| gain > b.gain + TIE_TOLERANCE) {
                best = Some(RiemannSplit {
                    feature: j,
                    threshold,
                    gain,
                    left_count,
                    right_count: n - left_count,
                });
            }
        }
    }
    best
}

pub(crate) fn lebesgue_kernel(
    ds: &Dataset,
    indices: &[usize],
    mean: f64,
    scratch: &mut Scratch,
) -> Option<LebesgueSplit> {
    let y = ds.target();
    let n = indices.len();
    scratch.pairs.clear();
    scratch
        .pairs
        .extend(indices.iter().map(|&i| (y[i], y[i] - mean)));
    scratch.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    scan_sorted(&scratch.pairs).map(|(threshold, gain, down_count)| LebesgueSplit {
        threshold,
        gain,
        down_count,
        up_count: n - down_count,
    })
}

pub(crate) fn sorted_features(ds: &Dataset, features: &[usize]) -> Result<Vec<usize>> {
    if features.is_empty() {
        return Err(invalid("selected feature set is empty"));
    }
    if let Some(&j) = features.iter().find(|&&j| j >= ds.d()) {
        return Err(invalid(format!(
            "feature {j} out of range for {} features",
            ds.d()
        )));
    }
    let mut f = features.to_vec();
    f.sort_unstable();
    f.dedup();
    Ok(f)
}

fn require_splittable(node: &NodeView) -> Result<()> {
    if node.count() < 2 {
        return Err(invalid(format!(
            "node has {} point(s), need at least 2 to split",
            node.count()
        )));
    }
    Ok(())
}

/// Best feature-axis cut among `selected_features`; `None` when every selected
/// feature is constant on the node.
pub fn best_riemann_split(
    ds: &Dataset,
    node: &NodeView,
    selected_features: &[usize],
) -> Result<Option<RiemannSplit>> {
    let features = sorted_features(ds, selected_features)?;
    require_splittable(node)?;
    Ok(riemann_kernel(
        ds,
        node.indices(),
        node.mean(),
        &features,
        &mut Scratch::default(),
    ))
}

/// Best response-axis cut; `None` when all responses in the node are equal.
pub fn best_lebesgue_split(ds: &Dataset, node: &NodeView) -> Result<Option<LebesgueSplit>> {
    require_splittable(node)?;
    Ok(lebesgue_kernel(
        ds,
        node.indices(),
        node.mean(),
        &mut Scratch::default(),
    ))
}

/// Probability of taking a Riemann cut: `L~ / (L + L~)`. `None` when both gains are zero.
pub fn compute_p_tilde(riemann_gain: f64, lebesgue_gain: f64) -> Result<Option<f64>> {
    for (name, g) in [("riemann", riemann_gain), ("lebesgue", lebesgue_gain)] {
        if !(g.is_finite() && g >= 0.0) {
            return Err(invalid(format!(
                "{name} gain must be finite and nonnegative, got {g}"
            )));
        }
    }
    let total = riemann_gain + lebesgue_gain;
    if total == 0.0 {
        Ok(None)
    } else {
        Ok(Some(lebesgue_gain / total))
    }
}

/// `p~` for a node's best gains. The best Lebesgue gain dominates the best
/// Riemann gain exactly; when both cuts induce the same partition the two
/// sums can still disagree in the last bit, so the Lebesgue gain is raised
/// to the Riemann gain before forming the ratio.
pub(crate) fn node_p_tilde(riemann_gain: f64, lebesgue_gain: f64) -> Result<Option<f64>> {
    compute_p_tilde(riemann_gain, lebesgue_gain.max(riemann_gain))
}

/// Both best splits of a node and the data-driven p~.
pub fn evaluate_node(
    ds: &Dataset,
    node: &NodeView,
    selected_features: &[usize],
) -> Result<SplitEvaluation> {
    let riemann = best_riemann_split(ds, node, selected_features)?;
    let lebesgue = best_lebesgue_split(ds, node)?;
    let p_tilde = node_p_tilde(
        riemann.map_or(0.0, |s| s.gain),
        lebesgue.map_or(0.0, |s| s.gain),
    )?;
    Ok(SplitEvaluation {
        riemann,
        lebesgue,
        p_tilde,
    })
}
