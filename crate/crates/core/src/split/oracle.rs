//! Quadratic brute-force split search used to cross-check the fast kernels.
//!
//! Every candidate threshold is evaluated by materializing both children and
//! recomputing their sums of squared deviations from scratch with two-pass
//! means. No running sums are shared between candidates.

use super::{midpoint, sorted_features, LebesgueSplit, NodeView, RiemannSplit, TIE_TOLERANCE};
use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};

/// Largest node the oracles accept.
pub const ORACLE_MAX_NODE: usize = 200;

fn sse(values: &[f64]) -> f64 {
    let m = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - m) * (v - m)).sum()
}

fn distinct_sorted(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

fn guard(node: &NodeView) -> Result<()> {
    if node.count() > ORACLE_MAX_NODE {
        return Err(Error::OracleTooLarge {
            n: node.count(),
            limit: ORACLE_MAX_NODE,
        });
    }
    if node.count() < 2 {
        return Err(invalid("node has fewer than 2 points"));
    }
    Ok(())
}

/// Gain of cutting the node's responses into `key < z` and `key >= z`.
fn naive_gain(keys: &[f64], y: &[f64], z: f64) -> (f64, usize) {
    let below: Vec<f64> = keys
        .iter()
        .zip(y)
        .filter(|(k, _)| **k < z)
        .map(|(_, v)| *v)
        .collect();
    let above: Vec<f64> = keys
        .iter()
        .zip(y)
        .filter(|(k, _)| **k >= z)
        .map(|(_, v)| *v)
        .collect();
    let gain = (sse(y) - sse(&below) - sse(&above)) / y.len() as f64;
    (gain, below.len())
}

pub fn oracle_best_split_riemann(
    ds: &Dataset,
    node: &NodeView,
    selected_features: &[usize],
) -> Result<Option<RiemannSplit>> {
    let features = sorted_features(ds, selected_features)?;
    guard(node)?;
    let y: Vec<f64> = node.indices().iter().map(|&i| ds.target()[i]).collect();
    let mut best: Option<RiemannSplit> = None;
    for j in features {
        let keys: Vec<f64> = node.indices().iter().map(|&i| ds.value(i, j)).collect();
        let values = distinct_sorted(keys.clone());
        for w in values.windows(2) {
            let z = midpoint(w[0], w[1]);
            let (gain, left_count) = naive_gain(&keys, &y, z);
            if best.is_none_or(|b| gain > b.gain + TIE_TOLERANCE) {
                best = Some(RiemannSplit {
                    feature: j,
                    threshold: z,
                    gain,
                    left_count,
                    right_count: y.len() - left_count,
                });
            }
        }
    }
    Ok(best)
}

pub fn oracle_best_split_lebesgue(ds: &Dataset, node: &NodeView) -> Result<Option<LebesgueSplit>> {
    guard(node)?;
    let y: Vec<f64> = node.indices().iter().map(|&i| ds.target()[i]).collect();
    let mut best: Option<LebesgueSplit> = None;
    for w in distinct_sorted(y.clone()).windows(2) {
        let z = midpoint(w[0], w[1]);
        let (gain, down_count) = naive_gain(&y, &y, z);
        if best.is_none_or(|b| gain > b.gain + TIE_TOLERANCE) {
            best = Some(LebesgueSplit {
                threshold: z,
                gain,
                down_count,
                up_count: y.len() - down_count,
            });
        }
    }
    Ok(best)
}
