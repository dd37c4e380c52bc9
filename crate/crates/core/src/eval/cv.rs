use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ttest::{corrected_t_sizes, TTestResult};
use crate::dataset::{stratified_folds, Dataset, FoldAssignment};
use crate::error::Result;
use crate::forest::{fit_forest, mse, predict_batch, ForestParams};
use crate::rng::RandomState;
use crate::stats::{mean, sample_sd};

/// z-value of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    #[serde(rename = "V")]
    pub v: usize,
    pub per_fold_mse_a: Vec<f64>,
    pub per_fold_mse_b: Vec<f64>,
    pub mean_a: f64,
    pub mean_b: f64,
    pub margin_a: f64,
    pub margin_b: f64,
    pub ttest: TTestResult,
    /// The fold assignment both configurations were evaluated on.
    pub folds: FoldAssignment,
}

/// `1.96 * sd / sqrt(V)` with the sample standard deviation.
pub fn margin_of_error(fold_values: &[f64]) -> f64 {
    Z_95 * sample_sd(fold_values) / (fold_values.len() as f64).sqrt()
}

/// Seed used for a configuration on one fold; depends only on the
/// configuration's own seed and the fold index.
fn fold_seed(seed: u64, fold: usize) -> u64 {
    RandomState::new(seed).child(fold as u64).key()
}

/// Stratified V-fold comparison of two forest configurations. Differences
/// are `mse_a - mse_b`, so a negative t favors configuration A.
pub fn run_cv_comparison(
    ds: &Dataset,
    v: usize,
    params_a: &ForestParams,
    params_b: &ForestParams,
    seed: u64,
) -> Result<CvReport> {
    let folds = stratified_folds(ds, v, seed)?;
    let per_fold: Vec<(f64, f64)> = (0..v)
        .into_par_iter()
        .map(|f| {
            let train = ds.subset(&folds.train_indices(f));
            let test = ds.subset(&folds.test_indices(f));
            let eval = |params: &ForestParams| -> Result<f64> {
                let forest = fit_forest(&train, &params.with_seed(fold_seed(params.seed, f)))?;
                mse(&predict_batch(&forest, &test)?, test.target())
            };
            Ok((eval(params_a)?, eval(params_b)?))
        })
        .collect::<Result<_>>()?;

    let (a, b): (Vec<f64>, Vec<f64>) = per_fold.into_iter().unzip();
    let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let n = ds.n() as f64;
    let n2 = n / v as f64;
    let ttest = corrected_t_sizes(&diffs, n - n2, n2, 1.0 / (v - 1) as f64)?;
    Ok(CvReport {
        v,
        mean_a: mean(&a),
        mean_b: mean(&b),
        margin_a: margin_of_error(&a),
        margin_b: margin_of_error(&b),
        per_fold_mse_a: a,
        per_fold_mse_b: b,
        ttest,
        folds,
    })
}
