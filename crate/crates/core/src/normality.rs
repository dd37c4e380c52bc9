//! Monte Carlo check of the approximate normality of forest predictions.
//!
//! Each replicate draws a fresh training set, fits a forest and records its
//! prediction at a fixed query point. The replicate predictions are
//! studentized by their own mean and standard deviation and compared with the
//! standard normal CDF through the one-sample Kolmogorov-Smirnov distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::forest::{fit_forest, subsample_size, ForestParams};
use crate::rng::RandomState;
use crate::stats::{mean, sample_sd};
use crate::synth::{Model, SyntheticSpec};
use crate::tree::TreeParams;

pub const MIN_REPS: usize = 50;

const DATA: u64 = 1;
const FOREST: u64 = 2;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Exact one-sample Kolmogorov-Smirnov distance between the empirical CDF of
/// `sample` and the standard normal CDF.
pub fn ks_statistic(sample: &[f64]) -> Result<f64> {
    if sample.len() < 2 {
        return Err(invalid(format!(
            "KS statistic needs at least 2 values, got {}",
            sample.len()
        )));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(invalid("KS statistic needs finite values"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = normal_cdf(x);
        let above = (i + 1) as f64 / r - cdf;
        let below = cdf - i as f64 / r;
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// `(x - mean) / sd` with the sample standard deviation.
pub fn studentize(xs: &[f64]) -> Option<Vec<f64>> {
    let sd = sample_sd(xs);
    if sd.is_nan() || sd <= 0.0 {
        return None;
    }
    let m = mean(xs);
    Some(xs.iter().map(|x| (x - m) / sd).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityConfig {
    /// Training-set size per replicate.
    pub n: usize,
    /// Subagging ratio.
    pub alpha: f64,
    pub m_trees: usize,
    pub reps: usize,
    pub query_point: Vec<f64>,
    /// Data model; its `n` and `seed` are replaced per replicate.
    pub generator: SyntheticSpec,
    pub tree: TreeParams,
    pub seed: u64,
}

impl NormalityConfig {
    /// Sine model at `x = 0.5`.
    pub fn sine(n: usize, alpha: f64, m_trees: usize, reps: usize, seed: u64) -> Self {
        Self {
            n,
            alpha,
            m_trees,
            reps,
            query_point: vec![0.5],
            generator: SyntheticSpec::new(Model::Sine, n, seed),
            tree: TreeParams::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(invalid(format!(
                "need at least {MIN_REPS} replicates, got {}",
                self.reps
            )));
        }
        if self.m_trees < 1 {
            return Err(invalid("m_trees must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if subsample_size(self.n, self.alpha) < 2 {
            return Err(invalid(format!(
                "subsample of {} rows at alpha {} is below 2",
                self.n, self.alpha
            )));
        }
        let mut spec = self.generator.clone();
        spec.n = self.n;
        spec.validate()?;
        let d = spec.dimension();
        if self.query_point.len() != d {
            return Err(invalid(format!(
                "query point has {} coordinates, model has {d}",
                self.query_point.len()
            )));
        }
        if self.query_point.iter().any(|v| !v.is_finite()) {
            return Err(invalid("query point must be finite"));
        }
        self.tree.validate(d)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub reps: usize,
    /// `None` when the replicate predictions have zero spread.
    pub ks_distance: Option<f64>,
    pub mean: f64,
    pub sd: f64,
    pub degenerate: bool,
    pub predictions: Vec<f64>,
}

/// Summarize replicate predictions (in replicate order).
pub fn normality_report(predictions: Vec<f64>) -> Result<NormalityReport> {
    if predictions.len() < 2 {
        return Err(invalid("need at least 2 replicate predictions"));
    }
    let ks_distance = match studentize(&predictions) {
        Some(z) => Some(ks_statistic(&z)?),
        None => None,
    };
    Ok(NormalityReport {
        reps: predictions.len(),
        ks_distance,
        mean: mean(&predictions),
        sd: sample_sd(&predictions),
        degenerate: ks_distance.is_none(),
        predictions,
    })
}

/// Run `reps` replicates of `replicate(index, stream)` concurrently and
/// summarize them. Streams are derived from `seed` and the replicate index.
pub fn run_replicates<F>(reps: usize, seed: u64, replicate: F) -> Result<NormalityReport>
where
    F: Fn(usize, RandomState) -> Result<f64> + Sync,
{
    let root = RandomState::new(seed);
    let predictions = (0..reps)
        .into_par_iter()
        .map(|r| replicate(r, root.child(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    normality_report(predictions)
}

pub fn run_normality(cfg: &NormalityConfig) -> Result<NormalityReport> {
    cfg.validate()?;
    run_replicates(cfg.reps, cfg.seed, |_, stream| {
        let mut spec = cfg.generator.clone();
        spec.n = cfg.n;
        spec.seed = stream.child(DATA).key();
        let ds = spec.generate()?;
        let params = ForestParams {
            m_trees: cfg.m_trees,
            alpha: cfg.alpha,
            tree: cfg.tree,
            seed: stream.child(FOREST).key(),
        };
        fit_forest(&ds, &params)?.predict(&cfg.query_point)
    })
}
