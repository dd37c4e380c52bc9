use std::fmt::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::forest::{fit_forest, predict_batch, ForestParams};
use crate::rng::RandomState;
use crate::synth::{Model, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub fit_seconds: f64,
    pub predict_seconds: f64,
}

/// Wall-clock fit and predict times on sparse-model data of each size.
/// Prediction is timed on a fresh sample of the same size.
pub fn bench_scaling(sizes: &[usize], params: &ForestParams, seed: u64) -> Result<Vec<BenchRow>> {
    if sizes.is_empty() {
        return Err(invalid("benchmark needs at least one size"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(format!(
            "benchmark sizes must be strictly ascending, got {sizes:?}"
        )));
    }
    let root = RandomState::new(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let train =
            SyntheticSpec::new(Model::Sparse, n, root.child(n as u64).child(0).key()).generate()?;
        let test =
            SyntheticSpec::new(Model::Sparse, n, root.child(n as u64).child(1).key()).generate()?;
        let start = Instant::now();
        let forest = fit_forest(&train, params)?;
        let fit_seconds = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let preds = predict_batch(&forest, &test)?;
        let predict_seconds = start.elapsed().as_secs_f64();
        debug_assert_eq!(preds.len(), n);
        rows.push(BenchRow {
            n,
            fit_seconds,
            predict_seconds,
        });
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("n,fit_seconds,predict_seconds\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.n, r.fit_seconds, r.predict_seconds)
            .expect("writing to a String");
    }
    out
}
