//! Corrected resampled t-test for comparing two learners over resampled
//! train/test experiments. The variance of the mean difference is inflated
//! by `1/V + n2/n1` to account for overlapping training sets.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Result};
use crate::stats::{mean, sample_sd};

/// Two-sided significance level.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    /// Test statistic; infinite when `sigma_hat == 0` and the mean difference is not.
    pub t: f64,
    #[serde(rename = "V")]
    pub v: usize,
    /// Training-set size per experiment.
    pub n1: f64,
    /// Test-set size per experiment.
    pub n2: f64,
    /// `n2 / n1` as used in the variance correction.
    pub ratio: f64,
    pub mean_diff: f64,
    /// Sample standard deviation of the differences (`V - 1` denominator).
    pub sigma_hat: f64,
    pub df: usize,
    pub p_value: f64,
    /// Two-sided critical value of Student-t with `df` degrees of freedom.
    pub critical: f64,
    pub significant: bool,
    /// Set when the differences have zero spread but a nonzero mean.
    pub degenerate: bool,
}

/// Corrected resampled t-test on per-experiment differences `r`.
pub fn corrected_t(r: &[f64], n1: usize, n2: usize) -> Result<TTestResult> {
    if n1 < 1 || n2 < 1 {
        return Err(invalid(format!(
            "training and test sizes must be positive, got {n1} and {n2}"
        )));
    }
    corrected_t_sizes(r, n1 as f64, n2 as f64, n2 as f64 / n1 as f64)
}

/// Same test with an explicit `n2/n1` ratio; `n1` and `n2` are recorded as given.
pub fn corrected_t_sizes(r: &[f64], n1: f64, n2: f64, ratio: f64) -> Result<TTestResult> {
    let v = r.len();
    if v < 2 {
        return Err(invalid(format!("need at least 2 differences, got {v}")));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(invalid("differences must be finite"));
    }
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(invalid(format!(
            "n2/n1 ratio must be positive, got {ratio}"
        )));
    }
    let mean_diff = mean(r);
    let sigma_hat = sample_sd(r);
    let df = v - 1;
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    let critical = dist.inverse_cdf(1.0 - SIGNIFICANCE_LEVEL / 2.0);

    let (t, degenerate) = if sigma_hat == 0.0 {
        if mean_diff == 0.0 {
            (0.0, false)
        } else {
            (f64::INFINITY.copysign(mean_diff), true)
        }
    } else {
        (
            mean_diff / ((1.0 / v as f64 + ratio) * sigma_hat * sigma_hat).sqrt(),
            false,
        )
    };
    let p_value = if t.is_infinite() {
        0.0
    } else {
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Ok(TTestResult {
        t,
        v,
        n1,
        n2,
        ratio,
        mean_diff,
        sigma_hat,
        df,
        p_value,
        critical,
        significant: t.abs() > critical,
        degenerate,
    })
}
