//! Seeded synthetic regression models: a sparse additive model in a
//! high-dimensional cube, a noisy sine and a two-component Gaussian mixture.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::rng::RandomState;

/// Number of coordinates that enter the sparse model's mean.
pub const SPARSE_EFFECTIVE_DIM: usize = 35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Sparse,
    Sine,
    Mixture,
}

impl Model {
    pub fn default_sigma(self) -> f64 {
        match self {
            Model::Sparse => 1.3,
            Model::Sine | Model::Mixture => 1.0,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Sparse => "sparse",
            Model::Sine => "sine",
            Model::Mixture => "mixture",
        })
    }
}

impl FromStr for Model {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(Model::Sparse),
            "sine" => Ok(Model::Sine),
            "mixture" => Ok(Model::Mixture),
            other => Err(invalid(format!(
                "unknown model `{other}` (expected sparse, sine or mixture)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub model: Model,
    pub n: usize,
    pub seed: u64,
    pub sigma: f64,
    /// Ambient dimension of the sparse model.
    pub d_total: usize,
    /// When set, the sparse model uses `35 + d_noise` dimensions instead of `d_total`.
    pub d_noise_override: Option<usize>,
}

impl SyntheticSpec {
    pub fn new(model: Model, n: usize, seed: u64) -> Self {
        Self {
            model,
            n,
            seed,
            sigma: model.default_sigma(),
            d_total: 100,
            d_noise_override: None,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_d_total(mut self, d_total: usize) -> Self {
        self.d_total = d_total;
        self
    }

    pub fn with_noise_dims(mut self, d_noise: usize) -> Self {
        self.d_noise_override = Some(d_noise);
        self
    }

    pub fn dimension(&self) -> usize {
        match self.model {
            Model::Sparse => self
                .d_noise_override
                .map_or(self.d_total, |k| SPARSE_EFFECTIVE_DIM + k),
            Model::Sine | Model::Mixture => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("sample count must be at least 1"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        match self.model {
            Model::Sparse if self.dimension() < SPARSE_EFFECTIVE_DIM => Err(invalid(format!(
                "sparse model needs at least {SPARSE_EFFECTIVE_DIM} dimensions, got {}",
                self.dimension()
            ))),
            Model::Mixture if self.sigma != 1.0 => {
                Err(invalid("mixture model noise is fixed at sigma = 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn generate(&self) -> Result<Dataset> {
        match self.model {
            Model::Sparse => gen_sparse(self),
            Model::Sine => gen_sine(self),
            Model::Mixture => gen_mixture(self),
        }
    }
}

/// `10 * prod_{j<5} exp(-2 x_j^2) + sum_{5<=j<35} x_j`.
pub fn sparse_mean(x: &[f64]) -> f64 {
    let bump: f64 = x[..5].iter().map(|v| (-2.0 * v * v).exp()).product();
    let linear: f64 = x[5..SPARSE_EFFECTIVE_DIM].iter().sum();
    10.0 * bump + linear
}

pub fn sine_mean(x: f64) -> f64 {
    (16.0 * x).sin()
}

/// Component mean of the mixture; `component` is 1 or 2.
pub fn mixture_mean(x: f64, component: u8) -> f64 {
    if component == 2 {
        10.0 + 5.0 * x
    } else {
        5.0 * x
    }
}

fn check_model(spec: &SyntheticSpec, model: Model) -> Result<()> {
    if spec.model != model {
        return Err(invalid(format!(
            "spec is for the {} model, not {model}",
            spec.model
        )));
    }
    spec.validate()
}

pub fn gen_sparse(spec: &SyntheticSpec) -> Result<Dataset> {
    check_model(spec, Model::Sparse)?;
    let d = spec.dimension();
    let mut rng = RandomState::new(spec.seed).rng();
    let mut columns = vec![Vec::with_capacity(spec.n); d];
    let mut target = Vec::with_capacity(spec.n);
    let mut row = vec![0.0; d];
    for _ in 0..spec.n {
        for v in row.iter_mut() {
            *v = rng.random::<f64>();
        }
        let eps: f64 = rng.sample(StandardNormal);
        target.push(sparse_mean(&row) + spec.sigma * eps);
        for (col, &v) in columns.iter_mut().zip(&row) {
            col.push(v);
        }
    }
    Dataset::from_columns(columns, target)
}

pub fn gen_sine(spec: &SyntheticSpec) -> Result<Dataset> {
    check_model(spec, Model::Sine)?;
    let mut rng = RandomState::new(spec.seed).rng();
    let mut x = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let xi = rng.random::<f64>();
        let eps: f64 = rng.sample(StandardNormal);
        x.push(xi);
        y.push(sine_mean(xi) + spec.sigma * eps);
    }
    Dataset::from_columns(vec![x], y)
}

/// The latent component is drawn per row and discarded.
pub fn gen_mixture(spec: &SyntheticSpec) -> Result<Dataset> {
    check_model(spec, Model::Mixture)?;
    let mut rng = RandomState::new(spec.seed).rng();
    let mut x = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let component = if rng.random::<bool>() { 2 } else { 1 };
        let xi: f64 = rng.sample(StandardNormal);
        let eps: f64 = rng.sample(StandardNormal);
        x.push(xi);
        y.push(mixture_mean(xi, component) + spec.sigma * eps);
    }
    Dataset::from_columns(vec![x], y)
}
