//! Grid tuning on a train/validation/test split.
//!
//! Every grid cell is fitted on the training part and scored on the
//! validation part. The best cell of each family is then scored once on the
//! held-out test part.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::forest::{fit_forest, mse, predict_batch, ForestParams};
use crate::rng::RandomState;
use crate::tree::{PMode, TreeParams};

const SPLIT: u64 = 1;
const FOREST: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneGrid {
    /// Fixed Riemann probabilities tried for the Riemann-Lebesgue forest.
    pub rlf_p: Vec<f64>,
    pub rlf_m_local: Vec<usize>,
    #[serde(default = "default_rlf_m_trees")]
    pub rlf_m_trees: usize,
    #[serde(default = "default_rlf_alpha")]
    pub rlf_alpha: f64,
    #[serde(default = "default_min_node")]
    pub rlf_min_node: usize,
    pub rf_alpha: Vec<f64>,
    pub rf_min_node: Vec<usize>,
    pub rf_m_trees: Vec<usize>,
    /// Train, validation and test fractions.
    #[serde(default = "default_ratios")]
    pub ratios: [f64; 3],
}

fn default_rlf_m_trees() -> usize {
    100
}
fn default_rlf_alpha() -> f64 {
    0.632
}
fn default_min_node() -> usize {
    5
}
fn default_ratios() -> [f64; 3] {
    [0.6, 0.2, 0.2]
}

impl TuneGrid {
    /// The grid used for the two one-dimensional examples.
    pub fn examples() -> Self {
        Self {
            rlf_p: vec![0.2, 0.4, 0.6, 0.8],
            rlf_m_local: vec![10, 20, 50],
            rlf_m_trees: default_rlf_m_trees(),
            rlf_alpha: default_rlf_alpha(),
            rlf_min_node: default_min_node(),
            rf_alpha: vec![0.5, 0.63, 0.8],
            rf_min_node: vec![5, 10, 15],
            rf_m_trees: vec![50, 100, 150, 200],
            ratios: default_ratios(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rlf_p.is_empty()
            || self.rlf_m_local.is_empty()
            || self.rf_alpha.is_empty()
            || self.rf_min_node.is_empty()
            || self.rf_m_trees.is_empty()
        {
            return Err(invalid("every tuning value list must be nonempty"));
        }
        if self.ratios.iter().any(|r| r.is_nan() || *r <= 0.0)
            || (self.ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(invalid(format!(
                "split ratios must be positive and sum to 1, got {:?}",
                self.ratios
            )));
        }
        Ok(())
    }

    fn rlf_cells(&self, seed: u64) -> Vec<(RlfCell, ForestParams)> {
        let mut cells = Vec::new();
        for &p in &self.rlf_p {
            for &m_local in &self.rlf_m_local {
                let params = ForestParams {
                    m_trees: self.rlf_m_trees,
                    alpha: self.rlf_alpha,
                    tree: TreeParams {
                        min_node: self.rlf_min_node,
                        mtry: None,
                        m_local,
                        p_mode: PMode::Fixed(p),
                    },
                    seed,
                };
                cells.push((RlfCell { p, m_local }, params));
            }
        }
        cells
    }

    fn rf_cells(&self, seed: u64) -> Vec<(RfCell, ForestParams)> {
        let mut cells = Vec::new();
        for &alpha in &self.rf_alpha {
            for &min_node in &self.rf_min_node {
                for &m_trees in &self.rf_m_trees {
                    let params = ForestParams {
                        m_trees,
                        alpha,
                        tree: TreeParams {
                            min_node,
                            ..TreeParams::default()
                        },
                        seed,
                    }
                    .rf_baseline();
                    cells.push((
                        RfCell {
                            alpha,
                            min_node,
                            m_trees,
                        },
                        params,
                    ));
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlfCell {
    pub p: f64,
    pub m_local: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfCell {
    pub alpha: f64,
    pub min_node: usize,
    pub m_trees: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ranked<C> {
    pub rank: usize,
    /// Position of the cell in grid enumeration order.
    pub grid_index: usize,
    #[serde(flatten)]
    pub cell: C,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub best_rlf: RlfCell,
    pub best_rf: RfCell,
    pub test_mse_rlf: f64,
    pub test_mse_rf: f64,
    pub rlf_table: Vec<Ranked<RlfCell>>,
    pub rf_table: Vec<Ranked<RfCell>>,
}

/// Shuffled train/validation/test index sets.
pub fn three_way_split(n: usize, ratios: [f64; 3], seed: u64) -> Result<[Vec<usize>; 3]> {
    let n_train = (ratios[0] * n as f64).round() as usize;
    let n_val = (ratios[1] * n as f64).round() as usize;
    if n_train < 2 || n_val < 1 || n_train + n_val >= n {
        return Err(invalid(format!(
            "{n} rows cannot be split with ratios {ratios:?}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut RandomState::new(seed).child(SPLIT).rng());
    let mut train = order[..n_train].to_vec();
    let mut val = order[n_train..n_train + n_val].to_vec();
    let mut test = order[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok([train, val, test])
}

fn score(train: &Dataset, eval: &Dataset, params: &ForestParams) -> Result<f64> {
    let forest = fit_forest(train, params)?;
    mse(&predict_batch(&forest, eval)?, eval.target())
}

fn rank<C: Copy>(cells: &[(C, ForestParams)], scores: &[f64]) -> Vec<Ranked<C>> {
    let mut order: Vec<usize> = (0..cells.len()).collect();
    // stable: equal scores keep grid order
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order
        .into_iter()
        .enumerate()
        .map(|(r, i)| Ranked {
            rank: r + 1,
            grid_index: i,
            cell: cells[i].0,
            validation_mse: scores[i],
        })
        .collect()
}

pub fn tune(ds: &Dataset, grid: &TuneGrid, seed: u64) -> Result<TuneReport> {
    grid.validate()?;
    let [train_idx, val_idx, test_idx] = three_way_split(ds.n(), grid.ratios, seed)?;
    let train = ds.subset(&train_idx);
    let val = ds.subset(&val_idx);
    let test = ds.subset(&test_idx);
    let forest_seed = RandomState::new(seed).child(FOREST).key();

    let rlf_cells = grid.rlf_cells(forest_seed);
    let rf_cells = grid.rf_cells(forest_seed);
    let rlf_scores: Vec<f64> = rlf_cells
        .par_iter()
        .map(|(_, p)| score(&train, &val, p))
        .collect::<Result<_>>()?;
    let rf_scores: Vec<f64> = rf_cells
        .par_iter()
        .map(|(_, p)| score(&train, &val, p))
        .collect::<Result<_>>()?;

    let rlf_table = rank(&rlf_cells, &rlf_scores);
    let rf_table = rank(&rf_cells, &rf_scores);
    let best_rlf = rlf_table[0];
    let best_rf = rf_table[0];
    let (test_mse_rlf, test_mse_rf) = rayon::join(
        || score(&train, &test, &rlf_cells[best_rlf.grid_index].1),
        || score(&train, &test, &rf_cells[best_rf.grid_index].1),
    );
    Ok(TuneReport {
        n_train: train.n(),
        n_validation: val.n(),
        n_test: test.n(),
        best_rlf: best_rlf.cell,
        best_rf: best_rf.cell,
        test_mse_rlf: test_mse_rlf?,
        test_mse_rf: test_mse_rf?,
        rlf_table,
        rf_table,
    })
}
