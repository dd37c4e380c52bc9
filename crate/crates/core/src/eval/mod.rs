//! Model comparison: cross-validation, significance testing, tuning and timing.

mod bench;
mod cv;
mod ttest;
mod tune;

pub use bench::{bench_csv, bench_scaling, BenchRow};
pub use cv::{margin_of_error, run_cv_comparison, CvReport, Z_95};
pub use ttest::{corrected_t, corrected_t_sizes, TTestResult, SIGNIFICANCE_LEVEL};
pub use tune::{three_way_split, tune, Ranked, RfCell, RlfCell, TuneGrid, TuneReport};
