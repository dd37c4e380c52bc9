//! `rlf`: synthesize data, train and apply Riemann-Lebesgue forests, and run
//! the comparison experiments.
//!
//! Every failure ends the process with a single JSON line on stderr and a
//! nonzero exit status: 2 for usage errors, 3 for data errors, 4 otherwise.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use rlforest::eval::{bench_csv, bench_scaling, run_cv_comparison, tune, TuneGrid};
use rlforest::normality::{run_normality, NormalityConfig};
use rlforest::{
    load_csv, load_forest, predict_batch, save_forest, write_atomic, Dataset, Error, ErrorKind,
    ForestParams, Model, PMode, SyntheticSpec, TreeParams,
};

#[derive(Parser, Debug)]
#[command(
    name = "rlf",
    version,
    about = "Riemann-Lebesgue forests for regression"
)]
struct Cli {
    /// Root seed; all randomness is derived from it.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads, 0 for one per core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
    /// Fit a forest and save it as JSON.
    Train(TrainArgs),
    /// Predict every row of a CSV with a saved forest.
    Predict(PredictArgs),
    /// Compare two configurations by stratified cross-validation.
    Cv(CvArgs),
    /// Grid-tune a Riemann-Lebesgue forest and a random forest.
    Tune(TuneArgs),
    /// Time fitting and prediction over growing sample sizes.
    Bench(BenchArgs),
    /// Monte Carlo normality check of forest predictions.
    Normality(NormalityArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Sparse,
    Sine,
    Mixture,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::Sparse => Model::Sparse,
            ModelArg::Sine => Model::Sine,
            ModelArg::Mixture => Model::Mixture,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PModeArg {
    Data,
    Fixed,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long)]
    n: usize,
    /// Noise standard deviation; defaults to the model's own.
    #[arg(long)]
    sigma: Option<f64>,
    /// Dimension of the sparse model.
    #[arg(long)]
    d_total: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "y")]
    target: String,
    /// Fit on log(y); the target must be positive.
    #[arg(long)]
    log_target: bool,
}

#[derive(Args, Debug, Clone)]
struct ForestArgs {
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Trees in each local forest of a Lebesgue node.
    #[arg(long, default_value_t = 10)]
    local_trees: usize,
    /// Subsampling ratio.
    #[arg(long, default_value_t = 0.632)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    min_node: usize,
    /// Features tried per node; defaults to max(1, d/3).
    #[arg(long)]
    mtry: Option<usize>,
}

impl ForestArgs {
    fn params(&self, p_mode: PMode, seed: u64) -> ForestParams {
        ForestParams {
            m_trees: self.trees,
            alpha: self.alpha,
            tree: TreeParams {
                min_node: self.min_node,
                mtry: self.mtry,
                m_local: self.local_trees,
                p_mode,
            },
            seed,
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    forest: ForestArgs,
    #[arg(long, value_enum, default_value = "data")]
    p_mode: PModeArg,
    /// Riemann probability for `--p-mode fixed`.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Column to drop before predicting; a column named `y` is dropped by default.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    forest: ForestArgs,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, value_enum, default_value = "data")]
    p_mode_a: PModeArg,
    #[arg(long)]
    p_a: Option<f64>,
    #[arg(long, value_enum, default_value = "fixed")]
    p_mode_b: PModeArg,
    #[arg(long)]
    p_b: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[arg(long, conflicts_with = "example", required_unless_present = "example")]
    data: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    target: String,
    /// Tune on 3000 draws of the sine (1) or mixture (2) model.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    example: Option<u8>,
    /// JSON grid; defaults to the built-in example grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated, strictly ascending sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "500,1000,2000,4000")]
    sizes: Vec<usize>,
    #[command(flatten)]
    forest: ForestArgs,
    /// CSV when the name ends in `.csv`, JSON otherwise.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NormalityArgs {
    #[arg(long, value_enum, default_value = "sine")]
    model: ModelArg,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 200)]
    trees: usize,
    #[arg(long, default_value_t = 300)]
    reps: usize,
    /// Query point, comma-separated; defaults to 0.5 in every coordinate.
    #[arg(long, value_delimiter = ',')]
    x: Option<Vec<f64>>,
    #[arg(long)]
    report: Option<PathBuf>,
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "usage",
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match e.kind() {
            ErrorKind::Usage => (2, "usage"),
            ErrorKind::Data => (3, "data"),
            ErrorKind::Internal => (4, "internal"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            code: 4,
            kind: "internal",
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn p_mode(mode: PModeArg, p: Option<f64>, flag: &str) -> CliResult<PMode> {
    match (mode, p) {
        (PModeArg::Data, None) => Ok(PMode::DataDriven),
        (PModeArg::Data, Some(_)) => Err(Failure::usage(format!(
            "--{flag} requires the fixed p mode"
        ))),
        (PModeArg::Fixed, None) => Err(Failure::usage(format!("fixed p mode requires --{flag}"))),
        (PModeArg::Fixed, Some(p)) if (0.0..=1.0).contains(&p) => Ok(PMode::Fixed(p)),
        (PModeArg::Fixed, Some(p)) => Err(Failure::usage(format!(
            "--{flag} must be in [0, 1], got {p}"
        ))),
    }
}

/// Fails early when an output file could not be created later.
fn check_output(path: &Path) -> CliResult<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(Failure {
            code: 3,
            kind: "data",
            message: format!("output directory {} does not exist", parent.display()),
        });
    }
    if path.is_dir() {
        return Err(Failure {
            code: 3,
            kind: "data",
            message: format!("output path {} is a directory", path.display()),
        });
    }
    Ok(())
}

fn check_report(path: &Option<PathBuf>) -> CliResult<()> {
    path.as_deref().map_or(Ok(()), check_output)
}

fn emit_json<T: Serialize>(value: &T, report: &Option<PathBuf>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    match report {
        Some(path) => write_atomic(path, format!("{text}\n").as_bytes())?,
        None => println!("{text}"),
    }
    Ok(())
}

fn summary(value: serde_json::Value) {
    println!("{value}");
}

fn synth(args: &SynthArgs, seed: u64) -> CliResult<()> {
    check_output(&args.out)?;
    let model = Model::from(args.model);
    let mut spec = SyntheticSpec::new(model, args.n, seed);
    if let Some(sigma) = args.sigma {
        spec = spec.with_sigma(sigma);
    }
    if let Some(d) = args.d_total {
        if model != Model::Sparse {
            return Err(Failure::usage("--d-total applies to the sparse model only"));
        }
        spec = spec.with_d_total(d);
    }
    spec.validate()?;
    let ds = spec.generate()?;
    ds.write_csv(&args.out)?;
    summary(json!({
        "model": model.to_string(),
        "n": ds.n(),
        "d": ds.d(),
        "sigma": spec.sigma,
        "seed": seed,
        "out": args.out,
    }));
    Ok(())
}

fn load(args: &DataArgs) -> CliResult<Dataset> {
    Ok(load_csv(&args.data, &args.target, args.log_target)?)
}

fn train(args: &TrainArgs, seed: u64) -> CliResult<()> {
    let p_mode = p_mode(args.p_mode, args.p, "p")?;
    check_output(&args.out)?;
    let ds = load(&args.data)?;
    let forest = rlforest::fit_forest(&ds, &args.forest.params(p_mode, seed))?;
    save_forest(&forest, &args.out)?;
    let stats = forest.stats();
    summary(json!({
        "n": ds.n(),
        "d": ds.d(),
        "mtry": forest.params.tree.mtry,
        "stats": stats,
        "out": args.out,
    }));
    Ok(())
}

fn predict(args: &PredictArgs) -> CliResult<()> {
    check_output(&args.out)?;
    let forest = load_forest(&args.model)?;
    let target = match &args.target {
        Some(t) => Some(t.clone()),
        None => has_column(&args.data, "y")?.then(|| "y".to_string()),
    };
    let ds = rlforest::dataset::load_features_csv(&args.data, target.as_deref())?;
    let preds = predict_batch(&forest, &ds)?;
    let mut out = String::from("prediction\n");
    for p in &preds {
        out.push_str(&p.to_string());
        out.push('\n');
    }
    write_atomic(&args.out, out.as_bytes())?;
    summary(json!({ "rows": preds.len(), "out": args.out }));
    Ok(())
}

fn has_column(path: &Path, name: &str) -> CliResult<bool> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Failure::from(Error::from(e)))?;
    let headers = rdr.headers().map_err(|e| Failure::from(Error::from(e)))?;
    Ok(headers.iter().any(|h| h == name))
}

fn cv(args: &CvArgs, seed: u64) -> CliResult<()> {
    let a = args
        .forest
        .params(p_mode(args.p_mode_a, args.p_a, "p-a")?, seed);
    let b = args.forest.params(
        p_mode(
            args.p_mode_b,
            args.p_b.or(match args.p_mode_b {
                PModeArg::Fixed => Some(1.0),
                PModeArg::Data => None,
            }),
            "p-b",
        )?,
        seed,
    );
    if args.folds < 2 {
        return Err(Failure::usage("--folds must be at least 2"));
    }
    check_report(&args.report)?;
    let ds = load(&args.data)?;
    let report = run_cv_comparison(&ds, args.folds, &a, &b, seed)?;
    emit_json(
        &json!({ "config_a": a, "config_b": b, "cv": report }),
        &args.report,
    )?;
    if args.report.is_some() {
        summary(json!({
            "V": report.v,
            "mean_a": report.mean_a,
            "mean_b": report.mean_b,
            "t": report.ttest.t,
            "significant": report.ttest.significant,
        }));
    }
    Ok(())
}

fn tune_cmd(args: &TuneArgs, seed: u64) -> CliResult<()> {
    let grid = match &args.grid {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::from(Error::Io {
                    path: path.clone(),
                    source: e,
                })
            })?;
            serde_json::from_str::<TuneGrid>(&text).map_err(|e| Failure {
                code: 3,
                kind: "data",
                message: format!("grid {}: {e}", path.display()),
            })?
        }
        None => TuneGrid::examples(),
    };
    grid.validate()?;
    check_report(&args.report)?;
    let ds = match (args.example, &args.data) {
        (Some(1), _) => SyntheticSpec::new(Model::Sine, 3000, seed).generate()?,
        (Some(_), _) => SyntheticSpec::new(Model::Mixture, 3000, seed).generate()?,
        (None, Some(path)) => load_csv(path, &args.target, false)?,
        (None, None) => return Err(Failure::usage("one of --data or --example is required")),
    };
    let report = tune(&ds, &grid, seed)?;
    emit_json(
        &json!({ "example": args.example, "seed": seed, "grid": grid, "tune": report }),
        &args.report,
    )?;
    if args.report.is_some() {
        summary(json!({
            "best_rlf": report.best_rlf,
            "best_rf": report.best_rf,
            "test_mse_rlf": report.test_mse_rlf,
            "test_mse_rf": report.test_mse_rf,
        }));
    }
    Ok(())
}

fn bench(args: &BenchArgs, seed: u64) -> CliResult<()> {
    check_report(&args.report)?;
    let params = args.forest.params(PMode::DataDriven, seed);
    let rows = bench_scaling(&args.sizes, &params, seed)?;
    let is_csv = args
        .report
        .as_deref()
        .and_then(Path::extension)
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    match &args.report {
        Some(path) if is_csv => write_atomic(path, bench_csv(&rows).as_bytes())?,
        report => emit_json(&json!({ "params": params, "rows": rows }), report)?,
    }
    if args.report.is_some() {
        summary(json!({ "rows": rows }));
    }
    Ok(())
}

fn normality(args: &NormalityArgs, seed: u64) -> CliResult<()> {
    let model = Model::from(args.model);
    let generator = SyntheticSpec::new(model, args.n, seed);
    let query_point = args
        .x
        .clone()
        .unwrap_or_else(|| vec![0.5; generator.dimension()]);
    let cfg = NormalityConfig {
        n: args.n,
        alpha: args.alpha,
        m_trees: args.trees,
        reps: args.reps,
        query_point,
        generator,
        tree: TreeParams::default(),
        seed,
    };
    cfg.validate()?;
    check_report(&args.report)?;
    let report = run_normality(&cfg)?;
    emit_json(&report, &args.report)?;
    if args.report.is_some() {
        summary(json!({
            "reps": report.reps,
            "ks_distance": report.ks_distance,
            "mean": report.mean,
            "sd": report.sd,
        }));
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure {
                code: 4,
                kind: "internal",
                message: format!("thread pool: {e}"),
            })?;
    }
    match &cli.command {
        Command::Synth(a) => synth(a, cli.seed),
        Command::Train(a) => train(a, cli.seed),
        Command::Predict(a) => predict(a),
        Command::Cv(a) => cv(a, cli.seed),
        Command::Tune(a) => tune_cmd(a, cli.seed),
        Command::Bench(a) => bench(a, cli.seed),
        Command::Normality(a) => normality(a, cli.seed),
    }
}

fn fail(f: Failure) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "error": { "kind": f.kind, "message": f.message } })
    );
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or("invalid arguments");
            return fail(Failure::usage(first.trim_start_matches("error: ")));
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}
