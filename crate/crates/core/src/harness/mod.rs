//! Cross-validated comparison of resamplers under a logistic-regression
//! classifier, with aggregation, correlation, top-gain and data-size
//! ablation reports.

mod ablation;
mod emit;
mod report;

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

pub use ablation::{ablate_data_fraction, least_squares_slope, AblationReport, AblationRow};
pub use emit::{emit_ablation, emit_report, Format};
pub use report::{
    correlation_report, top_gains, BenchmarkReport, BestCounts, CorrelationRow, MeanStd, ResultTable,
    TableRow, TopGains,
};

use crate::classify::{train_logreg, LogRegConfig};
use crate::data::{fit_minmax, load_csv, stratified_kfold, Dataset, Fold, LabelColumn};
use crate::dragan::{resample_with_dragan, DraganConfig};
use crate::error::{Error, Result};
use crate::metrics::{summarize, ScoredPredictions};
use crate::oversample::{resample, target_count_balance, Method, ResamplePlan, DEFAULT_MIXUP_ALPHA};
use crate::rng::{derive_seed, tag};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOptions {
    pub methods: Vec<Method>,
    pub n_splits: usize,
    pub n_repeats: usize,
    pub seed: u64,
    pub dragan: DraganConfig,
    pub classifier: LogRegConfig,
    /// `None` selects `min(5, N₊ − 1)` per training split.
    pub k_neighbors: Option<usize>,
    pub mixup_alpha: f64,
    /// Aggregate metrics over predictions pooled across the folds of each
    /// repeat instead of averaging per-fold metrics.
    pub pooled: bool,
    pub threads: usize,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            n_splits: 5,
            n_repeats: 3,
            seed: 0,
            dragan: DraganConfig::default(),
            classifier: LogRegConfig::default(),
            k_neighbors: None,
            mixup_alpha: DEFAULT_MIXUP_ALPHA,
            pooled: false,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// Outcome of one (dataset, method, repeat, fold) task.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub dataset: String,
    pub method: Method,
    pub repeat: usize,
    pub fold: usize,
    pub auc: f64,
    pub f1: f64,
    pub g: f64,
    pub threshold: f64,
    /// Resampling plus classifier training only.
    pub wall_time_seconds: f64,
    pub seed: u64,
    pub train_rows: usize,
    pub resampled_rows: usize,
    /// Dataset row indices the scaler and resampler saw.
    pub resampler_input: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub test_scores: Vec<f64>,
    pub test_labels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub dataset: String,
    pub method: Option<Method>,
    pub message: String,
}

/// Independent seed of one task; does not depend on which other methods or
/// datasets are in the run.
pub fn task_seed(seed: u64, dataset: &str, method: Method, repeat: usize, fold: usize) -> u64 {
    derive_seed(seed, &[tag(dataset), tag(method.name()), repeat as u64, fold as u64])
}

pub fn split_seed(seed: u64, dataset: &str) -> u64 {
    derive_seed(seed, &[tag(dataset), tag("split")])
}

/// Resamples a min-max scaled training split with `method`.
pub fn resample_train(train: &Dataset, method: Method, opts: &BenchmarkOptions, seed: u64) -> Result<Dataset> {
    match method {
        Method::Dragan => {
            let cfg = DraganConfig {
                seed,
                ..opts.dragan.clone()
            };
            resample_with_dragan(train, &cfg)
        }
        _ => resample(
            train,
            &ResamplePlan {
                method,
                target_count: target_count_balance(train),
                k_neighbors: opts.k_neighbors,
                alpha: opts.mixup_alpha,
                seed,
            },
        ),
    }
}

/// Scale on the training split, resample it, fit the classifier, and score
/// the untouched test split at its Youden threshold.
pub fn evaluate_fold(ds: &Dataset, fold: &Fold, method: Method, opts: &BenchmarkOptions) -> Result<EvalRecord> {
    let seed = task_seed(opts.seed, &ds.name, method, fold.repeat, fold.fold);
    let train = ds.subset(&fold.train);
    let test = ds.subset(&fold.test);
    let scaler = fit_minmax(&train);
    let train = scaler.apply_dataset(&train);
    let test = scaler.apply_dataset(&test);

    let start = Instant::now();
    let resampled = resample_train(&train, method, opts, seed)?;
    let model = train_logreg(&resampled.features, &resampled.labels_f64(), &opts.classifier)?;
    let wall_time_seconds = start.elapsed().as_secs_f64();

    let scores = model.predict_proba(&test.features)?;
    let sp = ScoredPredictions::new(scores, test.labels.clone())?;
    let s = summarize(&sp)?;
    Ok(EvalRecord {
        dataset: ds.name.clone(),
        method,
        repeat: fold.repeat,
        fold: fold.fold,
        auc: s.auc,
        f1: s.f1,
        g: s.g,
        threshold: s.threshold,
        wall_time_seconds,
        seed,
        train_rows: train.len(),
        resampled_rows: resampled.len(),
        resampler_input: fold.train.clone(),
        test_indices: fold.test.clone(),
        test_scores: sp.scores,
        test_labels: sp.labels,
    })
}

fn check_dataset(ds: &Dataset, opts: &BenchmarkOptions) -> Result<Vec<Fold>> {
    let (_, pos) = ds.class_counts();
    if pos < opts.n_splits {
        return Err(Error::Stratification(format!(
            "`{}` has {pos} minority rows, fewer than {} splits",
            ds.name, opts.n_splits
        )));
    }
    Ok(stratified_kfold(ds, opts.n_splits, opts.n_repeats, split_seed(opts.seed, &ds.name))?.folds)
}

/// Runs every (dataset, method, repeat, fold) task. Failing datasets or
/// methods are recorded and skipped; records are ordered by dataset, method,
/// repeat and fold regardless of completion order.
pub fn run_benchmark(datasets: &[Dataset], opts: &BenchmarkOptions) -> Result<BenchmarkReport> {
    if opts.methods.is_empty() {
        return Err(Error::Config("no methods selected".into()));
    }
    let mut failures = Vec::new();
    let mut tasks: Vec<(usize, Method, Fold)> = Vec::new();
    for (di, ds) in datasets.iter().enumerate() {
        match check_dataset(ds, opts) {
            Ok(folds) => {
                for &m in &opts.methods {
                    tasks.extend(folds.iter().map(|f| (di, m, f.clone())));
                }
            }
            Err(e) => failures.push(Failure {
                dataset: ds.name.clone(),
                method: None,
                message: e.to_string(),
            }),
        }
    }

    let results: Mutex<Vec<Option<Result<EvalRecord>>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = opts.threads.clamp(1, tasks.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((di, m, fold)) = tasks.get(i) else { break };
                let r = evaluate_fold(&datasets[*di], fold, *m, opts);
                results.lock().expect("result lock")[i] = Some(r);
            });
        }
    });

    let mut records = Vec::with_capacity(tasks.len());
    let mut failed: Vec<(usize, Method)> = Vec::new();
    for ((di, m, _), r) in tasks.iter().zip(results.into_inner().expect("result lock")) {
        match r.expect("every task ran") {
            Ok(rec) => records.push(rec),
            Err(e) => {
                if !failed.contains(&(*di, *m)) {
                    failed.push((*di, *m));
                    failures.push(Failure {
                        dataset: datasets[*di].name.clone(),
                        method: Some(*m),
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    // A method that failed on any fold of a dataset is reported as missing
    // there rather than averaged over the surviving folds.
    records.retain(|r| {
        !failed
            .iter()
            .any(|&(di, m)| datasets[di].name == r.dataset && m == r.method)
    });
    let method_rank = |m: Method| opts.methods.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    let dataset_rank = |name: &str| datasets.iter().position(|d| d.name == name).unwrap_or(usize::MAX);
    records.sort_by_key(|r| (dataset_rank(&r.dataset), method_rank(r.method), r.repeat, r.fold));

    Ok(BenchmarkReport {
        methods: opts.methods.clone(),
        datasets: datasets.iter().map(|d| d.name.clone()).collect(),
        records,
        failures,
        pooled: opts.pooled,
    })
}

/// Loads every path (label in the last column) and runs the benchmark.
/// Unloadable files become failures.
pub fn run_benchmark_paths(paths: &[impl AsRef<Path>], opts: &BenchmarkOptions) -> Result<BenchmarkReport> {
    let mut datasets = Vec::new();
    let mut load_failures = Vec::new();
    for p in paths {
        let p = p.as_ref();
        match load_csv(p, &LabelColumn::Last) {
            Ok(ds) => datasets.push(ds),
            Err(e) => load_failures.push(Failure {
                dataset: p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()),
                method: None,
                message: e.to_string(),
            }),
        }
    }
    let mut report = run_benchmark(&datasets, opts)?;
    load_failures.extend(report.failures);
    report.failures = load_failures;
    Ok(report)
}

/// CSV files in `dir`, sorted by name.
pub fn dataset_paths(dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    Ok(paths)
}
