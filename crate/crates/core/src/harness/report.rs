use super::{EvalRecord, Failure};
use crate::error::{Error, Result};
use crate::metrics::{pearson, summarize, ScoreMetric, ScoredPredictions};
use crate::oversample::Method;

/// Mean with sample standard deviation (`n − 1`; zero for one value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub methods: Vec<Method>,
    pub datasets: Vec<String>,
    pub records: Vec<EvalRecord>,
    pub failures: Vec<Failure>,
    pub pooled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub dataset: String,
    pub cells: Vec<Option<MeanStd>>,
}

/// Datasets × methods, plus an average row of per-dataset means.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub metric: ScoreMetric,
    pub methods: Vec<Method>,
    pub rows: Vec<TableRow>,
    pub average: Vec<Option<f64>>,
}

/// Datasets on which each method has the strictly highest mean; datasets
/// with a shared maximum are counted in `ties` instead.
#[derive(Debug, Clone, PartialEq)]
pub struct BestCounts {
    pub methods: Vec<Method>,
    pub wins: Vec<usize>,
    pub ties: usize,
}

impl BenchmarkReport {
    fn records_for<'a>(&'a self, dataset: &'a str, method: Method) -> impl Iterator<Item = &'a EvalRecord> + 'a {
        self.records
            .iter()
            .filter(move |r| r.dataset == dataset && r.method == method)
    }

    /// Per-repeat metric on predictions pooled over that repeat's folds.
    fn pooled_values(&self, dataset: &str, method: Method, metric: ScoreMetric) -> Vec<f64> {
        let mut repeats: Vec<usize> = self.records_for(dataset, method).map(|r| r.repeat).collect();
        repeats.sort_unstable();
        repeats.dedup();
        repeats
            .into_iter()
            .filter_map(|rep| {
                let (mut s, mut l) = (Vec::new(), Vec::new());
                for r in self.records_for(dataset, method).filter(|r| r.repeat == rep) {
                    s.extend_from_slice(&r.test_scores);
                    l.extend_from_slice(&r.test_labels);
                }
                let sp = ScoredPredictions::new(s, l).ok()?;
                summarize(&sp).ok().map(|x| metric.pick(&x))
            })
            .collect()
    }

    pub fn values(&self, dataset: &str, method: Method, metric: ScoreMetric) -> Vec<f64> {
        if self.pooled {
            return self.pooled_values(dataset, method, metric);
        }
        self.records_for(dataset, method)
            .map(|r| match metric {
                ScoreMetric::Auc => r.auc,
                ScoreMetric::F1 => r.f1,
                ScoreMetric::G => r.g,
            })
            .collect()
    }

    pub fn cell(&self, dataset: &str, method: Method, metric: ScoreMetric) -> Option<MeanStd> {
        MeanStd::of(&self.values(dataset, method, metric))
    }

    /// Datasets with at least one record, in input order.
    pub fn evaluated_datasets(&self) -> Vec<&str> {
        self.datasets
            .iter()
            .filter(|d| self.records.iter().any(|r| &r.dataset == *d))
            .map(String::as_str)
            .collect()
    }

    pub fn table(&self, metric: ScoreMetric) -> ResultTable {
        let rows: Vec<TableRow> = self
            .evaluated_datasets()
            .into_iter()
            .map(|d| TableRow {
                dataset: d.to_string(),
                cells: self.methods.iter().map(|&m| self.cell(d, m, metric)).collect(),
            })
            .collect();
        let average = (0..self.methods.len())
            .map(|j| {
                let means: Vec<f64> = rows.iter().filter_map(|r| r.cells[j].map(|c| c.mean)).collect();
                MeanStd::of(&means).map(|s| s.mean)
            })
            .collect();
        ResultTable {
            metric,
            methods: self.methods.clone(),
            rows,
            average,
        }
    }

    pub fn best_counts(&self, metric: ScoreMetric) -> BestCounts {
        let table = self.table(metric);
        let mut wins = vec![0; self.methods.len()];
        let mut ties = 0;
        for row in &table.rows {
            let best = row.cells.iter().flatten().map(|c| c.mean).fold(f64::NEG_INFINITY, f64::max);
            let at_best: Vec<usize> = (0..row.cells.len())
                .filter(|&j| row.cells[j].is_some_and(|c| c.mean == best))
                .collect();
            match at_best.as_slice() {
                [j] => wins[*j] += 1,
                [] => {}
                _ => ties += 1,
            }
        }
        BestCounts {
            methods: self.methods.clone(),
            wins,
            ties,
        }
    }

    /// Mean seconds per record spent resampling and training.
    pub fn mean_time(&self, dataset: &str, method: Method) -> Option<f64> {
        let t: Vec<f64> = self.records_for(dataset, method).map(|r| r.wall_time_seconds).collect();
        MeanStd::of(&t).map(|s| s.mean)
    }

    /// Per-dataset mean AUC of `method`.
    pub fn mean_auc(&self, dataset: &str, method: Method) -> Option<f64> {
        self.cell(dataset, method, ScoreMetric::Auc).map(|c| c.mean)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub method: Method,
    /// `None` when either series is constant.
    pub pearson: Option<f64>,
    pub datasets: usize,
}

fn require_vanilla(report: &BenchmarkReport) -> Result<()> {
    if !report.methods.contains(&Method::Vanilla) {
        return Err(Error::Config("the vanilla method is required as the reference".into()));
    }
    Ok(())
}

/// Pearson correlation between each method's per-dataset mean AUCs and
/// vanilla's.
pub fn correlation_report(report: &BenchmarkReport) -> Result<Vec<CorrelationRow>> {
    require_vanilla(report)?;
    let datasets = report.evaluated_datasets();
    if datasets.len() < 2 {
        return Err(Error::Config(format!(
            "correlation needs at least 2 datasets, got {}",
            datasets.len()
        )));
    }
    Ok(report
        .methods
        .iter()
        .map(|&m| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = datasets
                .iter()
                .filter_map(|d| Some((report.mean_auc(d, m)?, report.mean_auc(d, Method::Vanilla)?)))
                .unzip();
            CorrelationRow {
                method: m,
                pearson: pearson(&xs, &ys).ok(),
                datasets: xs.len(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopGains {
    pub method: Method,
    /// `(dataset, mean AUC − vanilla mean AUC)`, largest first.
    pub gains: Vec<(String, f64)>,
    pub average: Option<f64>,
    /// True when fewer than `k` datasets were available.
    pub short: bool,
}

/// The `k` largest per-dataset AUC gains over vanilla for each method.
pub fn top_gains(report: &BenchmarkReport, k: usize) -> Result<Vec<TopGains>> {
    require_vanilla(report)?;
    let datasets = report.evaluated_datasets();
    Ok(report
        .methods
        .iter()
        .map(|&m| {
            let mut gains: Vec<(String, f64)> = datasets
                .iter()
                .filter_map(|d| Some((d.to_string(), report.mean_auc(d, m)? - report.mean_auc(d, Method::Vanilla)?)))
                .collect();
            gains.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            let short = gains.len() < k;
            gains.truncate(k);
            let values: Vec<f64> = gains.iter().map(|g| g.1).collect();
            TopGains {
                method: m,
                average: MeanStd::of(&values).map(|s| s.mean),
                gains,
                short,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(dataset: &str, method: Method, fold: usize, auc: f64) -> EvalRecord {
        EvalRecord {
            dataset: dataset.into(),
            method,
            repeat: 0,
            fold,
            auc,
            f1: auc / 2.0,
            g: auc / 3.0,
            threshold: 0.5,
            wall_time_seconds: 0.1,
            seed: 0,
            train_rows: 1,
            resampled_rows: 1,
            resampler_input: vec![],
            test_indices: vec![],
            test_scores: vec![],
            test_labels: vec![],
        }
    }

    fn report(cells: &[(&str, Method, f64)]) -> BenchmarkReport {
        let mut records = Vec::new();
        let mut datasets: Vec<String> = Vec::new();
        let mut methods: Vec<Method> = Vec::new();
        for &(d, m, v) in cells {
            records.push(rec(d, m, 0, v));
            if !datasets.iter().any(|x| x == d) {
                datasets.push(d.into());
            }
            if !methods.contains(&m) {
                methods.push(m);
            }
        }
        BenchmarkReport {
            methods,
            datasets,
            records,
            failures: vec![],
            pooled: false,
        }
    }

    #[test]
    fn mean_std_sample() {
        let s = MeanStd::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(MeanStd::of(&[4.0]).unwrap().std, 0.0);
        assert!(MeanStd::of(&[]).is_none());
    }

    #[test]
    fn average_row_is_column_mean() {
        let r = report(&[
            ("a", Method::Vanilla, 0.6),
            ("a", Method::Smote, 0.8),
            ("b", Method::Vanilla, 0.7),
            ("b", Method::Smote, 0.7),
        ]);
        let t = r.table(ScoreMetric::Auc);
        assert_eq!(t.rows.len(), 2);
        assert!((t.average[0].unwrap() - 0.65).abs() < 1e-15);
        assert!((t.average[1].unwrap() - 0.75).abs() < 1e-15);
        let b = r.best_counts(ScoreMetric::Auc);
        assert_eq!(b.wins, vec![0, 1]);
        assert_eq!(b.ties, 1);
    }

    #[test]
    fn vanilla_correlates_with_itself() {
        let r = report(&[
            ("a", Method::Vanilla, 0.6),
            ("a", Method::Mixup, 0.6),
            ("b", Method::Vanilla, 0.9),
            ("b", Method::Mixup, 0.9),
            ("c", Method::Vanilla, 0.7),
            ("c", Method::Mixup, 0.7),
        ]);
        let c = correlation_report(&r).unwrap();
        assert!((c[0].pearson.unwrap() - 1.0).abs() < 1e-12);
        assert!((c[1].pearson.unwrap() - 1.0).abs() < 1e-12);
        let g = top_gains(&r, 10).unwrap();
        assert!(g[1].gains.iter().all(|x| x.1 == 0.0));
        assert!(g[1].short);
    }

    #[test]
    fn constant_series_is_na() {
        let r = report(&[
            ("a", Method::Vanilla, 0.6),
            ("a", Method::Smote, 0.5),
            ("b", Method::Vanilla, 0.9),
            ("b", Method::Smote, 0.5),
        ]);
        let c = correlation_report(&r).unwrap();
        assert!(c[1].pearson.is_none());
    }

    #[test]
    fn gains_sorted_and_truncated() {
        let r = report(&[
            ("a", Method::Vanilla, 0.5),
            ("a", Method::Dragan, 0.9),
            ("b", Method::Vanilla, 0.5),
            ("b", Method::Dragan, 0.6),
            ("c", Method::Vanilla, 0.5),
            ("c", Method::Dragan, 0.7),
        ]);
        let g = top_gains(&r, 2).unwrap();
        let d = &g[1];
        assert_eq!(d.gains.iter().map(|x| x.0.as_str()).collect::<Vec<_>>(), vec!["a", "c"]);
        assert!((d.average.unwrap() - 0.3).abs() < 1e-12);
        assert!(!d.short);
    }

    #[test]
    fn correlation_needs_vanilla_and_two_datasets() {
        let r = report(&[("a", Method::Smote, 0.5), ("b", Method::Smote, 0.6)]);
        assert!(correlation_report(&r).is_err());
        let r = report(&[("a", Method::Vanilla, 0.5)]);
        assert!(correlation_report(&r).is_err());
    }
}
