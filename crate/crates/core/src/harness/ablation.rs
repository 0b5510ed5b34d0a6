use super::{run_benchmark, BenchmarkOptions};
use crate::data::{subsample_fraction, Dataset};
use crate::error::{Error, Result};
use crate::oversample::Method;
use crate::rng::{derive_seed, tag};

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub fraction: f64,
    pub method: Method,
    pub mean_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub dataset: String,
    pub methods: Vec<Method>,
    pub fractions: Vec<f64>,
    pub rows: Vec<AblationRow>,
    /// Least-squares slope of mean AUC against fraction; `None` with fewer
    /// than two usable fractions.
    pub slopes: Vec<(Method, Option<f64>)>,
    pub skipped: Vec<(f64, String)>,
}

/// Closed-form least-squares slope `Σ(x−x̄)(y−ȳ) / Σ(x−x̄)²`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Subsamples `ds` to each fraction and benchmarks the subset. Fractions
/// that leave fewer minority rows than splits are skipped.
pub fn ablate_data_fraction(ds: &Dataset, fractions: &[f64], opts: &BenchmarkOptions) -> Result<AblationReport> {
    if fractions.is_empty() {
        return Err(Error::Config("no fractions given".into()));
    }
    let mut rows = Vec::new();
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    for &f in fractions {
        let seed = derive_seed(opts.seed, &[tag(&ds.name), tag("fraction"), f.to_bits()]);
        let sub = match subsample_fraction(ds, f, seed) {
            Ok(s) => s,
            Err(e) => {
                skipped.push((f, e.to_string()));
                continue;
            }
        };
        let (_, pos) = sub.class_counts();
        if pos < opts.n_splits {
            skipped.push((f, format!("{pos} minority rows, fewer than {} splits", opts.n_splits)));
            continue;
        }
        let report = run_benchmark(std::slice::from_ref(&sub), opts)?;
        if let Some(fail) = report.failures.iter().find(|x| x.method.is_none()) {
            skipped.push((f, fail.message.clone()));
            continue;
        }
        used.push(f);
        for &m in &opts.methods {
            rows.push(AblationRow {
                fraction: f,
                method: m,
                mean_auc: report.mean_auc(&sub.name, m),
            });
        }
    }
    let slopes = opts
        .methods
        .iter()
        .map(|&m| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.method == m)
                .filter_map(|r| Some((r.fraction, r.mean_auc?)))
                .unzip();
            (m, least_squares_slope(&xs, &ys))
        })
        .collect();
    Ok(AblationReport {
        dataset: ds.name.clone(),
        methods: opts.methods.clone(),
        fractions: used,
        rows,
        slopes,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_line() {
        let xs = [0.1, 0.2, 0.5, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.3 * x + 0.5).collect();
        assert!((least_squares_slope(&xs, &ys).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(least_squares_slope(&xs, &[0.7; 4]), Some(0.0));
        assert_eq!(least_squares_slope(&[0.5], &[0.7]), None);
    }
}
