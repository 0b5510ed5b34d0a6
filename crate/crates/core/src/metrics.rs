//! Discrete classification measures, decision thresholding, correlation, and
//! the closed forms of the constant ("trivial") predictor under NLL.

use std::cmp::Ordering;
use std::io::Write;

use crate::error::{Error, Result};

/// Scores (higher means more positive) paired with 0/1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPredictions {
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
    pub threshold: Option<f64>,
}

impl ScoredPredictions {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Dimension {
                op: "scored predictions",
                expected: format!("{} labels", scores.len()),
                got: format!("{}", labels.len()),
            });
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::Contract("NaN score".into()));
        }
        Ok(Self {
            scores,
            labels,
            threshold: None,
        })
    }

    /// `(P, N)`: positive and negative counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let p = self.labels.iter().filter(|&&l| l == 1).count();
        (p, self.labels.len() - p)
    }

    fn require_both_classes(&self, what: &str) -> Result<(usize, usize)> {
        let (p, n) = self.class_counts();
        if p == 0 || n == 0 {
            return Err(Error::UndefinedMetric(format!(
                "{what} needs both classes, found {p} positive and {n} negative"
            )));
        }
        Ok((p, n))
    }
}

/// Confusion counts. Real-valued so that the continuous (expected) confusion
/// matrix of a stochastic predictor can be expressed too.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confusion {
    pub tp: f64,
    pub fp: f64,
    pub tn: f64,
    pub fn_: f64,
}

impl Confusion {
    pub fn total(&self) -> f64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Area under the ROC curve by trapezoidal integration over all distinct
/// score thresholds. Equal scores form a single ROC step, which makes the
/// result equal to the Mann-Whitney statistic with half credit for ties.
pub fn auc(sp: &ScoredPredictions) -> Result<f64> {
    let (p, n) = sp.require_both_classes("AUC")?;
    let mut order: Vec<usize> = (0..sp.scores.len()).collect();
    order.sort_by(|&a, &b| sp.scores[b].partial_cmp(&sp.scores[a]).unwrap_or(Ordering::Equal));

    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    let mut k = 0;
    while k < order.len() {
        let s = sp.scores[order[k]];
        let (tp0, fp0) = (tp, fp);
        while k < order.len() && sp.scores[order[k]] == s {
            if sp.labels[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        area += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
    }
    Ok(area / (p as f64 * n as f64))
}

/// Predicts positive iff `score > threshold`.
pub fn confusion(sp: &ScoredPredictions, threshold: f64) -> Confusion {
    let mut c = Confusion {
        tp: 0.0,
        fp: 0.0,
        tn: 0.0,
        fn_: 0.0,
    };
    for (&s, &l) in sp.scores.iter().zip(&sp.labels) {
        match (s > threshold, l == 1) {
            (true, true) => c.tp += 1.0,
            (true, false) => c.fp += 1.0,
            (false, false) => c.tn += 1.0,
            (false, true) => c.fn_ += 1.0,
        }
    }
    c
}

/// TP / (TP + FP), defined as 0 when nothing is predicted positive.
pub fn precision(c: &Confusion) -> f64 {
    let d = c.tp + c.fp;
    if d > 0.0 {
        c.tp / d
    } else {
        0.0
    }
}

pub fn recall(c: &Confusion) -> Result<f64> {
    let p = c.tp + c.fn_;
    if p <= 0.0 {
        return Err(Error::UndefinedMetric("recall with no positives".into()));
    }
    Ok(c.tp / p)
}

pub fn f1(c: &Confusion) -> Result<f64> {
    let r = recall(c)?;
    let p = precision(c);
    Ok(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 })
}

/// Geometric mean of the per-class recalls.
pub fn g_score(c: &Confusion) -> Result<f64> {
    let (p, n) = (c.tp + c.fn_, c.tn + c.fp);
    if p <= 0.0 || n <= 0.0 {
        return Err(Error::UndefinedMetric(format!("G-score needs both classes (P={p}, N={n})")));
    }
    Ok(((c.tp / p) * (c.tn / n)).sqrt())
}

/// Youden's J: the threshold maximizing TPR − FPR.
///
/// Candidates are −∞, the midpoints between adjacent distinct sorted scores,
/// and +∞; ties go to the smallest candidate. A winning −∞ is reported as
/// `min(score) − 1`, which classifies identically.
pub fn youden_threshold(sp: &ScoredPredictions) -> Result<f64> {
    let (p, n) = sp.require_both_classes("Youden threshold")?;
    let mut pairs: Vec<(f64, u8)> = sp.scores.iter().copied().zip(sp.labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    // At −∞ everything is positive: J = 1 − 1 = 0.
    let (mut tp, mut fp) = (p, n);
    let mut best_j = 0.0;
    let mut best_t = f64::NEG_INFINITY;
    let mut k = 0;
    while k < pairs.len() {
        let s = pairs[k].0;
        while k < pairs.len() && pairs[k].0 == s {
            if pairs[k].1 == 1 {
                tp -= 1;
            } else {
                fp -= 1;
            }
            k += 1;
        }
        // Threshold just above `s`: midpoint to the next distinct score, or +∞.
        let t = if k < pairs.len() { 0.5 * (s + pairs[k].0) } else { f64::INFINITY };
        let j = tp as f64 / p as f64 - fp as f64 / n as f64;
        if j > best_j {
            best_j = j;
            best_t = t;
        }
    }
    Ok(if best_t == f64::NEG_INFINITY { pairs[0].0 - 1.0 } else { best_t })
}

/// AUC, and F1 and G at the Youden threshold of the same scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSummary {
    pub auc: f64,
    pub f1: f64,
    pub g: f64,
    pub threshold: f64,
}

pub fn summarize(sp: &ScoredPredictions) -> Result<ScoreSummary> {
    let auc = auc(sp)?;
    let threshold = youden_threshold(sp)?;
    let c = confusion(sp, threshold);
    Ok(ScoreSummary {
        auc,
        f1: f1(&c)?,
        g: g_score(&c)?,
        threshold,
    })
}

/// The measure a run optimizes or reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ScoreMetric {
    #[default]
    Auc,
    F1,
    G,
}

impl ScoreMetric {
    pub fn name(self) -> &'static str {
        match self {
            ScoreMetric::Auc => "auc",
            ScoreMetric::F1 => "f1",
            ScoreMetric::G => "g",
        }
    }

    pub fn pick(self, s: &ScoreSummary) -> f64 {
        match self {
            ScoreMetric::Auc => s.auc,
            ScoreMetric::F1 => s.f1,
            ScoreMetric::G => s.g,
        }
    }

    /// AUC directly; F1 and G at the Youden threshold.
    pub fn evaluate(self, sp: &ScoredPredictions) -> Result<f64> {
        match self {
            ScoreMetric::Auc => auc(sp),
            _ => Ok(self.pick(&summarize(sp)?)),
        }
    }
}

impl std::fmt::Display for ScoreMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScoreMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auc" => Ok(ScoreMetric::Auc),
            "f1" => Ok(ScoreMetric::F1),
            "g" | "g-score" | "gscore" => Ok(ScoreMetric::G),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

/// Constant predictor `ε` under NLL.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrivialSolution {
    pub minority_fraction: f64,
    pub loss: f64,
    pub f1: f64,
}

/// NLL of the constant prediction `epsilon` on data whose minority fraction
/// is `minority_fraction`.
pub fn constant_predictor_loss(minority_fraction: f64, epsilon: f64) -> Result<f64> {
    check_open_unit(epsilon, "epsilon")?;
    if !(0.0..=1.0).contains(&minority_fraction) {
        return Err(Error::Domain(format!("minority fraction {minority_fraction} not in [0, 1]")));
    }
    Ok(-(minority_fraction * epsilon.ln() + (1.0 - minority_fraction) * (1.0 - epsilon).ln()))
}

/// The NLL-optimal constant equals the minority fraction `ε`; its loss is the
/// binary entropy of `ε` and its continuous-confusion F1 is `ε / (0.5 + ε)`.
pub fn trivial_solution(epsilon: f64) -> Result<TrivialSolution> {
    check_open_unit(epsilon, "epsilon")?;
    Ok(TrivialSolution {
        minority_fraction: epsilon,
        loss: constant_predictor_loss(epsilon, epsilon)?,
        f1: epsilon / (0.5 + epsilon),
    })
}

/// Expected confusion matrix of the trivial solution over `n` samples.
pub fn trivial_confusion(epsilon: f64, n: f64) -> Result<Confusion> {
    check_open_unit(epsilon, "epsilon")?;
    Ok(Confusion {
        tp: 0.5 * epsilon * n,
        fn_: 0.5 * (1.0 - epsilon) * n,
        fp: 0.5 * epsilon * n,
        tn: 0.5 * (1.0 - epsilon) * n,
    })
}

fn check_open_unit(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} = {v} is not in (0, 1)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub epsilon: f64,
    pub loss: f64,
    pub f1: f64,
}

/// Loss of the constant predictor `ε` and the F1 of its continuous confusion
/// matrix, for every `ε` in `grid`.
pub fn loss_f1_curve(minority_fraction: f64, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    grid.iter()
        .map(|&e| {
            Ok(CurvePoint {
                epsilon: e,
                loss: constant_predictor_loss(minority_fraction, e)?,
                f1: trivial_solution(e)?.f1,
            })
        })
        .collect()
}

/// `{step, 2·step, …}` strictly inside (0, 1).
pub fn epsilon_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (1..n).map(|i| i as f64 * step).collect()
}

pub fn write_curve_csv(points: &[CurvePoint], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "loss", "f1"])?;
    for p in points {
        w.write_record([p.epsilon.to_string(), p.loss.to_string(), p.f1.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::UndefinedMetric(format!(
            "Pearson correlation needs two equal-length series of length >= 2, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedMetric("Pearson correlation of a constant series".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// `1 + pearson(f1, loss)`: 0 when the loss is perfectly inversely
/// correlated with F1, 2 when perfectly positively correlated.
pub fn performance_error(f1_series: &[f64], loss_series: &[f64]) -> Result<f64> {
    Ok(1.0 + pearson(f1_series, loss_series)?)
}

/// Test loss minus training loss.
pub fn generalization_error(train_loss: f64, test_loss: f64) -> f64 {
    test_loss - train_loss
}

/// Test F1 minus training F1.
pub fn generalization_error_f1(train_f1: f64, test_f1: f64) -> f64 {
    test_f1 - train_f1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(scores: &[f64], labels: &[u8]) -> ScoredPredictions {
        ScoredPredictions::new(scores.to_vec(), labels.to_vec()).unwrap()
    }

    #[test]
    fn auc_perfect_and_constant() {
        assert_eq!(auc(&sp(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1])).unwrap(), 1.0);
        assert_eq!(auc(&sp(&[0.3; 5], &[0, 1, 0, 1, 0])).unwrap(), 0.5);
        assert_eq!(auc(&sp(&[0.9, 0.8, 0.2], &[0, 0, 1])).unwrap(), 0.0);
    }

    #[test]
    fn auc_single_class_is_undefined() {
        assert!(matches!(auc(&sp(&[0.1, 0.2], &[1, 1])), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn confusion_extremes() {
        let s = sp(&[0.1, 0.7, 0.4], &[0, 1, 1]);
        let hi = confusion(&s, f64::INFINITY);
        assert_eq!((hi.tp, hi.fp), (0.0, 0.0));
        let lo = confusion(&s, f64::NEG_INFINITY);
        assert_eq!((lo.tn, lo.fn_), (0.0, 0.0));
        assert_eq!(confusion(&s, 0.5).total(), 3.0);
        // strict inequality
        assert_eq!(confusion(&s, 0.7).tp, 0.0);
    }

    #[test]
    fn perfect_and_empty_confusions() {
        let perfect = Confusion { tp: 3.0, fp: 0.0, tn: 5.0, fn_: 0.0 };
        assert_eq!(f1(&perfect).unwrap(), 1.0);
        assert_eq!(g_score(&perfect).unwrap(), 1.0);
        let none = Confusion { tp: 0.0, fp: 0.0, tn: 5.0, fn_: 3.0 };
        assert_eq!(precision(&none), 0.0);
        assert_eq!(f1(&none).unwrap(), 0.0);
        assert_eq!(g_score(&none).unwrap(), 0.0);
        let no_pos = Confusion { tp: 0.0, fp: 1.0, tn: 5.0, fn_: 0.0 };
        assert!(g_score(&no_pos).is_err());
        assert!(recall(&no_pos).is_err());
    }

    #[test]
    fn trivial_confusion_matches_closed_form() {
        let c = trivial_confusion(0.1, 1000.0).unwrap();
        assert!((precision(&c) - 0.5).abs() < 1e-15);
        assert!((recall(&c).unwrap() - 0.1).abs() < 1e-15);
        assert!((f1(&c).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn trivial_solution_values() {
        let half = trivial_solution(0.5).unwrap();
        assert!((half.loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(half.f1, 0.5);
        assert!((trivial_solution(0.1).unwrap().f1 - 1.0 / 6.0).abs() < 1e-15);
        assert!(trivial_solution(1e-9).unwrap().f1 < 1e-8);
        assert!(matches!(trivial_solution(0.0), Err(Error::Domain(_))));
        assert!(matches!(trivial_solution(1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn youden_separable() {
        let s = sp(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]);
        assert_eq!(youden_threshold(&s).unwrap(), 0.5);
    }

    #[test]
    fn youden_all_equal_returns_below_min() {
        let s = sp(&[0.4; 4], &[0, 1, 0, 1]);
        assert_eq!(youden_threshold(&s).unwrap(), 0.4 - 1.0);
    }

    #[test]
    fn pearson_linear() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let up: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let down: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &up).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&xs, &down).unwrap() + 1.0).abs() < 1e-15);
        assert!(pearson(&xs, &[1.0; 4]).is_err());
        assert!(pearson(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn performance_error_extremes() {
        let f = [0.1, 0.2, 0.3];
        assert!(performance_error(&f, &[3.0, 2.0, 1.0]).unwrap().abs() < 1e-15);
        assert!((performance_error(&f, &[1.0, 2.0, 3.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn generalization_errors_are_differences() {
        assert_eq!(generalization_error(0.25, 0.75), 0.5);
        assert_eq!(generalization_error_f1(0.75, 0.5), -0.25);
    }

    #[test]
    fn curve_minimum_and_monotone_f1() {
        let grid = epsilon_grid(0.01);
        let pts = loss_f1_curve(0.1, &grid).unwrap();
        let argmin = pts
            .iter()
            .min_by(|a, b| a.loss.partial_cmp(&b.loss).unwrap())
            .unwrap();
        assert!((argmin.epsilon - 0.1).abs() < 1e-9);
        assert!(pts.windows(2).all(|w| w[1].f1 > w[0].f1));
        // convex on a uniform grid
        assert!(pts.windows(3).all(|w| w[0].loss - 2.0 * w[1].loss + w[2].loss >= 0.0));
    }

    #[test]
    fn curve_csv_header() {
        let mut buf = Vec::new();
        write_curve_csv(&loss_f1_curve(0.1, &[0.1, 0.5]).unwrap(), &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("epsilon,loss,f1\n"));
    }
}
