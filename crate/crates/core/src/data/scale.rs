use super::{Dataset, Matrix};

/// Per-column min/max fitted on a training split. Constant columns map to
/// 0.5. Values outside the fitted range are not clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZScoreScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Scaling {
    #[default]
    None,
    MinMax(MinMaxScaler),
    ZScore(ZScoreScaler),
}

pub fn fit_minmax(ds: &Dataset) -> MinMaxScaler {
    MinMaxScaler::fit(&ds.features)
}

pub fn fit_zscore(ds: &Dataset) -> ZScoreScaler {
    ZScoreScaler::fit(&ds.features)
}

impl MinMaxScaler {
    pub fn fit(x: &Matrix) -> Self {
        let d = x.cols();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in x.iter_rows() {
            for j in 0..d {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        Self { min, max }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        self.map(x, |v, lo, hi| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 })
    }

    pub fn invert(&self, x: &Matrix) -> Matrix {
        self.map(x, |v, lo, hi| if hi > lo { v * (hi - lo) + lo } else { lo })
    }

    fn map(&self, x: &Matrix, f: impl Fn(f64, f64, f64) -> f64) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(*v, self.min[j], self.max[j]);
            }
        }
        out
    }

    /// Scaled copy of `ds` carrying this scaler as its scaling state.
    pub fn apply_dataset(&self, ds: &Dataset) -> Dataset {
        Dataset {
            features: self.apply(&ds.features),
            scaling: Scaling::MinMax(self.clone()),
            ..ds.clone()
        }
    }
}

impl ZScoreScaler {
    pub fn fit(x: &Matrix) -> Self {
        let d = x.cols();
        let n = x.rows().max(1) as f64;
        let mean: Vec<f64> = (0..d).map(|j| x.column(j).sum::<f64>() / n).collect();
        let std = (0..d)
            .map(|j| (x.column(j).map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = if self.std[j] > 0.0 { (*v - self.mean[j]) / self.std[j] } else { 0.0 };
            }
        }
        out
    }
}
