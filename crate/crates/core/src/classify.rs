//! Logistic regression trained by full-batch gradient descent on mean NLL.
//! Targets may be soft labels in [0, 1].

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::nn::{sigmoid, Optimizer, OptimizerKind, Parameter, Tensor};

/// Probabilities are clamped to `[CLAMP, 1 - CLAMP]` inside the loss.
pub const CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            learning_rate: 0.5,
            optimizer: OptimizerKind::Sgd,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: LogRegConfig,
}

impl LogisticModel {
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        predict_proba(self, x)
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>() + self.bias
    }
}

/// Mean negative log-likelihood with clamped probabilities.
pub fn mean_nll(probs: &[f64], targets: &[f64]) -> f64 {
    let n = probs.len().max(1) as f64;
    probs
        .iter()
        .zip(targets)
        .map(|(&p, &y)| {
            let p = p.clamp(CLAMP, 1.0 - CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / n
}

/// Gradient of the mean NLL with respect to `(weights, bias)`.
///
/// Inside the clamp the gradient is the familiar `mean((σ(z) − y)·x)`;
/// where the clamp is active the loss is locally constant and contributes
/// nothing.
pub fn nll_gradient(x: &Matrix, targets: &[f64], weights: &[f64], bias: f64) -> (Vec<f64>, f64) {
    let n = x.rows().max(1) as f64;
    let mut gw = vec![0.0; x.cols()];
    let mut gb = 0.0;
    for (row, &y) in x.iter_rows().zip(targets) {
        let z = row.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>() + bias;
        let p = sigmoid(z);
        if !(CLAMP..=1.0 - CLAMP).contains(&p) {
            continue;
        }
        let r = p - y;
        gb += r;
        gw.iter_mut().zip(row).for_each(|(g, a)| *g += r * a);
    }
    gw.iter_mut().for_each(|g| *g /= n);
    (gw, gb / n)
}

/// Trains from zero initialization.
pub fn train_logreg(x: &Matrix, targets: &[f64], config: &LogRegConfig) -> Result<LogisticModel> {
    fit(x, targets, config, None)
}

/// As [`train_logreg`], also returning the training loss before every step
/// and after the last one (`steps + 1` values).
pub fn train_logreg_traced(
    x: &Matrix,
    targets: &[f64],
    config: &LogRegConfig,
) -> Result<(LogisticModel, Vec<f64>)> {
    let mut trace = Vec::with_capacity(config.steps + 1);
    let model = fit(x, targets, config, Some(&mut trace))?;
    Ok((model, trace))
}

fn fit(
    x: &Matrix,
    targets: &[f64],
    config: &LogRegConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<LogisticModel> {
    if x.rows() == 0 {
        return Err(Error::Contract("logistic regression needs at least one row".into()));
    }
    if x.rows() != targets.len() {
        return Err(Error::Dimension {
            op: "train_logreg",
            expected: format!("{} targets", x.rows()),
            got: format!("{}", targets.len()),
        });
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("non-finite feature".into()));
    }
    if targets.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::Contract("targets must lie in [0, 1]".into()));
    }
    let d = x.cols();
    let mut w = Parameter::new(Tensor::zeros(&[d]));
    let mut b = Parameter::new(Tensor::zeros(&[1]));
    let mut opt = Optimizer::new(config.optimizer, config.learning_rate, [&w, &b])?;
    let loss = |w: &Parameter, b: &Parameter| {
        let m = LogisticModel {
            weights: w.value.data().to_vec(),
            bias: b.value.data()[0],
            config: *config,
        };
        mean_nll(&predict_unchecked(&m, x), targets)
    };
    for _ in 0..config.steps {
        if let Some(t) = trace.as_deref_mut() {
            t.push(loss(&w, &b));
        }
        let (gw, gb) = nll_gradient(x, targets, w.value.data(), b.value.data()[0]);
        w.grad.data_mut().copy_from_slice(&gw);
        b.grad.data_mut()[0] = gb;
        opt.step([&mut w, &mut b])?;
    }
    if let Some(t) = trace {
        t.push(loss(&w, &b));
    }
    Ok(LogisticModel {
        weights: w.value.into_data(),
        bias: b.value.data()[0],
        config: *config,
    })
}

fn predict_unchecked(model: &LogisticModel, x: &Matrix) -> Vec<f64> {
    x.iter_rows().map(|r| sigmoid(model.decision(r))).collect()
}

/// `σ(X·w + b)` row by row.
pub fn predict_proba(model: &LogisticModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != model.weights.len() {
        return Err(Error::Dimension {
            op: "predict_proba",
            expected: format!("{} features", model.weights.len()),
            got: format!("{}", x.cols()),
        });
    }
    Ok(predict_unchecked(model, x))
}
