use super::graph::Parameter;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
    RmsProp,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            "rmsprop" => Ok(Self::RmsProp),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sgd => "sgd",
            Self::Adam => "adam",
            Self::RmsProp => "rmsprop",
        })
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const RMSPROP_DECAY: f64 = 0.99;
pub const EPS: f64 = 1e-8;

/// Optimizer with per-parameter moment buffers.
///
/// Buffers are bound positionally to the parameter list given at
/// construction; `step` must be called with the same list in the same order.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub lr: f64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: u64,
}

impl Optimizer {
    pub fn new<'a>(kind: OptimizerKind, lr: f64, params: impl IntoIterator<Item = &'a Parameter>) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        let sizes: Vec<usize> = params.into_iter().map(|p| p.value.len()).collect();
        let zeros = |used: bool| -> Vec<Vec<f64>> {
            sizes.iter().map(|&n| if used { vec![0.0; n] } else { Vec::new() }).collect()
        };
        Ok(Self {
            kind,
            lr,
            first: zeros(kind == OptimizerKind::Adam),
            second: zeros(kind != OptimizerKind::Sgd),
            steps: 0,
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step<'a>(&mut self, params: impl IntoIterator<Item = &'a mut Parameter>) -> Result<()> {
        self.steps += 1;
        let t = self.steps as i32;
        let lr = self.lr;
        for (i, p) in params.into_iter().enumerate() {
            if i >= self.second.len() {
                return Err(Error::Contract("optimizer received more parameters than it was built for".into()));
            }
            let (value, grad) = p.value_and_grad();
            if grad.len() != self.second[i].len() && self.kind != OptimizerKind::Sgd {
                return Err(Error::Contract(format!("parameter {i} changed size since optimizer construction")));
            }
            let n = value.len();
            match self.kind {
                OptimizerKind::Sgd => {
                    let grad = &grad[..n];
                    for j in 0..n {
                        value[j] -= lr * grad[j];
                    }
                }
                OptimizerKind::RmsProp => {
                    let (grad, sq) = (&grad[..n], &mut self.second[i][..n]);
                    for j in 0..n {
                        let g = grad[j];
                        sq[j] = RMSPROP_DECAY * sq[j] + (1.0 - RMSPROP_DECAY) * g * g;
                        value[j] -= lr * g / (sq[j].sqrt() + EPS);
                    }
                }
                OptimizerKind::Adam => {
                    let step_size = lr / (1.0 - ADAM_BETA1.powi(t));
                    let inv_bc2 = 1.0 / (1.0 - ADAM_BETA2.powi(t));
                    let grad = &grad[..n];
                    let m = &mut self.first[i][..n];
                    let v = &mut self.second[i][..n];
                    for j in 0..n {
                        let g = grad[j];
                        m[j] = ADAM_BETA1 * m[j] + (1.0 - ADAM_BETA1) * g;
                        v[j] = ADAM_BETA2 * v[j] + (1.0 - ADAM_BETA2) * g * g;
                        value[j] -= step_size * m[j] / ((v[j] * inv_bc2).sqrt() + EPS);
                    }
                }
            }
        }
        Ok(())
    }
}
