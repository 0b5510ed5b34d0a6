use rand::Rng as _;

use super::graph::{Graph, Parameter, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const LEAKY_SLOPE: f64 = 0.01;
pub const BN_VAR_FLOOR: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    LeakyRelu,
    Sigmoid,
    None,
}

impl Activation {
    pub fn apply(self, g: &mut Graph, x: Var) -> Var {
        match self {
            Activation::Relu => g.relu(x),
            Activation::LeakyRelu => g.leaky_relu(x, LEAKY_SLOPE),
            Activation::Sigmoid => g.sigmoid(x),
            Activation::None => x,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relu" => Ok(Self::Relu),
            "leaky-relu" | "leakyrelu" | "leaky_relu" => Ok(Self::LeakyRelu),
            "sigmoid" => Ok(Self::Sigmoid),
            "none" | "identity" => Ok(Self::None),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Static description of one layer, validated before construction.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Dense { inputs: usize, outputs: usize },
    Conv1d { in_channels: usize, out_channels: usize, kernel: usize },
    BatchNorm1d { features: usize },
    Dropout { rate: f64 },
    Activation(Activation),
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LayerSpec::Dense { inputs, outputs } if inputs == 0 || outputs == 0 => Err(
                Error::Config(format!("dense extents must be >= 1, got {inputs}x{outputs}")),
            ),
            LayerSpec::Conv1d { kernel, .. } if kernel == 0 || kernel % 2 == 0 => Err(Error::Config(
                format!("conv1d kernel width must be odd and >= 1, got {kernel}"),
            )),
            LayerSpec::Conv1d { in_channels, out_channels, .. }
                if in_channels == 0 || out_channels == 0 =>
            {
                Err(Error::Config("conv1d channel counts must be >= 1".into()))
            }
            LayerSpec::BatchNorm1d { features: 0 } => {
                Err(Error::Config("batchnorm needs at least one feature".into()))
            }
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => {
                Err(Error::Config(format!("dropout rate must be in [0, 1), got {rate}")))
            }
            _ => Ok(()),
        }
    }
}

fn uniform_init(shape: &[usize], fan_in: usize, rng: &mut Rng) -> Tensor {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::new(shape.to_vec(), data).expect("init shape")
}

/// Fully connected layer: `y = x·W + b` with `W: [in, out]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Parameter,
    pub bias: Parameter,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut Rng) -> Result<Self> {
        LayerSpec::Dense { inputs, outputs }.validate()?;
        Ok(Self {
            weight: Parameter::new(uniform_init(&[inputs, outputs], inputs, rng)),
            bias: Parameter::new(Tensor::zeros(&[outputs])),
        })
    }

    pub fn forward(&self, g: &mut Graph, x: Var, frozen: bool) -> Result<Var> {
        let (w, b) = bind(g, frozen, &self.weight, &self.bias);
        let y = g.matmul(x, w)?;
        g.add_bias(y, b)
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> [&Parameter; 2] {
        [&self.weight, &self.bias]
    }
}

/// Same-padding, stride-1 1-D convolution over `[channels, length]`.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub weight: Parameter,
    pub bias: Parameter,
}

impl Conv1d {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, rng: &mut Rng) -> Result<Self> {
        LayerSpec::Conv1d { in_channels, out_channels, kernel }.validate()?;
        Ok(Self {
            weight: Parameter::new(uniform_init(
                &[out_channels, in_channels, kernel],
                in_channels * kernel,
                rng,
            )),
            bias: Parameter::new(Tensor::zeros(&[out_channels])),
        })
    }

    pub fn forward(&self, g: &mut Graph, x: Var, frozen: bool) -> Result<Var> {
        let (w, b) = bind(g, frozen, &self.weight, &self.bias);
        g.conv1d(x, w, b)
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> [&Parameter; 2] {
        [&self.weight, &self.bias]
    }
}

/// Batch normalization over the rows of `[n, features]`, with running
/// statistics for evaluation.
#[derive(Debug, Clone)]
pub struct BatchNorm1d {
    pub gamma: Parameter,
    pub beta: Parameter,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchNorm1d {
    pub fn new(features: usize) -> Result<Self> {
        LayerSpec::BatchNorm1d { features }.validate()?;
        Ok(Self {
            gamma: Parameter::new(Tensor::full(&[features], 1.0)),
            beta: Parameter::new(Tensor::zeros(&[features])),
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
        })
    }

    pub fn forward(&mut self, g: &mut Graph, x: Var, mode: Mode, frozen: bool) -> Result<Var> {
        let (gamma, beta) = bind(g, frozen, &self.gamma, &self.beta);
        match mode {
            Mode::Train => {
                let n = g.value(x).shape()[0];
                let (y, mean, var) = g.batchnorm(x, gamma, beta, None, BN_VAR_FLOOR)?;
                let unbias = n as f64 / (n as f64 - 1.0);
                for j in 0..mean.len() {
                    self.running_mean[j] =
                        (1.0 - BN_MOMENTUM) * self.running_mean[j] + BN_MOMENTUM * mean[j];
                    self.running_var[j] =
                        (1.0 - BN_MOMENTUM) * self.running_var[j] + BN_MOMENTUM * var[j] * unbias;
                }
                Ok(y)
            }
            Mode::Eval => {
                let stats = (self.running_mean.as_slice(), self.running_var.as_slice());
                Ok(g.batchnorm(x, gamma, beta, Some(stats), BN_VAR_FLOOR)?.0)
            }
        }
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 2] {
        [&mut self.gamma, &mut self.beta]
    }

    pub fn params(&self) -> [&Parameter; 2] {
        [&self.gamma, &self.beta]
    }
}

/// Inverted dropout: survivors are scaled by `1/(1-rate)` at train time so
/// evaluation is the identity.
pub fn dropout(g: &mut Graph, x: Var, rate: f64, mode: Mode, rng: &mut Rng) -> Result<Var> {
    LayerSpec::Dropout { rate }.validate()?;
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(x);
    }
    let keep = 1.0 / (1.0 - rate);
    let mask = (0..g.value(x).len())
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect();
    g.dropout_mask(x, mask)
}

fn bind(g: &mut Graph, frozen: bool, a: &Parameter, b: &Parameter) -> (Var, Var) {
    if frozen {
        (g.frozen_param(a), g.frozen_param(b))
    } else {
        (g.param(a), g.param(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn spec_validation() {
        assert!(LayerSpec::Dropout { rate: 1.0 }.validate().is_err());
        assert!(LayerSpec::Dropout { rate: -0.1 }.validate().is_err());
        assert!(LayerSpec::Dropout { rate: 0.0 }.validate().is_ok());
        assert!(LayerSpec::Conv1d { in_channels: 1, out_channels: 1, kernel: 0 }.validate().is_err());
        assert!(LayerSpec::Conv1d { in_channels: 1, out_channels: 1, kernel: 4 }.validate().is_err());
        assert!(LayerSpec::Dense { inputs: 0, outputs: 3 }.validate().is_err());
        assert!(LayerSpec::Activation(Activation::Relu).validate().is_ok());
    }

    #[test]
    fn dense_init_is_bounded_and_bias_zero() {
        let mut rng = rng_from_seed(1);
        let d = Dense::new(16, 4, &mut rng).unwrap();
        assert!(d.weight.value.data().iter().all(|w| w.abs() <= 0.25));
        assert!(d.bias.value.data().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn running_stats_follow_momentum() {
        let mut bn = BatchNorm1d::new(1).unwrap();
        let mut g = Graph::new();
        let x = g.constant(Tensor::new(vec![2, 1], vec![1.0, 3.0]).unwrap());
        bn.forward(&mut g, x, Mode::Train, false).unwrap();
        assert!((bn.running_mean[0] - 0.2).abs() < 1e-15);
        // unbiased batch variance is 2
        assert!((bn.running_var[0] - (0.9 + 0.2)).abs() < 1e-15);
    }

    #[test]
    fn activation_parsing() {
        assert_eq!("LeakyReLU".parse::<Activation>().unwrap(), Activation::LeakyRelu);
        assert!("tanh".parse::<Activation>().is_err());
    }
}
