use super::DraganConfig;
use crate::error::{Error, Result};
use crate::nn::{dropout, Activation, BatchNorm1d, Conv1d, Dense, Graph, Mode, Parameter, Var};
use crate::rng::Rng;

/// Maps one noise vector to a whole `[m, d + 1]` batch in a single pass:
/// dense → dropout → reshape to `[h, m]` → conv1d over the row axis →
/// transpose → activation. The last column is the soft label.
#[derive(Debug, Clone)]
pub struct Generator {
    pub dense: Dense,
    pub conv: Conv1d,
    pub batchnorm: Option<BatchNorm1d>,
    pub activation: Activation,
    pub dropout_rate: f64,
    pub z_size: usize,
    pub hidden: usize,
    pub rows: usize,
    pub features: usize,
}

impl Generator {
    pub fn new(config: &DraganConfig, features: usize, rows: usize, rng: &mut Rng) -> Result<Self> {
        if features < 1 || rows < 2 {
            return Err(Error::Config(format!(
                "generator needs d >= 1 and m >= 2, got d={features}, m={rows}"
            )));
        }
        let h = config.gen_hidden_channels;
        Ok(Self {
            dense: Dense::new(config.z_size, rows * h, rng)?,
            conv: Conv1d::new(h, features + 1, config.gen_kernel, rng)?,
            batchnorm: if config.gen_batchnorm {
                Some(BatchNorm1d::new(features + 1)?)
            } else {
                None
            },
            activation: config.gen_activation,
            dropout_rate: if config.gen_dropout { config.gen_dropout_rate } else { 0.0 },
            z_size: config.z_size,
            hidden: h,
            rows,
            features,
        })
    }

    /// `noise` is `[1, z]`; returns `[m, d + 1]`.
    pub fn forward(&mut self, g: &mut Graph, noise: Var, mode: Mode, rng: &mut Rng) -> Result<Var> {
        let x = self.dense.forward(g, noise, false)?;
        let x = dropout(g, x, self.dropout_rate, mode, rng)?;
        let x = g.reshape(x, &[self.hidden, self.rows])?;
        let x = self.conv.forward(g, x, false)?;
        let mut x = g.transpose(x)?;
        if let Some(bn) = self.batchnorm.as_mut() {
            x = bn.forward(g, x, mode, false)?;
        }
        Ok(self.activation.apply(g, x))
    }

    pub fn params(&self) -> Vec<&Parameter> {
        let mut p: Vec<&Parameter> = self.dense.params().into_iter().chain(self.conv.params()).collect();
        if let Some(bn) = &self.batchnorm {
            p.extend(bn.params());
        }
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p: Vec<&mut Parameter> =
            self.dense.params_mut().into_iter().chain(self.conv.params_mut()).collect();
        if let Some(bn) = self.batchnorm.as_mut() {
            p.extend(bn.params_mut());
        }
        p
    }
}

#[derive(Debug, Clone)]
pub struct CriticBlock {
    pub dense: Dense,
    pub activation: Activation,
    pub batchnorm: Option<BatchNorm1d>,
    pub dropout_rate: f64,
}

/// Regresses the score a classifier trained on a flattened batch achieves
/// on real data. Hidden blocks are dense → activation → [batchnorm] →
/// [dropout]; the head is dense → sigmoid.
#[derive(Debug, Clone)]
pub struct Critic {
    pub blocks: Vec<CriticBlock>,
    pub head: Dense,
    pub inputs: usize,
}

impl Critic {
    pub fn new(config: &DraganConfig, features: usize, rows: usize, rng: &mut Rng) -> Result<Self> {
        if features < 1 || rows < 2 {
            return Err(Error::Config(format!(
                "critic needs d >= 1 and m >= 2, got d={features}, m={rows}"
            )));
        }
        let inputs = rows * (features + 1);
        let mut width = inputs;
        let mut blocks = Vec::with_capacity(config.critic_layers.len());
        for (i, &out) in config.critic_layers.iter().enumerate() {
            let bn = config.critic_batchnorm.get(i).copied().unwrap_or(false);
            let drop = config.critic_dropout.get(i).copied().unwrap_or(false);
            blocks.push(CriticBlock {
                dense: Dense::new(width, out, rng)?,
                activation: config.critic_activations[i],
                batchnorm: if bn { Some(BatchNorm1d::new(out)?) } else { None },
                dropout_rate: if drop { config.critic_dropout_rate } else { 0.0 },
            });
            width = out;
        }
        Ok(Self {
            blocks,
            head: Dense::new(width, 1, rng)?,
            inputs,
        })
    }

    /// `x` is `[B, m·(d + 1)]`; returns `[B, 1]`. With `frozen`, parameters
    /// enter the graph as constants.
    pub fn forward(&mut self, g: &mut Graph, x: Var, mode: Mode, frozen: bool, rng: &mut Rng) -> Result<Var> {
        let mut h = x;
        for b in &mut self.blocks {
            h = b.dense.forward(g, h, frozen)?;
            h = b.activation.apply(g, h);
            if let Some(bn) = b.batchnorm.as_mut() {
                h = bn.forward(g, h, mode, frozen)?;
            }
            h = dropout(g, h, b.dropout_rate, mode, rng)?;
        }
        let out = self.head.forward(g, h, frozen)?;
        Ok(g.sigmoid(out))
    }

    pub fn params(&self) -> Vec<&Parameter> {
        let mut p = Vec::new();
        for b in &self.blocks {
            p.extend(b.dense.params());
            if let Some(bn) = &b.batchnorm {
                p.extend(bn.params());
            }
        }
        p.extend(self.head.params());
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = Vec::new();
        for b in &mut self.blocks {
            p.extend(b.dense.params_mut());
            if let Some(bn) = b.batchnorm.as_mut() {
                p.extend(bn.params_mut());
            }
        }
        p.extend(self.head.params_mut());
        p
    }
}
