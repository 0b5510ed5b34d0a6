use std::path::Path;

use crate::classify::LogRegConfig;
use crate::error::{Error, Result};
use crate::metrics::ScoreMetric;
use crate::nn::{Activation, OptimizerKind};

#[derive(Debug, Clone, PartialEq)]
pub struct DraganConfig {
    pub z_size: usize,
    pub gen_lr: f64,
    pub gen_optimizer: OptimizerKind,
    pub gen_activation: Activation,
    pub gen_batchnorm: bool,
    pub gen_dropout: bool,
    pub gen_dropout_rate: f64,
    pub gen_hidden_channels: usize,
    pub gen_kernel: usize,
    pub critic_lr: f64,
    pub critic_epochs_per_iter: usize,
    pub critic_optimizer: OptimizerKind,
    pub critic_layers: Vec<usize>,
    pub critic_activations: Vec<Activation>,
    /// Per hidden layer; missing entries are off.
    pub critic_batchnorm: Vec<bool>,
    /// Per hidden layer; missing entries are off.
    pub critic_dropout: Vec<bool>,
    pub critic_dropout_rate: f64,
    pub sample_factor: f64,
    pub total_epochs: usize,
    pub critic_batch_size: usize,
    pub max_memory_factor: usize,
    pub early_stopping_patience: usize,
    pub metric: ScoreMetric,
    pub seed: u64,
    /// Train the inner classifier on rounded rather than soft labels.
    pub round_inner_labels: bool,
    /// Emit generated rows together with the real ones.
    pub augment: bool,
    pub inner: LogRegConfig,
}

impl Default for DraganConfig {
    fn default() -> Self {
        Self {
            z_size: 512,
            gen_lr: 0.000266,
            gen_optimizer: OptimizerKind::RmsProp,
            gen_activation: Activation::Sigmoid,
            gen_batchnorm: false,
            gen_dropout: true,
            gen_dropout_rate: 0.5,
            gen_hidden_channels: 8,
            gen_kernel: 3,
            critic_lr: 0.036284,
            critic_epochs_per_iter: 2,
            critic_optimizer: OptimizerKind::Adam,
            critic_layers: vec![64, 128, 64],
            critic_activations: vec![Activation::Relu, Activation::Relu, Activation::LeakyRelu],
            critic_batchnorm: vec![true, false],
            critic_dropout: vec![false, true],
            critic_dropout_rate: 0.5,
            sample_factor: 1.793469,
            total_epochs: 1750,
            critic_batch_size: 16,
            max_memory_factor: 124,
            early_stopping_patience: 921,
            metric: ScoreMetric::Auc,
            seed: 0,
            round_inner_labels: false,
            augment: false,
            inner: LogRegConfig::default(),
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "on" | "yes" | "true" | "1" => Ok(true),
        "off" | "no" | "false" | "0" => Ok(false),
        other => Err(Error::Config(format!("`{key}`: expected on/off, got `{other}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{}`", v.trim())))
}

fn parse_list<T>(v: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let v = v.trim().trim_start_matches('[').trim_end_matches(']');
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| f(s.trim())).collect()
}

impl DraganConfig {
    /// Row count of a generated batch for a training set of `n` rows.
    pub fn batch_rows(&self, n: usize) -> usize {
        (self.sample_factor * n as f64).round() as usize
    }

    pub fn memory_capacity(&self) -> usize {
        self.max_memory_factor * self.critic_batch_size
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.sample_factor > 0.0 && self.sample_factor.is_finite()) {
            return fail(format!("sample-factor must be positive, got {}", self.sample_factor));
        }
        if self.early_stopping_patience > self.total_epochs {
            return fail(format!(
                "early-stopping-patience ({}) exceeds total-epochs ({})",
                self.early_stopping_patience, self.total_epochs
            ));
        }
        if self.z_size == 0 || self.gen_hidden_channels == 0 {
            return fail("z-size and gen-hidden-channels must be >= 1".into());
        }
        if self.gen_kernel % 2 == 0 {
            return fail(format!("gen-kernel must be odd, got {}", self.gen_kernel));
        }
        for (name, lr) in [("gen-lr", self.gen_lr), ("critic-lr", self.critic_lr)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return fail(format!("{name} must be positive, got {lr}"));
            }
        }
        for (name, rate) in [("gen-dropout-rate", self.gen_dropout_rate), ("critic-dropout-rate", self.critic_dropout_rate)] {
            if !(0.0..1.0).contains(&rate) {
                return fail(format!("{name} must be in [0, 1), got {rate}"));
            }
        }
        if self.critic_layers.is_empty() || self.critic_layers.contains(&0) {
            return fail("critic-layers must be non-empty with positive widths".into());
        }
        if self.critic_activations.len() != self.critic_layers.len() {
            return fail(format!(
                "critic-activations has {} entries for {} layers",
                self.critic_activations.len(),
                self.critic_layers.len()
            ));
        }
        if self.critic_batchnorm.len() > self.critic_layers.len()
            || self.critic_dropout.len() > self.critic_layers.len()
        {
            return fail("critic-batchnorm/critic-dropout list longer than critic-layers".into());
        }
        if self.critic_batch_size == 0 || self.max_memory_factor == 0 {
            return fail("critic-batch-size and max-memory-factor must be >= 1".into());
        }
        if self.total_epochs == 0 {
            return fail("total-epochs must be >= 1".into());
        }
        Ok(())
    }

    /// Sets one field from its hyphenated name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let k = key.as_str();
        match k {
            "z-size" => self.z_size = parse_num(k, value)?,
            "gen-lr" => self.gen_lr = parse_num(k, value)?,
            "gen-optimizer" => self.gen_optimizer = value.parse()?,
            "gen-activation" => self.gen_activation = value.parse()?,
            "gen-batchnorm" => self.gen_batchnorm = parse_bool(k, value)?,
            "gen-dropout" => self.gen_dropout = parse_bool(k, value)?,
            "gen-dropout-rate" => self.gen_dropout_rate = parse_num(k, value)?,
            "gen-hidden-channels" => self.gen_hidden_channels = parse_num(k, value)?,
            "gen-kernel" => self.gen_kernel = parse_num(k, value)?,
            "critic-lr" => self.critic_lr = parse_num(k, value)?,
            "critic-epochs-per-iter" => self.critic_epochs_per_iter = parse_num(k, value)?,
            "critic-optimizer" => self.critic_optimizer = value.parse()?,
            "critic-layers" => self.critic_layers = parse_list(value, |s| parse_num(k, s))?,
            "critic-activations" => self.critic_activations = parse_list(value, str::parse)?,
            "critic-batchnorm" => self.critic_batchnorm = parse_list(value, |s| parse_bool(k, s))?,
            "critic-dropout" => self.critic_dropout = parse_list(value, |s| parse_bool(k, s))?,
            "critic-dropout-rate" => self.critic_dropout_rate = parse_num(k, value)?,
            "sample-factor" => self.sample_factor = parse_num(k, value)?,
            "total-epochs" => self.total_epochs = parse_num(k, value)?,
            "critic-batch-size" => self.critic_batch_size = parse_num(k, value)?,
            "max-memory-factor" => self.max_memory_factor = parse_num(k, value)?,
            "early-stopping-patience" => self.early_stopping_patience = parse_num(k, value)?,
            "metric" => self.metric = value.parse()?,
            "seed" => self.seed = parse_num(k, value)?,
            "round-inner-labels" => self.round_inner_labels = parse_bool(k, value)?,
            "augment" => self.augment = parse_bool(k, value)?,
            "inner-steps" => self.inner.steps = parse_num(k, value)?,
            "inner-lr" => self.inner.learning_rate = parse_num(k, value)?,
            "inner-optimizer" => self.inner.optimizer = value.parse()?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines over `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
