//! Batch-emitting GAN oversampler. The generator turns one noise vector into
//! an entire training batch; the critic learns to predict the score a
//! classifier trained on that batch reaches on the real training data, and
//! the generator climbs the critic's estimate.

mod config;
mod memory;
mod model;

use std::io::Write;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

pub use config::DraganConfig;
pub use memory::ReplayMemory;
pub use model::{Critic, CriticBlock, Generator};

use crate::classify::{train_logreg, LogRegConfig};
use crate::data::{fit_minmax, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::metrics::{ScoreMetric, ScoredPredictions};
use crate::nn::{Graph, Mode, Optimizer, Tensor, Var};
use crate::oversample::round_label;
use crate::rng::{derive_seed, rng_from_seed, tag, Rng};

/// One generator output in scaled feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedBatch {
    pub features: Matrix,
    pub soft_labels: Vec<f64>,
    pub achieved_score: Option<f64>,
}

impl GeneratedBatch {
    /// Splits a row-major `[m, d + 1]` buffer whose last column is the label.
    pub fn from_flat(rows: usize, features: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != rows * (features + 1) {
            return Err(Error::Dimension {
                op: "generated batch",
                expected: format!("{}", rows * (features + 1)),
                got: format!("{}", flat.len()),
            });
        }
        let mut x = Vec::with_capacity(rows * features);
        let mut y = Vec::with_capacity(rows);
        for r in flat.chunks_exact(features + 1) {
            x.extend_from_slice(&r[..features]);
            y.push(r[features]);
        }
        Ok(Self {
            features: Matrix::new(rows, features, x)?,
            soft_labels: y,
            achieved_score: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.soft_labels.len()
    }

    pub fn rounded_labels(&self) -> Vec<u8> {
        self.soft_labels.iter().map(|&y| round_label(y)).collect()
    }
}

/// Trains a fresh classifier on the batch and scores it on `real`. The
/// score is stored in the batch and returned.
pub fn evaluate_batch(
    batch: &mut GeneratedBatch,
    real: &Dataset,
    metric: ScoreMetric,
    inner: &LogRegConfig,
    round_labels: bool,
) -> Result<f64> {
    if batch.features.cols() != real.dim() {
        return Err(Error::Dimension {
            op: "evaluate_batch",
            expected: format!("{} features", real.dim()),
            got: format!("{}", batch.features.cols()),
        });
    }
    let targets: Vec<f64> = if round_labels {
        batch.rounded_labels().into_iter().map(f64::from).collect()
    } else {
        batch.soft_labels.clone()
    };
    let model = train_logreg(&batch.features, &targets, inner)?;
    let scores = model.predict_proba(&real.features)?;
    let score = metric.evaluate(&ScoredPredictions::new(scores, real.labels.clone())?)?;
    batch.achieved_score = Some(score);
    Ok(score)
}

/// Per-epoch telemetry. `critic_loss` is absent while memory holds fewer
/// than two entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub achieved_score: f64,
    pub critic_loss: Option<f64>,
    pub generator_loss: f64,
    pub best_score: f64,
    pub epochs_since_improvement: usize,
}

pub fn write_telemetry_csv(records: &[EpochRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "achieved_score", "critic_loss", "generator_loss", "best_score"])?;
    for r in records {
        w.write_record([
            r.epoch.to_string(),
            r.achieved_score.to_string(),
            r.critic_loss.map_or_else(|| "NA".to_string(), |v| v.to_string()),
            r.generator_loss.to_string(),
            r.best_score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A generator forward pass kept alive so the generator step can
/// backpropagate through exactly the batch that was scored.
pub struct PendingBatch {
    graph: Graph,
    output: Var,
    pub batch: GeneratedBatch,
}

impl PendingBatch {
    /// Raw generator output, row-major `[m, d + 1]`.
    pub fn flat(&self) -> &[f64] {
        self.graph.value(self.output).data()
    }
}

/// Networks, optimizers, memory and early-stopping bookkeeping of one run.
pub struct DraganState {
    pub config: DraganConfig,
    pub real: Dataset,
    pub rows: usize,
    pub generator: Generator,
    pub critic: Critic,
    pub memory: ReplayMemory,
    pub best_batch: Option<GeneratedBatch>,
    pub best_score: f64,
    pub epochs_since_improvement: usize,
    pub epoch: usize,
    pub score_history: Vec<f64>,
    pub telemetry: Vec<EpochRecord>,
    gen_opt: Optimizer,
    critic_opt: Optimizer,
    noise_rng: Rng,
    dropout_rng: Rng,
    memory_rng: Rng,
}

impl DraganState {
    /// `real` is expected in min-max scaled units.
    pub fn new(real: &Dataset, config: &DraganConfig) -> Result<Self> {
        config.validate()?;
        real.validate()?;
        let rows = config.batch_rows(real.len());
        let d = real.dim();
        let mut init = rng_from_seed(derive_seed(config.seed, &[tag("init")]));
        let generator = Generator::new(config, d, rows, &mut init)?;
        let critic = Critic::new(config, d, rows, &mut init)?;
        let gen_opt = Optimizer::new(config.gen_optimizer, config.gen_lr, generator.params())?;
        let critic_opt = Optimizer::new(config.critic_optimizer, config.critic_lr, critic.params())?;
        Ok(Self {
            config: config.clone(),
            real: real.clone(),
            rows,
            generator,
            critic,
            memory: ReplayMemory::new(config.memory_capacity()),
            best_batch: None,
            best_score: f64::NEG_INFINITY,
            epochs_since_improvement: 0,
            epoch: 0,
            score_history: Vec::new(),
            telemetry: Vec::new(),
            gen_opt,
            critic_opt,
            noise_rng: rng_from_seed(derive_seed(config.seed, &[tag("noise")])),
            dropout_rng: rng_from_seed(derive_seed(config.seed, &[tag("dropout")])),
            memory_rng: rng_from_seed(derive_seed(config.seed, &[tag("memory")])),
        })
    }

    pub fn finished(&self) -> bool {
        self.epoch >= self.config.total_epochs
            || (self.epoch > 0 && self.epochs_since_improvement >= self.config.early_stopping_patience)
    }

    /// Draws fresh noise and runs the generator in training mode.
    pub fn generate(&mut self) -> Result<PendingBatch> {
        let z = self.config.z_size;
        let noise: Vec<f64> = (0..z).map(|_| StandardNormal.sample(&mut self.noise_rng)).collect();
        let mut graph = Graph::new();
        let kappa = graph.constant(Tensor::new(vec![1, z], noise)?);
        let output = self.generator.forward(&mut graph, kappa, Mode::Train, &mut self.dropout_rng)?;
        let batch = GeneratedBatch::from_flat(self.rows, self.real.dim(), graph.value(output).data())?;
        Ok(PendingBatch { graph, output, batch })
    }

    /// Passes over shuffled memory in minibatches, minimizing squared error
    /// to the stored scores. Returns the mean minibatch loss.
    pub fn train_critic(&mut self) -> Result<Option<f64>> {
        let n = self.memory.len();
        if n < 2 {
            return Ok(None);
        }
        let width = self.critic.inputs;
        let bs = self.config.critic_batch_size.max(2);
        let (mut total, mut count) = (0.0, 0usize);
        for _ in 0..self.config.critic_epochs_per_iter {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut self.memory_rng);
            let mut chunks: Vec<&[usize]> = order.chunks(bs).collect();
            // A single-row minibatch cannot be batch-normalized; fold it in.
            if chunks.len() > 1 && chunks.last().is_some_and(|c| c.len() == 1) {
                chunks.pop();
                let k = chunks.len() - 1;
                chunks[k] = &order[k * bs..];
            }
            for chunk in chunks {
                let mut x = Vec::with_capacity(chunk.len() * width);
                let mut y = Vec::with_capacity(chunk.len());
                for &i in chunk {
                    let (batch, score) = &self.memory.entries()[i];
                    x.extend_from_slice(batch);
                    y.push(*score);
                }
                let mut g = Graph::new();
                let xv = g.constant(Tensor::new(vec![chunk.len(), width], x)?);
                let out = self.critic.forward(&mut g, xv, Mode::Train, false, &mut self.dropout_rng)?;
                let loss = g.mse(out, &y)?;
                total += g.value(loss).data()[0];
                count += 1;
                g.backward(loss)?;
                g.write_grads(self.critic.params_mut());
                // Release shared weight storage so the update happens in place.
                drop(g);
                self.critic_opt.step(self.critic.params_mut())?;
            }
        }
        Ok(Some(total / count as f64))
    }

    /// One generator update on `(1 − critic(batch))²` with the critic frozen
    /// and in evaluation mode.
    pub fn train_generator(&mut self, pending: PendingBatch) -> Result<f64> {
        let PendingBatch { mut graph, output, .. } = pending;
        let g = &mut graph;
        let flat = g.reshape(output, &[1, self.critic.inputs])?;
        let est = self.critic.forward(g, flat, Mode::Eval, true, &mut self.dropout_rng)?;
        let gap = g.scale(est, -1.0);
        let gap = g.offset(gap, 1.0);
        let sq = g.square(gap);
        let loss = g.mean(sq);
        let value = g.value(loss).data()[0];
        g.backward(loss)?;
        g.write_grads(self.generator.params_mut());
        drop(graph);
        self.gen_opt.step(self.generator.params_mut())?;
        Ok(value)
    }

    pub fn run_epoch(&mut self) -> Result<EpochRecord> {
        let mut pending = self.generate()?;
        let score = evaluate_batch(
            &mut pending.batch,
            &self.real,
            self.config.metric,
            &self.config.inner,
            self.config.round_inner_labels,
        )?;
        let flat = pending.flat().to_vec();
        self.memory.push(flat, score, &mut self.memory_rng);
        let critic_loss = self.train_critic()?;
        let batch = pending.batch.clone();
        let generator_loss = self.train_generator(pending)?;

        self.epoch += 1;
        self.score_history.push(score);
        if score > self.best_score {
            self.best_score = score;
            self.best_batch = Some(batch);
            self.epochs_since_improvement = 0;
        } else {
            self.epochs_since_improvement += 1;
        }
        let record = EpochRecord {
            epoch: self.epoch,
            achieved_score: score,
            critic_loss,
            generator_loss,
            best_score: self.best_score,
            epochs_since_improvement: self.epochs_since_improvement,
        };
        self.telemetry.push(record);
        Ok(record)
    }
}

/// Runs epochs until `total_epochs` or until the score has not improved for
/// `early_stopping_patience` epochs.
pub fn train_dragan(real: &Dataset, config: &DraganConfig) -> Result<DraganState> {
    let mut state = DraganState::new(real, config)?;
    while !state.finished() {
        state.run_epoch()?;
    }
    Ok(state)
}

/// Trains on min-max scaled `real` and emits the best batch in original
/// units with labels rounded at 0.5. With `augment`, the real rows follow
/// the generated ones.
pub fn resample_with_dragan(real: &Dataset, config: &DraganConfig) -> Result<Dataset> {
    Ok(resample_with_dragan_state(real, config)?.0)
}

pub fn resample_with_dragan_state(real: &Dataset, config: &DraganConfig) -> Result<(Dataset, DraganState)> {
    real.validate()?;
    let scaler = fit_minmax(real);
    let scaled = scaler.apply_dataset(real);
    let state = train_dragan(&scaled, config)?;
    let best = state
        .best_batch
        .as_ref()
        .ok_or_else(|| Error::Contract("training produced no batch".into()))?;
    let features = scaler.invert(&best.features);
    let mut out = Dataset::unchecked(format!("{}_dragan", real.name), features, best.rounded_labels())?;
    out.feature_names = real.feature_names.clone();
    if config.augment {
        for i in 0..real.len() {
            out.push(real.features.row(i), real.labels[i])?;
        }
    }
    Ok((out, state))
}
