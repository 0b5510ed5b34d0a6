//! Imbalanced binary classification on tabular data: a batch-emitting GAN
//! oversampler whose critic predicts downstream classifier quality,
//! SMOTE-family baselines, logistic regression, metrics, and a
//! cross-validation benchmark harness.

pub mod classify;
pub mod data;
pub mod dragan;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod oversample;
pub mod rng;

pub use error::{Error, Result};
