//! Mini-batch training with periodic snapshots and validation-based
//! model selection.
//!
//! Batches are consecutive chunks of a per-epoch shuffled permutation,
//! deterministic given the seed. Every `snapshot_every` iterations (and at
//! the final iteration) the current parameters are scored on the
//! validation set; the snapshot with the highest validation metric is
//! returned. No explicit regularization.

use super::adam::{adam_step, AdamHyper, AdamState};
use super::backprop::loss_and_gradients;
use super::{forward, MLPParams, ModelConfig, ModelConfigError};
use crate::eval::average_precision;
use crate::features::{SparseMatrix, SparseVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Optimization loop settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Validation cadence in iterations.
    pub snapshot_every: usize,
    pub max_iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            snapshot_every: 250,
            max_iterations: 3000,
            learning_rate: 1e-3,
            seed: 42,
        }
    }
}

/// Training failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("{0}")]
    BadModelConfig(#[from] ModelConfigError),
    #[error("invalid train config: {0}")]
    BadTrainConfig(&'static str),
    #[error("{0}")]
    BadData(String),
    #[error("training diverged at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("validation set has a single class; the selection metric is undefined")]
    SingleClassValidation,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::BadTrainConfig("batch_size must be >= 1"));
        }
        if self.snapshot_every == 0 {
            return Err(TrainError::BadTrainConfig("snapshot_every must be >= 1"));
        }
        if self.max_iterations == 0 {
            return Err(TrainError::BadTrainConfig("max_iterations must be >= 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(TrainError::BadTrainConfig(
                "learning_rate must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// One snapshot record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogEntry {
    pub iteration: usize,
    pub train_loss: f64,
    pub val_metric: f64,
}

/// Selected parameters plus the full snapshot log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: MLPParams,
    pub log: Vec<TrainLogEntry>,
    pub best_iteration: usize,
    pub best_val_metric: f64,
}

/// Train selecting on validation average precision.
pub fn train(
    train_x: &SparseMatrix,
    train_y: &[f64],
    val_x: &SparseMatrix,
    val_y: &[f64],
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    train_with_metric(
        train_x,
        train_y,
        val_x,
        val_y,
        model_config,
        train_config,
        &|scores, labels| average_precision(scores, labels),
    )
}

/// Train selecting on an arbitrary validation metric (higher is better;
/// `None` marks the metric undefined and aborts).
pub fn train_with_metric(
    train_x: &SparseMatrix,
    train_y: &[f64],
    val_x: &SparseMatrix,
    val_y: &[f64],
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    metric: &dyn Fn(&[f64], &[bool]) -> Option<f64>,
) -> Result<TrainOutcome, TrainError> {
    train_config.validate()?;
    if train_x.n_rows() == 0 {
        return Err(TrainError::BadData("empty training set".into()));
    }
    if train_x.n_rows() != train_y.len() || val_x.n_rows() != val_y.len() {
        return Err(TrainError::BadData(
            "label count does not match row count".into(),
        ));
    }
    if train_x.n_cols != val_x.n_cols {
        return Err(TrainError::BadData(format!(
            "train has {} columns, validation has {}",
            train_x.n_cols, val_x.n_cols
        )));
    }
    if model_config.input_dim != train_x.n_cols {
        return Err(TrainError::BadData(format!(
            "model expects {} inputs, data has {} columns",
            model_config.input_dim, train_x.n_cols
        )));
    }

    let mut params = MLPParams::init(model_config)?;
    let mut adam = AdamState::new(&params);
    let hyper = AdamHyper {
        learning_rate: train_config.learning_rate,
        ..Default::default()
    };
    let val_labels: Vec<bool> = val_y.iter().map(|y| *y > 0.5).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
    let n = train_x.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;

    let mut log = Vec::new();
    let mut best: Option<(MLPParams, usize, f64)> = None;

    for iteration in 1..=train_config.max_iterations {
        if cursor >= n {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let end = (cursor + train_config.batch_size).min(n);
        let batch: Vec<(&SparseVector, f64)> = order[cursor..end]
            .iter()
            .map(|i| (&train_x.rows[*i], train_y[*i]))
            .collect();
        cursor = end;

        let (loss, grads) =
            loss_and_gradients(&params, &batch).map_err(|_| TrainError::Diverged { iteration })?;
        adam_step(&mut params, &grads, &mut adam, &hyper);

        let at_snapshot =
            iteration % train_config.snapshot_every == 0 || iteration == train_config.max_iterations;
        if at_snapshot {
            if params.first_non_finite_layer().is_some() {
                return Err(TrainError::Diverged { iteration });
            }
            let scores: Vec<f64> = val_x.rows.iter().map(|x| forward(&params, x)).collect();
            let val_metric =
                metric(&scores, &val_labels).ok_or(TrainError::SingleClassValidation)?;
            log.push(TrainLogEntry {
                iteration,
                train_loss: loss,
                val_metric,
            });
            let improved = best
                .as_ref()
                .map_or(true, |(_, _, best_metric)| val_metric > *best_metric);
            if improved {
                best = Some((params.clone(), iteration, val_metric));
            }
            log::debug!("iteration {iteration}: loss {loss:.6}, val metric {val_metric:.6}");
        }
    }

    let (params, best_iteration, best_val_metric) =
        best.expect("max_iterations >= 1 guarantees at least one snapshot");
    Ok(TrainOutcome {
        params,
        log,
        best_iteration,
        best_val_metric,
    })
}
