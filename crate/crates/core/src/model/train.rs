use std::fmt;
use std::time::Instant;

use crate::corpus::TrainingBatch;
use crate::error::{Error, Result};
use crate::ndmath::{Prng, Vector};

use super::cell::encode_into;
use super::forward::{backward_accumulate, forward_sequence_with, ForwardOptions};
use super::optim::{adam_step, clip_global_norm, dropout_mask, AdamConfig, OptimizerState};
use super::{LstmState, ModelParams};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub seq_len: usize,
    pub lr: f64,
    pub clip_norm: f64,
    pub keep_prob: f64,
    /// Zero the recurrent state whenever a START token is fed, so every
    /// review is learned from the same blank state generation starts from.
    pub reset_at_start: bool,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            seq_len: 64,
            lr: 2e-3,
            clip_norm: 5.0,
            keep_prob: 0.8,
            reset_at_start: true,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.seq_len == 0 {
            return Err(Error::Validation("batch_size and seq_len must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Validation(format!("learning rate {} must be positive", self.lr)));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::Validation("clip_norm must be positive".into()));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(Error::Validation(format!("keep_prob {} not in (0, 1]", self.keep_prob)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub mean_loss: f64,
    pub tokens: usize,
    pub wall_secs: f64,
}

impl fmt::Display for EpochReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epoch={} loss={:.6} tokens={} wall_s={:.3}",
            self.epoch, self.mean_loss, self.tokens, self.wall_secs
        )
    }
}

/// Truncated-BPTT training loop. Lane states carry over between chunks and
/// reset at the start of every epoch.
pub struct Trainer {
    pub params: ModelParams,
    pub optimizer: OptimizerState,
    config: TrainConfig,
    rng: Prng,
    epoch: usize,
}

impl Trainer {
    pub fn new(params: ModelParams, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        let optimizer = OptimizerState::new(&params.weights, config.adam);
        let rng = Prng::new(config.seed ^ 0xD20F_0D70);
        Ok(Trainer {
            params,
            optimizer,
            config,
            rng,
            epoch: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    pub fn train_epoch(&mut self, batches: &[TrainingBatch]) -> Result<EpochReport> {
        let started = Instant::now();
        let lanes = batches.first().map_or(0, |b| b.lanes.len());
        if lanes == 0 {
            return Err(Error::Validation("no training batches".into()));
        }
        let mut states = vec![self.params.zero_state(); lanes];
        let mut loss_sum = 0.0;
        let mut tokens = 0usize;
        let mut grads = self.params.weights.zeros_like();

        for batch in batches {
            if batch.lanes.len() != lanes {
                return Err(Error::shape("train_epoch lanes", lanes, batch.lanes.len()));
            }
            let batch_tokens = batch.token_count();
            if batch_tokens == 0 {
                continue;
            }
            grads.fill(0.0);
            let scale = 1.0 / batch_tokens as f64;
            for (lane, state) in batch.lanes.iter().zip(states.iter_mut()) {
                let inputs = encode_lane(&self.params, lane)?;
                let resets = self.resets(&lane.inputs);
                let masks = self.masks(lane.inputs.len())?;
                let pass = forward_sequence_with(
                    &self.params,
                    &inputs,
                    state,
                    ForwardOptions {
                        resets: Some(&resets),
                        dropout: masks.as_deref(),
                    },
                )?;
                loss_sum += pass.cache.loss_sum(&lane.targets)?;
                backward_accumulate(&self.params, &pass.cache, &lane.targets, scale, &mut grads)?;
                *state = pass.final_state;
            }
            tokens += batch_tokens;
            clip_global_norm(&mut grads, self.config.clip_norm);
            adam_step(&mut self.params.weights, &grads, &mut self.optimizer, self.config.lr)?;
        }
        if !self.params.weights.is_finite() {
            return Err(Error::Validation("training diverged (non-finite weights)".into()));
        }
        self.epoch += 1;
        Ok(EpochReport {
            epoch: self.epoch,
            mean_loss: loss_sum / tokens.max(1) as f64,
            tokens,
            wall_secs: started.elapsed().as_secs_f64(),
        })
    }

    fn resets(&self, inputs: &[usize]) -> Vec<bool> {
        let start = self.params.vocab.start_index();
        inputs
            .iter()
            .map(|&c| self.config.reset_at_start && c == start)
            .collect()
    }

    fn masks(&mut self, steps: usize) -> Result<Option<Vec<Vec<Vector>>>> {
        if self.config.keep_prob >= 1.0 {
            return Ok(None);
        }
        let layers = self.params.weights.layers.len();
        let hidden = self.params.hidden;
        let keep = self.config.keep_prob;
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            out.push(
                (0..layers)
                    .map(|_| dropout_mask(&mut self.rng, hidden, keep))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(Some(out))
    }
}

fn encode_lane(params: &ModelParams, lane: &crate::corpus::LaneChunk) -> Result<Vec<Vector>> {
    let v = params.vocab_size();
    lane.inputs
        .iter()
        .zip(&lane.aux)
        .map(|(&c, aux)| {
            if c >= v {
                return Err(Error::Index { index: c, len: v });
            }
            let mut x = Vector::zeros(params.input_width());
            encode_into(c, aux, v, &mut x);
            Ok(x)
        })
        .collect()
}

/// Mean per-character cross-entropy over `batches` without dropout or
/// updates.
pub fn evaluate_loss(params: &ModelParams, batches: &[TrainingBatch], reset_at_start: bool) -> Result<f64> {
    let lanes = batches.first().map_or(0, |b| b.lanes.len());
    let mut states: Vec<LstmState> = vec![params.zero_state(); lanes];
    let start = params.vocab.start_index();
    let mut total = 0.0;
    let mut tokens = 0;
    for batch in batches {
        for (lane, state) in batch.lanes.iter().zip(states.iter_mut()) {
            let inputs = encode_lane(params, lane)?;
            let resets: Vec<bool> = lane.inputs.iter().map(|&c| reset_at_start && c == start).collect();
            let pass = forward_sequence_with(
                params,
                &inputs,
                state,
                ForwardOptions {
                    resets: Some(&resets),
                    dropout: None,
                },
            )?;
            total += pass.cache.loss_sum(&lane.targets)?;
            tokens += lane.targets.len();
            *state = pass.final_state;
        }
    }
    if tokens == 0 {
        return Err(Error::Validation("no tokens to evaluate".into()));
    }
    Ok(total / tokens as f64)
}
