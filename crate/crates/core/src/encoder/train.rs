//! Adam training with an inverse-square-root warmup schedule.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backward::loss_and_grads;
use super::forward::{classify_facts, encode};
use super::params::EncoderParams;
use super::vocab::Vocab;
use super::EncoderConfig;
use crate::error::{Error, Result};
use crate::hierseq::{build_mask, HierSequence, MaskMatrix};

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    /// Schedule coefficient; the peak learning rate is
    /// `base_lr / sqrt(warmup_steps)`.
    pub base_lr: f64,
    pub warmup_steps: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub max_steps: usize,
    /// Emit a checkpoint every this many steps; zero disables.
    pub checkpoint_every: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            base_lr: 2e-3,
            warmup_steps: 10_000,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 32,
            max_steps: 1_000,
            checkpoint_every: 0,
            seed: 42,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup_steps == 0 {
            return Err(Error::usage("warmup_steps must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::usage("batch_size must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::usage("Adam betas must lie in [0, 1)"));
        }
        if self.base_lr <= 0.0 {
            return Err(Error::usage("base_lr must be positive"));
        }
        Ok(())
    }
}

/// Warmup-then-decay schedule:
/// `base_lr * min(step^-0.5, step * warmup^-1.5)`.
pub fn lr_schedule(step: usize, tcfg: &TrainingConfig) -> Result<f64> {
    if step == 0 {
        return Err(Error::usage("schedule steps start at 1"));
    }
    let s = step as f64;
    let w = tcfg.warmup_steps as f64;
    Ok(tcfg.base_lr * (s.powf(-0.5)).min(s * w.powf(-1.5)))
}

/// One labeled document ready for training: its flattened sequence, the
/// matching mask, and one gold label per surviving fact.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub id: String,
    pub seq: HierSequence,
    pub mask: MaskMatrix,
    pub labels: Vec<bool>,
}

impl TrainExample {
    pub fn new(
        id: impl Into<String>,
        seq: HierSequence,
        labels: Vec<bool>,
        cfg: &EncoderConfig,
    ) -> Result<TrainExample> {
        if labels.len() != seq.fact_count() {
            return Err(Error::usage(format!(
                "{} labels for {} facts",
                labels.len(),
                seq.fact_count()
            )));
        }
        let mask = build_mask(&seq, cfg.word_scope);
        Ok(TrainExample {
            id: id.into(),
            seq,
            mask,
            labels,
        })
    }
}

/// One row of the loss curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
}

/// Output of a training run.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub params: EncoderParams,
    pub curve: Vec<CurvePoint>,
}

/// Train from scratch with Adam under the warmup schedule. A fixed seed
/// makes the run fully reproducible: initialization, batch order, and
/// therefore the loss curve. `on_checkpoint` fires per cadence.
pub fn train(
    examples: &[TrainExample],
    vocab: &Vocab,
    cfg: &EncoderConfig,
    tcfg: &TrainingConfig,
    mut on_checkpoint: impl FnMut(usize, &EncoderParams) -> Result<()>,
) -> Result<TrainRun> {
    cfg.validate()?;
    tcfg.validate()?;
    if examples.is_empty() {
        return Err(Error::usage("training requires at least one example"));
    }

    let mut params = EncoderParams::init(cfg, tcfg.seed);
    let n_params = params.n_params();
    let mut m = vec![0.0f64; n_params];
    let mut v = vec![0.0f64; n_params];

    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    let mut pos = 0usize;

    let mut curve = Vec::with_capacity(tcfg.max_steps);
    for step in 1..=tcfg.max_steps {
        let mut batch = Vec::with_capacity(tcfg.batch_size);
        for _ in 0..tcfg.batch_size.min(examples.len()) {
            if pos == order.len() {
                order.shuffle(&mut rng);
                pos = 0;
            }
            batch.push(order[pos]);
            pos += 1;
        }

        let mut grads = EncoderParams::zeros(cfg);
        let mut batch_loss = 0.0;
        let weight = 1.0 / batch.len() as f64;
        for &idx in &batch {
            let ex = &examples[idx];
            let (loss, g, _) = loss_and_grads(&ex.seq, &ex.mask, &ex.labels, vocab, &params, cfg)?;
            if !loss.is_finite() {
                return Err(Error::internal(format!(
                    "non-finite loss at step {step} (example {})",
                    ex.id
                )));
            }
            batch_loss += loss * weight;
            grads.add_scaled(&g, weight);
        }

        let lr = lr_schedule(step, tcfg)?;
        let gflat = grads.flatten();
        let mut pflat = params.flatten();
        let t = step as f64;
        let bc1 = 1.0 - tcfg.beta1.powf(t);
        let bc2 = 1.0 - tcfg.beta2.powf(t);
        for k in 0..n_params {
            m[k] = tcfg.beta1 * m[k] + (1.0 - tcfg.beta1) * gflat[k];
            v[k] = tcfg.beta2 * v[k] + (1.0 - tcfg.beta2) * gflat[k] * gflat[k];
            let mhat = m[k] / bc1;
            let vhat = v[k] / bc2;
            pflat[k] -= lr * mhat / (vhat.sqrt() + tcfg.adam_eps);
        }
        params.assign_flat(&pflat)?;

        curve.push(CurvePoint {
            step,
            lr,
            loss: batch_loss,
        });
        if tcfg.checkpoint_every > 0 && step % tcfg.checkpoint_every == 0 {
            on_checkpoint(step, &params)?;
        }
    }

    Ok(TrainRun { params, curve })
}

/// Fraction of facts whose thresholded score matches the gold label.
pub fn training_accuracy(
    examples: &[TrainExample],
    vocab: &Vocab,
    params: &EncoderParams,
    cfg: &EncoderConfig,
) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for ex in examples {
        let out = encode(&ex.seq, &ex.mask, vocab, params, cfg)?;
        let scores = classify_facts(&out.hidden, &ex.seq, params, cfg)?;
        for (s, &y) in scores.iter().zip(&ex.labels) {
            if (*s > 0.5) == y {
                hits += 1;
            }
            total += 1;
        }
    }
    Ok(hits as f64 / total as f64)
}
