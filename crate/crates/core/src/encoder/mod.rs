//! A small from-scratch transformer encoder with graph-masked attention,
//! a multi-granularity fact classifier, and a deterministic training loop.
//!
//! No pretrained weights: embeddings and projections are randomly
//! initialized from a seed. The point is the mechanism (masked
//! information flow across granularity levels), not model capacity.

mod backward;
mod forward;
mod gradcheck;
mod params;
#[cfg(test)]
mod tests;
mod train;
mod vocab;

pub use backward::loss_and_grads;
pub use forward::{
    bce_loss, classify_facts, embed, encode, masked_attention, score_facts, EncodeOutput,
};
pub use gradcheck::{grad_check, grad_norm};
pub use params::{load_checkpoint, save_checkpoint, EncoderParams, LayerParams, Model};
pub use train::{
    lr_schedule, train, training_accuracy, CurvePoint, TrainExample, TrainRun, TrainingConfig,
};
pub use vocab::Vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierseq::WordScope;

/// Which granularity representations feed the fact classifier, always
/// concatenated in document-sentence-fact order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ClassifierMode {
    #[serde(rename = "f")]
    F,
    #[serde(rename = "d+f")]
    DF,
    #[serde(rename = "s+f")]
    SF,
    #[default]
    #[serde(rename = "d+s+f")]
    DSF,
}

impl ClassifierMode {
    /// Number of concatenated d_model-sized parts.
    pub fn parts(self) -> usize {
        match self {
            ClassifierMode::F => 1,
            ClassifierMode::DF | ClassifierMode::SF => 2,
            ClassifierMode::DSF => 3,
        }
    }

    pub fn uses_document(self) -> bool {
        matches!(self, ClassifierMode::DF | ClassifierMode::DSF)
    }

    pub fn uses_sentence(self) -> bool {
        matches!(self, ClassifierMode::SF | ClassifierMode::DSF)
    }

    pub const ALL: [ClassifierMode; 4] = [
        ClassifierMode::F,
        ClassifierMode::DF,
        ClassifierMode::SF,
        ClassifierMode::DSF,
    ];
}

impl fmt::Display for ClassifierMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassifierMode::F => "f",
            ClassifierMode::DF => "d+f",
            ClassifierMode::SF => "s+f",
            ClassifierMode::DSF => "d+s+f",
        };
        f.write_str(s)
    }
}

impl FromStr for ClassifierMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" => Ok(ClassifierMode::F),
            "d+f" => Ok(ClassifierMode::DF),
            "s+f" => Ok(ClassifierMode::SF),
            "d+s+f" => Ok(ClassifierMode::DSF),
            other => Err(Error::usage(format!(
                "unknown classifier mode {other:?} (expected f, d+f, s+f, or d+s+f)"
            ))),
        }
    }
}

/// How the attention mask is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Masked logits become negative infinity; masked weights are exactly
    /// zero and no information crosses a missing edge.
    #[default]
    Additive,
    /// Masked logits are multiplied by zero before the softmax, leaving
    /// masked positions with small but nonzero attention weight. Kept for
    /// comparison only.
    Multiplicative,
}

/// Architecture and ablation switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    pub max_len: usize,
    pub use_segment: bool,
    pub use_position: bool,
    pub classifier_mode: ClassifierMode,
    pub word_scope: WordScope,
    pub mask_mode: MaskMode,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            d_model: 64,
            n_layers: 2,
            n_heads: 2,
            d_ff: 128,
            vocab_size: vocab::SPECIAL_TOKENS.len(),
            max_len: crate::hierseq::DEFAULT_MAX_LEN,
            use_segment: true,
            use_position: true,
            classifier_mode: ClassifierMode::default(),
            word_scope: WordScope::default(),
            mask_mode: MaskMode::default(),
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.n_heads == 0 {
            return Err(Error::usage("d_model and n_heads must be >= 1"));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::usage(format!(
                "d_model {} must be divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.vocab_size < vocab::SPECIAL_TOKENS.len() {
            return Err(Error::usage("vocab_size must cover the special tokens"));
        }
        if self.max_len < 5 {
            return Err(Error::usage("max_len must be >= 5"));
        }
        Ok(())
    }

    /// Width of the classifier input vector.
    pub fn concat_width(&self) -> usize {
        self.d_model * self.classifier_mode.parts()
    }
}
