//! Fact-level extractive summarization toolkit.
//!
//! The pipeline: ingest dependency-parsed documents ([`corpus`]), split
//! sentences into fact units ([`segmenter`]), derive oracle labels by
//! ROUGE alignment ([`aligner`], [`rouge`]), flatten documents into
//! multi-granularity sequences with hierarchical attention masks
//! ([`hierseq`]), train a small graph-masked transformer classifier
//! ([`encoder`]), and select summaries with trigram blocking
//! ([`select`]).

pub mod aligner;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod fixture;
pub mod hierseq;
pub mod rouge;
pub mod segmenter;
pub mod select;

pub use aligner::{align_facts, greedy_sentence_oracle, MatchEntry, OracleLabels, OracleMode};
pub use corpus::{
    corpus_stats, load_conllu, load_dataset, load_dataset_lenient, save_dataset, CorpusStats,
    DepEdge, DocumentRecord, ParsedSentence, Token, UnitStats,
};
pub use encoder::{
    bce_loss, classify_facts, embed, encode, grad_check, loss_and_grads, lr_schedule,
    masked_attention, score_facts, train, ClassifierMode, EncoderConfig, EncoderParams, MaskMode,
    Model, TrainExample, TrainingConfig, Vocab,
};
pub use error::{Error, ErrorClass, Result};
pub use hierseq::{build_mask, build_sequence, HierSequence, MaskMatrix, Role, WordScope};
pub use rouge::{rouge_l, rouge_n, rouge_suite, RougeScore, RougeSuite};
pub use segmenter::{segment_document, split_sentence, Fact, SegmenterConfig};
pub use select::{lead_baseline, position_histogram, rank_and_select, SelectionConfig};
