//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use factsum_core::{ClassifierMode, EncoderConfig, SegmenterConfig, TrainingConfig, WordScope};

#[derive(Parser, Debug)]
#[command(
    name = "factsum",
    version,
    about = "Fact-level extractive summarization pipeline",
    long_about = "Batch pipeline over dependency-parsed corpora: segment sentences into facts, \
derive oracle labels, train a graph-masked encoder, select summaries, and evaluate with ROUGE. \
Stages hand off through files, one JSON record per line."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Structured config file (JSON); the FACTSUM_CONFIG environment
    /// variable supplies the path when this flag is absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for every source of randomness in the run.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Run log; one JSON manifest line is appended per invocation.
    #[arg(long, global = true, default_value = "factsum_runs.jsonl")]
    pub manifest: PathBuf,

    /// Fail the run (exit 2) if any record was skipped with a warning.
    #[arg(long, global = true)]
    pub deny_warnings: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Corpus statistics at sentence and fact granularity
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// Optional CSV destination
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        seg: SegmenterArgs,
    },
    /// Split every document into fact units
    Segment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        seg: SegmenterArgs,
    },
    /// Derive oracle extraction labels and report oracle ROUGE
    Oracle {
        /// Dataset with gold summaries
        #[arg(long)]
        input: PathBuf,
        /// Facts file produced by `segment`
        #[arg(long)]
        facts: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Fact)]
        mode: ModeArg,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        seg: SegmenterArgs,
    },
    /// Train the fact classifier from oracle labels
    Train {
        #[arg(long)]
        input: PathBuf,
        /// Labels file produced by `oracle --mode fact`
        #[arg(long)]
        labels: PathBuf,
        /// Checkpoint destination
        #[arg(long)]
        output: PathBuf,
        /// Loss curve CSV destination
        #[arg(long)]
        curve: Option<PathBuf>,
        #[command(flatten)]
        seg: SegmenterArgs,
        #[command(flatten)]
        enc: EncoderArgs,
        #[command(flatten)]
        tr: TrainingArgs,
    },
    /// Produce summaries with a trained model or the lead baseline
    Summarize {
        #[arg(long)]
        input: PathBuf,
        /// Trained checkpoint (omit when using --lead)
        #[arg(long, required_unless_present = "lead")]
        model: Option<PathBuf>,
        /// Take the first N sentences instead of running a model
        #[arg(long, conflicts_with = "model")]
        lead: Option<usize>,
        #[arg(long)]
        output: PathBuf,
        /// Summary size in facts
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        no_trigram_blocking: bool,
        #[command(flatten)]
        seg: SegmenterArgs,
    },
    /// Score summaries against gold references with ROUGE-1/2/L
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        summaries: PathBuf,
        /// Optional per-document CSV destination
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Bucket the document positions of extracted facts
    Positions {
        /// Facts file produced by `segment`
        #[arg(long)]
        facts: PathBuf,
        #[arg(long)]
        summaries: PathBuf,
        /// Optional CSV destination
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Dump one document's attention mask as rows of 0/1 characters
    Mask {
        #[arg(long)]
        input: PathBuf,
        /// Document id (defaults to the first record)
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long, value_enum)]
        word_scope: Option<WordScopeArg>,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        seg: SegmenterArgs,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stats { .. } => "stats",
            Command::Segment { .. } => "segment",
            Command::Oracle { .. } => "oracle",
            Command::Train { .. } => "train",
            Command::Summarize { .. } => "summarize",
            Command::Evaluate { .. } => "evaluate",
            Command::Positions { .. } => "positions",
            Command::Mask { .. } => "mask",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fact,
    Sentence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WordScopeArg {
    Global,
    WithinFact,
}

impl From<WordScopeArg> for WordScope {
    fn from(w: WordScopeArg) -> WordScope {
        match w {
            WordScopeArg::Global => WordScope::Global,
            WordScopeArg::WithinFact => WordScope::WithinFact,
        }
    }
}

/// Segmenter overrides; unset flags fall back to the config file.
#[derive(Args, Debug, Default)]
pub struct SegmenterArgs {
    /// Comma-separated relations that open segments
    #[arg(long, value_delimiter = ',')]
    pub split_labels: Option<Vec<String>>,
    /// Comma-separated relations that merge clauses back
    #[arg(long, value_delimiter = ',')]
    pub merge_labels: Option<Vec<String>>,
    /// Token distance under which a conj edge is phrasal
    #[arg(long)]
    pub conj_distance: Option<usize>,
    #[arg(long)]
    pub min_unit_length: Option<usize>,
    #[arg(long)]
    pub max_clause_length: Option<usize>,
}

impl SegmenterArgs {
    pub fn apply(&self, cfg: &mut SegmenterConfig) {
        if let Some(labels) = &self.split_labels {
            cfg.split_labels = labels.iter().cloned().collect();
        }
        if let Some(labels) = &self.merge_labels {
            cfg.merge_labels = labels.iter().cloned().collect();
        }
        if let Some(v) = self.conj_distance {
            cfg.conj_distance_threshold = v;
        }
        if let Some(v) = self.min_unit_length {
            cfg.min_unit_length = v;
        }
        if let Some(v) = self.max_clause_length {
            cfg.max_clause_length = v;
        }
    }
}

/// Encoder architecture and ablation overrides.
#[derive(Args, Debug, Default)]
pub struct EncoderArgs {
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub n_layers: Option<usize>,
    #[arg(long)]
    pub n_heads: Option<usize>,
    #[arg(long)]
    pub d_ff: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Drop segment embeddings (ablation)
    #[arg(long)]
    pub no_segment: bool,
    /// Drop position embeddings (ablation)
    #[arg(long)]
    pub no_position: bool,
    /// One of: f, d+f, s+f, d+s+f
    #[arg(long, value_parser = parse_classifier_mode)]
    pub classifier_mode: Option<ClassifierMode>,
    #[arg(long, value_enum)]
    pub word_scope: Option<WordScopeArg>,
}

fn parse_classifier_mode(s: &str) -> Result<ClassifierMode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

impl EncoderArgs {
    pub fn apply(&self, cfg: &mut EncoderConfig) {
        if let Some(v) = self.d_model {
            cfg.d_model = v;
        }
        if let Some(v) = self.n_layers {
            cfg.n_layers = v;
        }
        if let Some(v) = self.n_heads {
            cfg.n_heads = v;
        }
        if let Some(v) = self.d_ff {
            cfg.d_ff = v;
        }
        if let Some(v) = self.max_len {
            cfg.max_len = v;
        }
        if self.no_segment {
            cfg.use_segment = false;
        }
        if self.no_position {
            cfg.use_position = false;
        }
        if let Some(v) = self.classifier_mode {
            cfg.classifier_mode = v;
        }
        if let Some(v) = self.word_scope {
            cfg.word_scope = v.into();
        }
    }
}

/// Optimizer overrides.
#[derive(Args, Debug, Default)]
pub struct TrainingArgs {
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Schedule coefficient
    #[arg(long)]
    pub base_lr: Option<f64>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

impl TrainingArgs {
    pub fn apply(&self, cfg: &mut TrainingConfig) {
        if let Some(v) = self.steps {
            cfg.max_steps = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.base_lr {
            cfg.base_lr = v;
        }
        if let Some(v) = self.warmup {
            cfg.warmup_steps = v;
        }
        if let Some(v) = self.checkpoint_every {
            cfg.checkpoint_every = v;
        }
    }
}
