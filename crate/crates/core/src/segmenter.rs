//! Split dependency-parsed sentences into fact units.
//!
//! The splitter runs four fixed passes over each sentence:
//!
//! 1. every token whose incoming relation is a split label (punctuation,
//!    coordination, finite-clause marker) opens a new segment;
//! 2. adjacent segments connected by a clause-modifier relation are merged
//!    back, unless the right segment is long enough to stand alone;
//! 3. a coordination boundary whose `conj` endpoints sit close together is
//!    treated as phrasal rather than clausal and merged;
//! 4. segments shorter than the minimum unit length are folded into a
//!    neighbor, iterated to a fixed point.
//!
//! Every pass only concatenates adjacent segments, so the output spans
//! always partition the sentence.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::ParsedSentence;
use crate::error::{Error, Result};

/// Tunables for the fact splitter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmenterConfig {
    /// Incoming relations that open a new segment.
    pub split_labels: BTreeSet<String>,
    /// Relations that pull an adjacent clause back into its host.
    pub merge_labels: BTreeSet<String>,
    /// `conj` edges spanning fewer tokens than this are phrasal.
    pub conj_distance_threshold: usize,
    /// Segments shorter than this are folded into a neighbor.
    pub min_unit_length: usize,
    /// Clauses longer than this stay independent in the merge pass.
    pub max_clause_length: usize,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        let labels = |names: &[&str]| names.iter().map(|s| s.to_string()).collect();
        SegmenterConfig {
            split_labels: labels(&["punct", "cc", "mark"]),
            merge_labels: labels(&["acl:relcl", "advcl", "appos", "ccomp"]),
            conj_distance_threshold: 7,
            min_unit_length: 5,
            max_clause_length: 10,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.conj_distance_threshold == 0 || self.min_unit_length == 0 || self.max_clause_length == 0
        {
            return Err(Error::usage("segmenter thresholds must be >= 1"));
        }
        if self.split_labels.intersection(&self.merge_labels).next().is_some() {
            return Err(Error::usage("split and merge label sets must be disjoint"));
        }
        Ok(())
    }
}

/// A contiguous token span of one sentence, the atomic extraction unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    /// 0-based sentence position within the document.
    pub sentence_index: usize,
    /// 0-based position among the sentence's facts.
    pub fact_index: usize,
    /// 1-based first token of the span (inclusive).
    pub start: usize,
    /// 1-based last token of the span (inclusive).
    pub end: usize,
    /// Covered surface forms.
    pub tokens: Vec<String>,
}

impl Fact {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false // spans are always nonempty by construction
    }

    /// Lowercased tokens for matching.
    pub fn lower_tokens(&self) -> Vec<String> {
        crate::corpus::normalize_tokens(&self.tokens)
    }
}

#[derive(Debug, Clone, Copy)]
struct Span {
    start: usize, // 1-based inclusive
    end: usize,   // 1-based inclusive
}

impl Span {
    fn len(&self) -> usize {
        self.end - self.start + 1
    }

    fn contains(&self, pos: usize) -> bool {
        pos >= self.start && pos <= self.end
    }
}

/// Split one sentence into facts. Any valid tree yields at least one fact
/// and the returned spans partition the sentence.
pub fn split_sentence(sentence: &ParsedSentence, cfg: &SegmenterConfig) -> Vec<Fact> {
    let spans = split_spans(sentence, cfg);
    spans_to_facts(sentence, 0, &spans)
}

/// Split every body sentence, assigning sentence-major fact ordering.
pub fn segment_document(body: &[ParsedSentence], cfg: &SegmenterConfig) -> Vec<Vec<Fact>> {
    body.iter()
        .enumerate()
        .map(|(i, s)| {
            let spans = split_spans(s, cfg);
            spans_to_facts(s, i, &spans)
        })
        .collect()
}

fn spans_to_facts(sentence: &ParsedSentence, sentence_index: usize, spans: &[Span]) -> Vec<Fact> {
    spans
        .iter()
        .enumerate()
        .map(|(fact_index, sp)| Fact {
            sentence_index,
            fact_index,
            start: sp.start,
            end: sp.end,
            tokens: sentence.tokens()[sp.start - 1..sp.end]
                .iter()
                .map(|t| t.text().to_string())
                .collect(),
        })
        .collect()
}

fn split_spans(sentence: &ParsedSentence, cfg: &SegmenterConfig) -> Vec<Span> {
    let n = sentence.len();

    // Pass 1: boundary marking.
    let mut starts = vec![1usize];
    for i in 2..=n {
        if cfg.split_labels.contains(sentence.label_of(i)) {
            starts.push(i);
        }
    }
    let mut spans: Vec<Span> = starts
        .iter()
        .enumerate()
        .map(|(k, &s)| Span {
            start: s,
            end: if k + 1 < starts.len() { starts[k + 1] - 1 } else { n },
        })
        .collect();

    // Pass 2: clause-modifier merge, one left-to-right sweep.
    let mut i = 0;
    while i + 1 < spans.len() {
        let (left, right) = (spans[i], spans[i + 1]);
        let connected = sentence.edges().iter().any(|e| {
            e.head() >= 1
                && cfg.merge_labels.contains(e.label())
                && ((left.contains(e.head()) && right.contains(e.dependent()))
                    || (right.contains(e.head()) && left.contains(e.dependent())))
        });
        if connected && right.len() <= cfg.max_clause_length {
            spans[i].end = right.end;
            spans.remove(i + 1);
        } else {
            i += 1;
        }
    }

    // Pass 3: phrasal-coordination merge.
    let mut i = 0;
    while i + 1 < spans.len() {
        let (left, right) = (spans[i], spans[i + 1]);
        let split_token = right.start;
        let phrasal = sentence.label_of(split_token) == "cc"
            && sentence.edges().iter().any(|e| {
                e.head() >= 1
                    && e.label() == "conj"
                    && ((left.contains(e.head()) && right.contains(e.dependent()))
                        || (right.contains(e.head()) && left.contains(e.dependent())))
                    && e.head().abs_diff(e.dependent()) < cfg.conj_distance_threshold
            });
        if phrasal {
            spans[i].end = right.end;
            spans.remove(i + 1);
        } else {
            i += 1;
        }
    }

    // Pass 4: minimum-length merge, iterated to a fixed point.
    loop {
        if spans.len() == 1 {
            break;
        }
        let short = spans.iter().position(|s| s.len() < cfg.min_unit_length);
        match short {
            None => break,
            Some(0) => {
                // first segment folds into its successor
                spans[0].end = spans[1].end;
                spans.remove(1);
            }
            Some(i) => {
                spans[i - 1].end = spans[i].end;
                spans.remove(i);
            }
        }
    }

    spans
}
