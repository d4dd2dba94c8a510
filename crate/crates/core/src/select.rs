//! Summary selection: top-k with trigram blocking, the lead baseline,
//! and position-bucket analysis.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::DocumentRecord;
use crate::error::{Error, Result};
use crate::segmenter::Fact;

/// Selection settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub k: usize,
    pub trigram_blocking: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            k: 4,
            trigram_blocking: true,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::usage("selection k must be >= 1"));
        }
        Ok(())
    }
}

fn trigrams(fact: &Fact) -> Vec<Vec<String>> {
    let toks = fact.lower_tokens();
    if toks.len() < 3 {
        return Vec::new();
    }
    toks.windows(3).map(|w| w.to_vec()).collect()
}

/// Pick up to `k` facts by descending score (ties prefer the earlier
/// document position), skipping candidates that share a word trigram
/// with the selection when blocking is on. Returned indices are in
/// document order.
pub fn rank_and_select(scores: &[f64], facts: &[Fact], cfg: &SelectionConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    if scores.len() != facts.len() {
        return Err(Error::usage(format!(
            "{} scores for {} facts",
            scores.len(),
            facts.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::usage("scores must be finite"));
    }

    let mut order: Vec<usize> = (0..facts.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores compare")
            .then(a.cmp(&b))
    });

    let mut selected = Vec::new();
    let mut seen_trigrams: HashSet<Vec<String>> = HashSet::new();
    for idx in order {
        if selected.len() == cfg.k {
            break;
        }
        let grams = if cfg.trigram_blocking {
            trigrams(&facts[idx])
        } else {
            Vec::new()
        };
        if cfg.trigram_blocking && grams.iter().any(|g| seen_trigrams.contains(g)) {
            continue;
        }
        seen_trigrams.extend(grams);
        selected.push(idx);
    }
    selected.sort_unstable();
    Ok(selected)
}

/// First `min(n, body length)` sentences, in order.
pub fn lead_baseline(doc: &DocumentRecord, n: usize) -> &[crate::corpus::ParsedSentence] {
    &doc.body()[..n.min(doc.body().len())]
}

/// Default lead size.
pub const LEAD_N: usize = 3;

/// Position buckets used in the extraction-position analysis.
pub const POSITION_BUCKETS: [&str; 4] = ["1-5", "6-10", "11-15", "rest"];

/// Pooled proportions (percentages summing to 100) of selected fact
/// positions over the buckets 1-5 / 6-10 / 11-15 / rest. Positions are
/// 1-based fact ordinals within each fact-segmented document.
pub fn position_histogram(
    selected_positions: &[Vec<usize>],
    total_facts: &[usize],
) -> Result<[f64; 4]> {
    if selected_positions.is_empty() || selected_positions.len() != total_facts.len() {
        return Err(Error::usage(
            "position_histogram needs one (positions, total) pair per document",
        ));
    }
    let mut counts = [0usize; 4];
    let mut pooled = 0usize;
    for (doc, positions) in selected_positions.iter().enumerate() {
        for &p in positions {
            if p == 0 || p > total_facts[doc] {
                return Err(Error::usage(format!(
                    "position {p} outside document {doc} with {} facts",
                    total_facts[doc]
                )));
            }
            let bucket = match p {
                1..=5 => 0,
                6..=10 => 1,
                11..=15 => 2,
                _ => 3,
            };
            counts[bucket] += 1;
            pooled += 1;
        }
    }
    if pooled == 0 {
        return Err(Error::usage("position_histogram needs at least one selection"));
    }
    let mut out = [0.0f64; 4];
    for (o, &c) in out.iter_mut().zip(&counts) {
        *o = c as f64 * 100.0 / pooled as f64;
    }
    Ok(out)
}
