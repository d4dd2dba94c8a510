//! Exact ROUGE-1 / ROUGE-2 / ROUGE-L scoring over token sequences.
//!
//! Callers are expected to pass normalized (lowercased) tokens; see
//! [`crate::corpus::normalize_tokens`]. No stemming, no stopword
//! handling, single flattened sequence for the LCS variant.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision / recall / F1 triple for one ROUGE variant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        RougeScore {
            precision,
            recall,
            f1,
        }
    }
}

/// ROUGE-1, ROUGE-2 and ROUGE-L for one candidate/reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeSuite {
    pub r1: RougeScore,
    pub r2: RougeScore,
    pub rl: RougeScore,
}

/// N-gram multiset with multiplicities.
#[derive(Debug, Clone)]
pub struct NgramCounts {
    n: usize,
    counts: HashMap<Vec<String>, usize>,
    total: usize,
}

impl NgramCounts {
    pub fn from_tokens(tokens: &[String], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::usage("n-gram order must be >= 1"));
        }
        let mut counts = HashMap::new();
        let mut total = 0usize;
        if tokens.len() >= n {
            for window in tokens.windows(n) {
                *counts.entry(window.to_vec()).or_insert(0) += 1;
                total += 1;
            }
        }
        Ok(NgramCounts { n, counts, total })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Clipped multiset intersection size.
    pub fn overlap(&self, other: &NgramCounts) -> usize {
        self.counts
            .iter()
            .map(|(gram, &c)| c.min(other.counts.get(gram).copied().unwrap_or(0)))
            .sum()
    }
}

/// Clipped n-gram overlap precision/recall/F1. A side with zero n-grams
/// contributes 0 for its ratio.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> Result<RougeScore> {
    let cand = NgramCounts::from_tokens(candidate, n)?;
    let refr = NgramCounts::from_tokens(reference, n)?;
    let overlap = cand.overlap(&refr) as f64;
    let precision = if cand.total() > 0 {
        overlap / cand.total() as f64
    } else {
        0.0
    };
    let recall = if refr.total() > 0 {
        overlap / refr.total() as f64
    } else {
        0.0
    };
    Ok(RougeScore::from_pr(precision, recall))
}

/// Longest-common-subsequence precision/recall/F1 over the flattened
/// sequences.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> RougeScore {
    if candidate.is_empty() || reference.is_empty() {
        return RougeScore::default();
    }
    let l = lcs_len(candidate, reference) as f64;
    RougeScore::from_pr(l / candidate.len() as f64, l / reference.len() as f64)
}

/// ROUGE-1, ROUGE-2 and ROUGE-L together.
pub fn rouge_suite(candidate: &[String], reference: &[String]) -> RougeSuite {
    RougeSuite {
        r1: rouge_n(candidate, reference, 1).expect("n = 1 is valid"),
        r2: rouge_n(candidate, reference, 2).expect("n = 2 is valid"),
        rl: rouge_l(candidate, reference),
    }
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    // two-row DP
    let m = b.len();
    let mut prev = vec![0usize; m + 1];
    let mut curr = vec![0usize; m + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[m]
}
