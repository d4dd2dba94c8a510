//! Oracle extraction labels.
//!
//! Two flavors: a one-to-one greedy matching of gold-summary facts onto
//! source facts, and the conventional greedy sentence-level oracle that
//! grows a selection while the ROUGE composite against the summary keeps
//! improving.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rouge::rouge_n;
use crate::segmenter::Fact;

/// Composite used everywhere an "oracle ROUGE score" is needed:
/// ROUGE-1 F1 + ROUGE-2 F1.
pub fn oracle_score(candidate: &[String], reference: &[String]) -> f64 {
    let r1 = rouge_n(candidate, reference, 1).expect("n = 1 is valid");
    let r2 = rouge_n(candidate, reference, 2).expect("n = 2 is valid");
    r1.f1 + r2.f1
}

/// Which unit granularity an oracle labeling refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Fact,
    Sentence,
}

/// One matched (summary unit, source unit) pair with its composite score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub summary_index: usize,
    pub source_index: usize,
    pub score: f64,
}

/// Per-unit binary labels plus, in fact mode, the one-to-one matching
/// that produced them. `matching` is kept in greedy selection order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleLabels {
    pub mode: OracleMode,
    pub labels: Vec<bool>,
    pub matching: Vec<MatchEntry>,
}

/// Match each summary fact to at most one source fact, greedily by
/// descending composite score. Ties prefer the smaller source index,
/// then the smaller summary index. Summary facts whose best remaining
/// score is zero stay unmatched.
pub fn align_facts(source_facts: &[Fact], summary_facts: &[Fact]) -> Result<OracleLabels> {
    if source_facts.is_empty() {
        return Err(Error::usage("align_facts requires at least one source fact"));
    }
    let source_tokens: Vec<Vec<String>> = source_facts.iter().map(|f| f.lower_tokens()).collect();
    let summary_tokens: Vec<Vec<String>> = summary_facts.iter().map(|f| f.lower_tokens()).collect();

    let mut scores = vec![vec![0.0f64; source_facts.len()]; summary_facts.len()];
    for (g, gt) in summary_tokens.iter().enumerate() {
        for (s, st) in source_tokens.iter().enumerate() {
            scores[g][s] = oracle_score(st, gt);
        }
    }

    let mut summary_free = vec![true; summary_facts.len()];
    let mut source_free = vec![true; source_facts.len()];
    let mut matching = Vec::new();
    loop {
        let mut best: Option<(f64, usize, usize)> = None; // (score, source, summary)
        for g in 0..summary_facts.len() {
            if !summary_free[g] {
                continue;
            }
            for s in 0..source_facts.len() {
                if !source_free[s] {
                    continue;
                }
                let sc = scores[g][s];
                if sc <= 0.0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bs, bsrc, bsum)) => {
                        sc > bs || (sc == bs && (s < bsrc || (s == bsrc && g < bsum)))
                    }
                };
                if better {
                    best = Some((sc, s, g));
                }
            }
        }
        match best {
            Some((score, source_index, summary_index)) => {
                summary_free[summary_index] = false;
                source_free[source_index] = false;
                matching.push(MatchEntry {
                    summary_index,
                    source_index,
                    score,
                });
            }
            None => break,
        }
    }

    let mut labels = vec![false; source_facts.len()];
    for m in &matching {
        labels[m.source_index] = true;
    }
    Ok(OracleLabels {
        mode: OracleMode::Fact,
        labels,
        matching,
    })
}

/// Greedily add the sentence that most improves the composite score of
/// the concatenated selection against the summary; stop when nothing
/// improves or `cap` sentences are selected.
pub fn greedy_sentence_oracle(
    body_sentences: &[Vec<String>],
    summary: &[String],
    cap: usize,
) -> Result<Vec<bool>> {
    if body_sentences.is_empty() {
        return Err(Error::usage("greedy oracle requires a nonempty body"));
    }
    let mut selected = vec![false; body_sentences.len()];
    let mut best_score = 0.0f64;
    for _round in 0..cap.min(body_sentences.len()) {
        let mut best: Option<(f64, usize)> = None;
        for (i, _) in body_sentences.iter().enumerate() {
            if selected[i] {
                continue;
            }
            let mut candidate: Vec<String> = Vec::new();
            for (j, s) in body_sentences.iter().enumerate() {
                if selected[j] || j == i {
                    candidate.extend(s.iter().cloned());
                }
            }
            let sc = oracle_score(&candidate, summary);
            let better = match best {
                None => sc > best_score,
                Some((bs, _)) => sc > bs,
            };
            if better {
                best = Some((sc, i));
            }
        }
        match best {
            Some((sc, i)) if sc > best_score => {
                selected[i] = true;
                best_score = sc;
            }
            _ => break,
        }
    }
    Ok(selected)
}

/// Default selection cap for the sentence oracle.
pub const SENTENCE_ORACLE_CAP: usize = 6;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fact(sentence_index: usize, fact_index: usize, words: &[&str]) -> Fact {
        Fact {
            sentence_index,
            fact_index,
            start: 1,
            end: words.len(),
            tokens: words.iter().map(|w| w.to_string()).collect(),
        }
    }

    /// Exhaustive best injective assignment, for bounding the greedy
    /// matcher on small instances.
    fn best_assignment_total(scores: &[Vec<f64>]) -> f64 {
        fn go(scores: &[Vec<f64>], g: usize, used: &mut Vec<bool>) -> f64 {
            if g == scores.len() {
                return 0.0;
            }
            // option: leave summary fact g unmatched
            let mut best = go(scores, g + 1, used);
            for s in 0..scores[g].len() {
                if !used[s] && scores[g][s] > 0.0 {
                    used[s] = true;
                    best = best.max(scores[g][s] + go(scores, g + 1, used));
                    used[s] = false;
                }
            }
            best
        }
        let mut used = vec![false; scores.first().map_or(0, |r| r.len())];
        go(scores, 0, &mut used)
    }

    #[test]
    fn identical_fact_matches_with_score_two() {
        let source = vec![
            fact(0, 0, &["alpha", "beta", "gamma"]),
            fact(1, 0, &["delta", "epsilon", "zeta"]),
            fact(2, 0, &["eta", "theta", "iota"]),
            fact(3, 0, &["the", "red", "car", "stopped"]),
        ];
        let summary = vec![fact(0, 0, &["the", "red", "car", "stopped"])];
        let labels = align_facts(&source, &summary).unwrap();
        assert_eq!(labels.labels, vec![false, false, false, true]);
        assert_eq!(labels.matching.len(), 1);
        assert_eq!(labels.matching[0].summary_index, 0);
        assert_eq!(labels.matching[0].source_index, 3);
        assert_abs_diff_eq!(labels.matching[0].score, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_fact_beats_lead_sentence() {
        // the lead fact shares vocabulary but the exact copy wins
        let source = vec![
            fact(0, 0, &[
                "virtual", "reality", "may", "still", "seem", "like", "a", "hobby",
            ]),
            fact(1, 0, &[
                "the", "immerse", "virtual", "reality", "headset",
            ]),
            fact(1, 1, &[
                "is", "available", "from", "firebox", "for", "29",
            ]),
        ];
        let summary = vec![fact(0, 0, &[
            "the", "immerse", "virtual", "reality", "headset", "is", "available", "from",
            "firebox", "for", "29",
        ])];
        let labels = align_facts(&source, &summary).unwrap();
        assert!(!labels.labels[0], "lead fact must not win the match");
        assert_eq!(labels.matching.len(), 1);
        assert!(labels.labels[labels.matching[0].source_index]);
    }

    #[test]
    fn zero_score_summary_facts_stay_unmatched() {
        let source = vec![fact(0, 0, &["alpha", "beta"])];
        let summary = vec![fact(0, 0, &["gamma", "delta"])];
        let labels = align_facts(&source, &summary).unwrap();
        assert_eq!(labels.labels, vec![false]);
        assert!(labels.matching.is_empty());
    }

    #[test]
    fn matching_is_injective_and_greedy_certified() {
        let source = vec![
            fact(0, 0, &["a", "b", "c"]),
            fact(0, 1, &["a", "b", "d"]),
            fact(1, 0, &["e", "f", "g"]),
        ];
        let summary = vec![fact(0, 0, &["a", "b", "c"]), fact(0, 1, &["a", "b"])];
        let labels = align_facts(&source, &summary).unwrap();
        let mut seen = std::collections::HashSet::new();
        for m in &labels.matching {
            assert!(seen.insert(m.source_index), "source matched twice");
        }
        // greedy certificate: scores are non-increasing in selection order
        for w in labels.matching.windows(2) {
            assert!(w[0].score >= w[1].score - 1e-12);
        }
        assert!(labels.matching.len() <= summary.len());
    }

    #[test]
    fn greedy_matches_exhaustive_on_a_constructed_matrix() {
        // scores arranged so greedy and exhaustive agree
        let source = vec![
            fact(0, 0, &["a", "b", "c", "d"]),
            fact(0, 1, &["e", "f", "g", "h"]),
            fact(1, 0, &["i", "j", "k", "l"]),
        ];
        let summary = vec![
            fact(0, 0, &["a", "b", "c", "d"]),
            fact(0, 1, &["i", "j", "k", "l"]),
        ];
        let labels = align_facts(&source, &summary).unwrap();
        let total: f64 = labels.matching.iter().map(|m| m.score).sum();
        let scores: Vec<Vec<f64>> = summary
            .iter()
            .map(|g| {
                source
                    .iter()
                    .map(|s| oracle_score(&s.lower_tokens(), &g.lower_tokens()))
                    .collect()
            })
            .collect();
        assert_abs_diff_eq!(total, best_assignment_total(&scores), epsilon = 1e-12);
        assert_eq!(labels.labels, vec![true, false, true]);
    }

    #[test]
    fn sentence_oracle_finds_the_identical_sentence() {
        let body = vec![
            vec!["alpha".into(), "beta".into()],
            vec!["gamma".into(), "delta".into()],
            vec!["epsilon".into(), "zeta".into()],
        ];
        let summary: Vec<String> = vec!["gamma".into(), "delta".into()];
        let labels = greedy_sentence_oracle(&body, &summary, SENTENCE_ORACLE_CAP).unwrap();
        assert_eq!(labels, vec![false, true, false]);
    }

    #[test]
    fn empty_summary_selects_nothing() {
        let body = vec![vec!["a".into()], vec!["b".into()]];
        let labels = greedy_sentence_oracle(&body, &[], SENTENCE_ORACLE_CAP).unwrap();
        assert_eq!(labels, vec![false, false]);
    }

    #[test]
    fn sentence_oracle_matches_exhaustive_subsets() {
        // summary covers sentences 0 and 3
        let body: Vec<Vec<String>> = vec![
            vec!["storm".into(), "hit".into(), "coast".into()],
            vec!["umpire".into(), "waved".into()],
            vec!["prices".into(), "fell".into(), "fast".into()],
            vec!["rescue".into(), "teams".into(), "arrived".into()],
        ];
        let summary: Vec<String> = vec![
            "storm".into(),
            "hit".into(),
            "coast".into(),
            "rescue".into(),
            "teams".into(),
            "arrived".into(),
        ];
        let labels = greedy_sentence_oracle(&body, &summary, SENTENCE_ORACLE_CAP).unwrap();
        assert_eq!(labels, vec![true, false, false, true]);

        // exhaustive search over all subsets of size <= 3
        let mut best = (0.0f64, Vec::new());
        for mask in 0u32..(1 << body.len()) {
            if mask.count_ones() > 3 {
                continue;
            }
            let mut cand = Vec::new();
            for (i, s) in body.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    cand.extend(s.iter().cloned());
                }
            }
            let sc = oracle_score(&cand, &summary);
            if sc > best.0 {
                best = (sc, (0..body.len()).map(|i| mask & (1 << i) != 0).collect());
            }
        }
        assert_eq!(labels, best.1);
    }

    #[test]
    fn empty_source_is_a_usage_error() {
        assert!(align_facts(&[], &[]).is_err());
    }
}
