//! Deterministic synthetic corpora for tests, demos, and the shipped
//! fixture data.
//!
//! Documents are built from a small pseudo-word pool. Every body
//! sentence carries two clauses joined by a comma boundary, so the
//! default segmenter splits it into exactly two facts; gold summaries
//! copy a few sub-sentence fact spans, which keeps the gap between
//! fact-level and sentence-level oracles visible at desk scale.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DepEdge, DocumentRecord, ParsedSentence};
use crate::encoder::{EncoderConfig, TrainExample, Vocab};
use crate::error::Result;
use crate::hierseq::build_sequence;
use crate::segmenter::Fact;

/// Deterministic pseudo-word pool.
pub fn word_pool(size: usize) -> Vec<String> {
    const SYLLABLES: [&str; 12] = [
        "ba", "de", "fi", "go", "ku", "la", "me", "ni", "po", "ru", "sa", "te",
    ];
    (0..size)
        .map(|i| format!("{}{}", SYLLABLES[i % 12], SYLLABLES[(i / 12) % 12]))
        .collect()
}

fn flat_parse(tokens: Vec<String>) -> ParsedSentence {
    let mut edges = vec![DepEdge::new(0, 1, "root").expect("valid edge")];
    for i in 2..=tokens.len() {
        edges.push(DepEdge::new(1, i, "dep").expect("valid edge"));
    }
    ParsedSentence::new(tokens, edges).expect("flat parse is a tree")
}

/// A two-clause sentence: `clause1 , clause2`, with the comma carrying
/// `punct` so the default segmenter splits right there.
fn two_clause_sentence(clause1: Vec<String>, clause2: Vec<String>) -> ParsedSentence {
    let k1 = clause1.len();
    let k2 = clause2.len();
    let mut tokens = clause1;
    tokens.push(",".to_string());
    tokens.extend(clause2);
    let comma = k1 + 1;
    let c2_head = k1 + 2;
    let mut edges = Vec::with_capacity(tokens.len());
    edges.push(DepEdge::new(0, 1, "root").expect("valid edge"));
    for i in 2..=k1 {
        edges.push(DepEdge::new(1, i, "dep").expect("valid edge"));
    }
    edges.push(DepEdge::new(c2_head, comma, "punct").expect("valid edge"));
    edges.push(DepEdge::new(1, c2_head, "parataxis").expect("valid edge"));
    for i in c2_head + 1..=k1 + 1 + k2 {
        edges.push(DepEdge::new(c2_head, i, "dep").expect("valid edge"));
    }
    ParsedSentence::new(tokens, edges).expect("two-clause parse is a tree")
}

/// Build a deterministic synthetic corpus with sub-sentence gold facts.
pub fn synthetic_corpus(n_docs: usize, seed: u64) -> Vec<DocumentRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = word_pool(60);
    let pick_clause = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let len = rng.gen_range(5..=8);
        (0..len)
            .map(|_| pool[rng.gen_range(0..pool.len())].clone())
            .collect()
    };

    (0..n_docs)
        .map(|d| {
            let n_sentences = rng.gen_range(5..=8);
            let mut body = Vec::with_capacity(n_sentences);
            let mut clauses: Vec<Vec<String>> = Vec::new(); // (two per sentence)
            for _ in 0..n_sentences {
                let c1 = pick_clause(&mut rng);
                let c2 = pick_clause(&mut rng);
                clauses.push(c1.clone());
                clauses.push(c2.clone());
                body.push(two_clause_sentence(c1, c2));
            }
            // gold: three clauses from distinct sentences
            let mut sentence_ids: Vec<usize> = (0..n_sentences).collect();
            sentence_ids.shuffle(&mut rng);
            let mut gold_sents: Vec<usize> = sentence_ids.into_iter().take(3).collect();
            gold_sents.sort_unstable();
            let gold = gold_sents
                .into_iter()
                .map(|s| {
                    let which = rng.gen_range(0..2usize);
                    flat_parse(clauses[2 * s + which].clone())
                })
                .collect();
            DocumentRecord::new(format!("synth-{d:03}"), body, gold)
                .expect("generated records are valid")
        })
        .collect()
}

/// The marker-detection overfit task: documents of small facts where a
/// fact is positive exactly when it contains the marker word. Returns
/// the labeled training examples and the matching vocabulary.
pub fn marker_task(
    n_docs: usize,
    seed: u64,
    cfg: &EncoderConfig,
) -> Result<(Vec<TrainExample>, Vocab)> {
    const MARKER: &str = "flagship";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = word_pool(24);
    let mut examples = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let n_sentences = rng.gen_range(2..=3);
        let mut doc_facts: Vec<Vec<Fact>> = Vec::new();
        let mut labels = Vec::new();
        for s in 0..n_sentences {
            let n_facts = rng.gen_range(1..=2);
            let mut sentence_facts = Vec::new();
            let mut offset = 1usize;
            for f in 0..n_facts {
                let len = rng.gen_range(3..=5);
                let mut words: Vec<String> = (0..len)
                    .map(|_| pool[rng.gen_range(0..pool.len())].clone())
                    .collect();
                let positive = rng.gen_bool(0.5);
                if positive {
                    let at = rng.gen_range(0..words.len());
                    words[at] = MARKER.to_string();
                } else {
                    words.retain(|w| w != MARKER);
                    if words.is_empty() {
                        words.push(pool[0].clone());
                    }
                }
                let end = offset + words.len() - 1;
                sentence_facts.push(Fact {
                    sentence_index: s,
                    fact_index: f,
                    start: offset,
                    end,
                    tokens: words,
                });
                offset = end + 1;
                labels.push(positive);
            }
            doc_facts.push(sentence_facts);
        }
        let seq = build_sequence(&doc_facts, cfg.max_len)?;
        examples.push(TrainExample::new(format!("marker-{d:02}"), seq, labels, cfg)?);
    }
    let mut words = word_pool(24);
    words.push(MARKER.to_string());
    Ok((examples, Vocab::build(words)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmenter::{segment_document, SegmenterConfig};

    #[test]
    fn synthetic_corpus_is_deterministic() {
        let a = synthetic_corpus(5, 9);
        let b = synthetic_corpus(5, 9);
        assert_eq!(a, b);
        let c = synthetic_corpus(5, 10);
        assert_ne!(a, c);
    }

    #[test]
    fn every_sentence_splits_into_two_facts() {
        let docs = synthetic_corpus(4, 3);
        let cfg = SegmenterConfig::default();
        for doc in &docs {
            for facts in segment_document(doc.body(), &cfg) {
                assert_eq!(facts.len(), 2, "doc {} sentence fact count", doc.id());
            }
            assert_eq!(doc.gold_summary().len(), 3);
        }
    }

    #[test]
    fn gold_sentences_copy_body_clauses() {
        let docs = synthetic_corpus(3, 17);
        let cfg = SegmenterConfig::default();
        for doc in &docs {
            let all_facts: Vec<Vec<String>> = segment_document(doc.body(), &cfg)
                .into_iter()
                .flatten()
                .map(|f| f.lower_tokens())
                .collect();
            for gold in doc.gold_summary() {
                let g = gold.lower_tokens();
                let matched = all_facts.iter().any(|f| {
                    let stripped: Vec<&String> = f.iter().filter(|t| *t != ",").collect();
                    stripped.len() == g.len() && stripped.iter().zip(&g).all(|(a, b)| *a == b)
                });
                assert!(matched, "gold clause missing from body of {}", doc.id());
            }
        }
    }

    #[test]
    fn marker_task_labels_follow_the_marker() {
        let cfg = EncoderConfig::default();
        let (examples, vocab) = marker_task(6, 5, &cfg).unwrap();
        assert_eq!(examples.len(), 6);
        // the marker is in-vocabulary, not mapped to the unknown id
        assert_ne!(vocab.word_id("flagship"), vocab.word_id("not-in-the-pool"));
        for ex in &examples {
            for t in 0..ex.seq.fact_count() {
                let range = ex.seq.fact_word_range(t);
                let has_marker = ex.seq.tokens()[range]
                    .iter()
                    .any(|tok| tok.text.as_deref() == Some("flagship"));
                assert_eq!(has_marker, ex.labels[t]);
            }
        }
    }
}
