//! Regenerate the data files shipped under `fixtures/`.
//!
//! Run from anywhere in the workspace:
//! `cargo run -p factsum-core --example gen_fixtures`

use std::path::Path;

use factsum_core::corpus::{save_dataset, DepEdge, DocumentRecord, ParsedSentence};
use factsum_core::fixture::synthetic_corpus;
use factsum_core::hierseq::{build_mask, build_sequence, WordScope, DEFAULT_MAX_LEN};
use factsum_core::segmenter::{segment_document, SegmenterConfig};

const CORPUS_DOCS: usize = 50;
const CORPUS_SEED: u64 = 42;

fn mask15_record() -> DocumentRecord {
    let s1 = ParsedSentence::new(
        ["fact", "one", "but", "two"].map(String::from).to_vec(),
        vec![
            DepEdge::new(0, 1, "root").unwrap(),
            DepEdge::new(1, 2, "dep").unwrap(),
            DepEdge::new(4, 3, "cc").unwrap(),
            DepEdge::new(1, 4, "dep").unwrap(),
        ],
    )
    .unwrap();
    let s2 = ParsedSentence::new(
        ["three", "four"].map(String::from).to_vec(),
        vec![
            DepEdge::new(0, 1, "root").unwrap(),
            DepEdge::new(1, 2, "dep").unwrap(),
        ],
    )
    .unwrap();
    DocumentRecord::new("mask15", vec![s1, s2], vec![]).unwrap()
}

fn main() -> factsum_core::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    std::fs::create_dir_all(&root)?;

    let corpus = synthetic_corpus(CORPUS_DOCS, CORPUS_SEED);
    save_dataset(root.join("corpus50.jsonl"), &corpus)?;
    println!("wrote corpus50.jsonl ({} documents)", corpus.len());

    let record = mask15_record();
    save_dataset(root.join("mask15.jsonl"), std::slice::from_ref(&record))?;

    // matching segmenter settings keep the two-word facts separate
    let seg = SegmenterConfig {
        min_unit_length: 1,
        ..SegmenterConfig::default()
    };
    let config_json = serde_json::json!({ "segmenter": seg });
    std::fs::write(
        root.join("mask15_config.json"),
        serde_json::to_string_pretty(&config_json).expect("serializable config") + "\n",
    )?;

    let facts = segment_document(record.body(), &seg);
    let seq = build_sequence(&facts, DEFAULT_MAX_LEN)?;
    assert_eq!(seq.len(), 15, "mask fixture must flatten to 15 tokens");
    let mask = build_mask(&seq, WordScope::Global);
    std::fs::write(root.join("mask15_golden.txt"), mask.to_text())?;
    println!("wrote mask15.jsonl, mask15_config.json, mask15_golden.txt");
    Ok(())
}
