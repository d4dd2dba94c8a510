//! Shared helpers for the pipeline benchmarks.

use factsum_core::fixture::synthetic_corpus;
use factsum_core::DocumentRecord;

/// A fixed benchmark corpus.
pub fn bench_corpus() -> Vec<DocumentRecord> {
    synthetic_corpus(20, 7)
}
