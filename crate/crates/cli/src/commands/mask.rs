use std::path::Path;

use factsum_core::{
    build_mask, build_sequence, hierseq, segment_document, Error, Result, SegmenterConfig,
    WordScope,
};

use super::{load_records, Report};
use crate::artifacts::write_atomic;

#[allow(clippy::too_many_arguments)]
pub fn run(
    input: &Path,
    id: Option<&str>,
    max_len: Option<usize>,
    scope: WordScope,
    output: &Path,
    seg: &SegmenterConfig,
    report: &mut Report,
) -> Result<()> {
    seg.validate()?;
    let records = load_records(input, report)?;
    let record = match id {
        Some(wanted) => records
            .iter()
            .find(|r| r.id() == wanted)
            .ok_or_else(|| Error::usage(format!("no record with id {wanted:?}")))?,
        None => &records[0],
    };
    let facts = segment_document(record.body(), seg);
    let seq = build_sequence(&facts, max_len.unwrap_or(hierseq::DEFAULT_MAX_LEN))?;
    let mask = build_mask(&seq, scope);
    write_atomic(output, &mask.to_text())?;
    report.output(output);
    println!("wrote {}x{} mask for record {}", mask.n(), mask.n(), record.id());
    Ok(())
}
