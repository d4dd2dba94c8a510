use std::path::Path;

use factsum_core::{segment_document, Result, SegmenterConfig};

use super::{load_records, Report};
use crate::artifacts::{to_jsonl, write_atomic, FactsRecord};

pub fn run(input: &Path, output: &Path, seg: &SegmenterConfig, report: &mut Report) -> Result<()> {
    seg.validate()?;
    let records = load_records(input, report)?;
    let mut out = Vec::with_capacity(records.len());
    for record in &records {
        let facts = segment_document(record.body(), seg)
            .into_iter()
            .flatten()
            .collect();
        out.push(FactsRecord {
            id: record.id().to_string(),
            facts,
        });
    }
    write_atomic(output, &to_jsonl(&out)?)?;
    report.output(output);
    println!(
        "segmented {} documents into {} facts",
        out.len(),
        out.iter().map(|r| r.facts.len()).sum::<usize>()
    );
    Ok(())
}
