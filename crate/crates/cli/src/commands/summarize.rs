use std::path::Path;

use factsum_core::encoder::load_checkpoint;
use factsum_core::{
    build_mask, build_sequence, lead_baseline, rank_and_select, score_facts, segment_document,
    Error, Fact, Result, SegmenterConfig, SelectionConfig,
};

use super::{load_records, Report};
use crate::artifacts::{to_jsonl, write_atomic, SummaryRecord, SummaryUnit};

pub enum Source<'a> {
    Model(&'a Path),
    Lead(usize),
}

pub fn run(
    input: &Path,
    source: Source<'_>,
    output: &Path,
    sel: &SelectionConfig,
    seg: &SegmenterConfig,
    report: &mut Report,
) -> Result<()> {
    seg.validate()?;
    sel.validate()?;
    let records = load_records(input, report)?;
    let mut out = Vec::with_capacity(records.len());

    match source {
        Source::Lead(n) => {
            if n == 0 {
                return Err(Error::usage("--lead must be >= 1"));
            }
            for record in &records {
                let selected = lead_baseline(record, n)
                    .iter()
                    .enumerate()
                    .map(|(i, s)| SummaryUnit::for_sentence(i, s.surface()))
                    .collect();
                out.push(SummaryRecord {
                    id: record.id().to_string(),
                    selected,
                });
            }
        }
        Source::Model(model_path) => {
            report.input(model_path);
            let model = load_checkpoint(model_path)?;
            for record in &records {
                let per_sentence = segment_document(record.body(), seg);
                let seq = match build_sequence(&per_sentence, model.cfg.max_len) {
                    Ok(s) => s,
                    Err(e) => {
                        report.record_error(&Error::Dataset {
                            id: record.id().to_string(),
                            msg: e.to_string(),
                        });
                        continue;
                    }
                };
                let mask = build_mask(&seq, model.cfg.word_scope);
                let scores =
                    score_facts(&seq, &mask, &model.vocab, &model.params, &model.cfg)?;
                // selection runs over the facts that survived truncation
                let surviving: Vec<Fact> = per_sentence
                    .into_iter()
                    .flatten()
                    .take(seq.fact_count())
                    .collect();
                let picked = rank_and_select(&scores, &surviving, sel)?;
                out.push(SummaryRecord {
                    id: record.id().to_string(),
                    selected: picked
                        .into_iter()
                        .map(|i| SummaryUnit::for_fact(&surviving[i]))
                        .collect(),
                });
            }
        }
    }

    write_atomic(output, &to_jsonl(&out)?)?;
    report.output(output);
    println!("wrote {} summaries", out.len());
    Ok(())
}
