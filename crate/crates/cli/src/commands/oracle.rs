use std::collections::HashMap;
use std::path::Path;

use factsum_core::aligner::{self, OracleMode};
use factsum_core::rouge::{rouge_suite, RougeSuite};
use factsum_core::{align_facts, greedy_sentence_oracle, segment_document, Result, SegmenterConfig};

use super::{load_records, Report};
use crate::args::ModeArg;
use crate::artifacts::{read_jsonl, to_jsonl, write_atomic, FactsRecord, LabelsRecord};

pub fn run(
    input: &Path,
    facts_path: &Path,
    mode: ModeArg,
    output: &Path,
    seg: &SegmenterConfig,
    report: &mut Report,
) -> Result<()> {
    seg.validate()?;
    let records = load_records(input, report)?;
    report.input(facts_path);
    let facts_by_id: HashMap<String, FactsRecord> = read_jsonl::<FactsRecord>(facts_path)?
        .into_iter()
        .map(|r| (r.id.clone(), r))
        .collect();

    let mut out = Vec::new();
    let mut suite_sum = RougeSuite::default();
    let mut scored_docs = 0usize;
    for record in &records {
        if record.gold_summary().is_empty() {
            report.warn(record.id(), "no gold summary; skipped");
            continue;
        }
        let gold = record.gold_summary_tokens();
        let labels_record = match mode {
            ModeArg::Fact => {
                let Some(facts) = facts_by_id.get(record.id()) else {
                    report.warn(record.id(), "missing from the facts file; skipped");
                    continue;
                };
                let summary_facts: Vec<_> = segment_document(record.gold_summary(), seg)
                    .into_iter()
                    .flatten()
                    .collect();
                let oracle = align_facts(&facts.facts, &summary_facts)?;
                let oracle_summary: Vec<String> = facts
                    .facts
                    .iter()
                    .zip(&oracle.labels)
                    .filter(|(_, &on)| on)
                    .flat_map(|(f, _)| f.lower_tokens())
                    .collect();
                suite_sum = add_suite(suite_sum, rouge_suite(&oracle_summary, &gold));
                scored_docs += 1;
                LabelsRecord {
                    id: record.id().to_string(),
                    mode: OracleMode::Fact,
                    labels: oracle.labels,
                    matching: oracle.matching,
                }
            }
            ModeArg::Sentence => {
                let body: Vec<Vec<String>> =
                    record.body().iter().map(|s| s.lower_tokens()).collect();
                let labels =
                    greedy_sentence_oracle(&body, &gold, aligner::SENTENCE_ORACLE_CAP)?;
                let oracle_summary: Vec<String> = body
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &on)| on)
                    .flat_map(|(s, _)| s.iter().cloned())
                    .collect();
                suite_sum = add_suite(suite_sum, rouge_suite(&oracle_summary, &gold));
                scored_docs += 1;
                LabelsRecord {
                    id: record.id().to_string(),
                    mode: OracleMode::Sentence,
                    labels,
                    matching: Vec::new(),
                }
            }
        };
        out.push(labels_record);
    }

    write_atomic(output, &to_jsonl(&out)?)?;
    report.output(output);

    if scored_docs > 0 {
        let n = scored_docs as f64;
        println!("oracle ROUGE over {scored_docs} documents (mean F1, percent):");
        println!(
            "{:<10} {:>8} {:>8} {:>8}",
            "mode", "R-1", "R-2", "R-L"
        );
        println!(
            "{:<10} {:>8.2} {:>8.2} {:>8.2}",
            match mode {
                ModeArg::Fact => "fact",
                ModeArg::Sentence => "sentence",
            },
            100.0 * suite_sum.r1.f1 / n,
            100.0 * suite_sum.r2.f1 / n,
            100.0 * suite_sum.rl.f1 / n,
        );
    }
    Ok(())
}

fn add_suite(mut acc: RougeSuite, s: RougeSuite) -> RougeSuite {
    acc.r1.precision += s.r1.precision;
    acc.r1.recall += s.r1.recall;
    acc.r1.f1 += s.r1.f1;
    acc.r2.precision += s.r2.precision;
    acc.r2.recall += s.r2.recall;
    acc.r2.f1 += s.r2.f1;
    acc.rl.precision += s.rl.precision;
    acc.rl.recall += s.rl.recall;
    acc.rl.f1 += s.rl.f1;
    acc
}
