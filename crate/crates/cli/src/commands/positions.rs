use std::collections::HashMap;
use std::path::{Path, PathBuf};

use factsum_core::select::POSITION_BUCKETS;
use factsum_core::{position_histogram, Result};

use super::Report;
use crate::artifacts::{read_jsonl, write_atomic, FactsRecord, SummaryRecord};

pub fn run(
    facts_path: &Path,
    summaries_path: &Path,
    output: Option<&PathBuf>,
    report: &mut Report,
) -> Result<()> {
    report.input(facts_path);
    report.input(summaries_path);
    let facts: Vec<FactsRecord> = read_jsonl(facts_path)?;
    let summaries: Vec<SummaryRecord> = read_jsonl(summaries_path)?;

    // 1-based fact ordinal within each fact-segmented document
    let ordinals: HashMap<&str, HashMap<(usize, usize), usize>> = facts
        .iter()
        .map(|r| {
            let by_span = r
                .facts
                .iter()
                .enumerate()
                .map(|(i, f)| ((f.sentence_index, f.fact_index), i + 1))
                .collect();
            (r.id.as_str(), by_span)
        })
        .collect();
    let totals: HashMap<&str, usize> = facts.iter().map(|r| (r.id.as_str(), r.facts.len())).collect();

    let mut selected_positions = Vec::new();
    let mut total_facts = Vec::new();
    for summary in &summaries {
        let (Some(by_span), Some(&total)) = (
            ordinals.get(summary.id.as_str()),
            totals.get(summary.id.as_str()),
        ) else {
            report.warn(&summary.id, "not in the facts file; skipped");
            continue;
        };
        let mut positions = Vec::new();
        for unit in &summary.selected {
            let Some(fact_index) = unit.fact else {
                report.warn(&summary.id, "lead-style unit without a fact index; skipped");
                continue;
            };
            match by_span.get(&(unit.sentence, fact_index)) {
                Some(&ordinal) => positions.push(ordinal),
                None => report.warn(
                    &summary.id,
                    &format!("selected fact ({},{fact_index}) missing", unit.sentence),
                ),
            }
        }
        if !positions.is_empty() {
            selected_positions.push(positions);
            total_facts.push(total);
        }
    }

    let histogram = position_histogram(&selected_positions, &total_facts)?;
    println!(
        "{:>8} {:>8} {:>8} {:>8}",
        POSITION_BUCKETS[0], POSITION_BUCKETS[1], POSITION_BUCKETS[2], POSITION_BUCKETS[3]
    );
    println!(
        "{:>8.2} {:>8.2} {:>8.2} {:>8.2}",
        histogram[0], histogram[1], histogram[2], histogram[3]
    );

    if let Some(path) = output {
        let csv = format!(
            "bucket_1_5,bucket_6_10,bucket_11_15,rest\n{},{},{},{}\n",
            histogram[0], histogram[1], histogram[2], histogram[3]
        );
        write_atomic(path, &csv)?;
        report.output(path);
    }
    Ok(())
}
