use std::collections::HashMap;
use std::path::{Path, PathBuf};

use factsum_core::corpus::normalize_tokens;
use factsum_core::rouge::{rouge_suite, RougeScore};
use factsum_core::{Result};

use super::{load_records, Report};
use crate::artifacts::{read_jsonl, write_atomic, SummaryRecord};

pub fn run(
    input: &Path,
    summaries_path: &Path,
    output: Option<&PathBuf>,
    report: &mut Report,
) -> Result<()> {
    let records = load_records(input, report)?;
    report.input(summaries_path);
    let gold_by_id: HashMap<String, Vec<String>> = records
        .iter()
        .map(|r| (r.id().to_string(), r.gold_summary_tokens()))
        .collect();
    let summaries: Vec<SummaryRecord> = read_jsonl(summaries_path)?;

    let mut rows = Vec::new();
    let mut mean = [RougeScore::default(); 3];
    for summary in &summaries {
        let Some(gold) = gold_by_id.get(&summary.id) else {
            report.warn(&summary.id, "not in the dataset; skipped");
            continue;
        };
        if gold.is_empty() {
            report.warn(&summary.id, "no gold summary; skipped");
            continue;
        }
        let candidate: Vec<String> = summary
            .selected
            .iter()
            .flat_map(|u| normalize_tokens(&u.tokens))
            .collect();
        let suite = rouge_suite(&candidate, gold);
        for (slot, s) in mean.iter_mut().zip([suite.r1, suite.r2, suite.rl]) {
            slot.precision += s.precision;
            slot.recall += s.recall;
            slot.f1 += s.f1;
        }
        rows.push((summary.id.clone(), suite));
    }

    if rows.is_empty() {
        report.warn("-", "nothing to evaluate");
        return Ok(());
    }
    let n = rows.len() as f64;
    for slot in &mut mean {
        slot.precision /= n;
        slot.recall /= n;
        slot.f1 /= n;
    }

    println!("ROUGE over {} documents (mean, percent):", rows.len());
    println!("{:<8} {:>10} {:>10} {:>10}", "variant", "precision", "recall", "f1");
    for (name, s) in ["R-1", "R-2", "R-L"].iter().zip(&mean) {
        println!(
            "{:<8} {:>10.2} {:>10.2} {:>10.2}",
            name,
            100.0 * s.precision,
            100.0 * s.recall,
            100.0 * s.f1
        );
    }

    if let Some(path) = output {
        let mut csv =
            String::from("id,r1_p,r1_r,r1_f1,r2_p,r2_r,r2_f1,rl_p,rl_r,rl_f1\n");
        for (id, s) in &rows {
            csv.push_str(&format!(
                "{id},{},{},{},{},{},{},{},{},{}\n",
                s.r1.precision,
                s.r1.recall,
                s.r1.f1,
                s.r2.precision,
                s.r2.recall,
                s.r2.f1,
                s.rl.precision,
                s.rl.recall,
                s.rl.f1
            ));
        }
        csv.push_str(&format!(
            "MEAN,{},{},{},{},{},{},{},{},{}\n",
            mean[0].precision,
            mean[0].recall,
            mean[0].f1,
            mean[1].precision,
            mean[1].recall,
            mean[1].f1,
            mean[2].precision,
            mean[2].recall,
            mean[2].f1
        ));
        write_atomic(path, &csv)?;
        report.output(path);
    }
    Ok(())
}
