use std::path::{Path, PathBuf};

use factsum_core::{corpus_stats, Result, SegmenterConfig};

use super::{load_records, Report};
use crate::artifacts::write_atomic;

pub fn run(
    input: &Path,
    output: Option<&PathBuf>,
    seg: &SegmenterConfig,
    report: &mut Report,
) -> Result<()> {
    seg.validate()?;
    let records = load_records(input, report)?;
    let stats = corpus_stats(&records, seg)?;

    println!("{:<12} {:>8} {:>8}", "granularity", "num", "len");
    println!(
        "{:<12} {:>8.1} {:>8.1}",
        "sentence", stats.sentence.avg_units_per_doc, stats.sentence.avg_unit_length_tokens
    );
    println!(
        "{:<12} {:>8.1} {:>8.1}",
        "fact", stats.fact.avg_units_per_doc, stats.fact.avg_unit_length_tokens
    );

    if let Some(path) = output {
        let csv = format!(
            "granularity,num,len\nsentence,{},{}\nfact,{},{}\n",
            stats.sentence.avg_units_per_doc,
            stats.sentence.avg_unit_length_tokens,
            stats.fact.avg_units_per_doc,
            stats.fact.avg_unit_length_tokens
        );
        write_atomic(path, &csv)?;
        report.output(path);
    }
    Ok(())
}
