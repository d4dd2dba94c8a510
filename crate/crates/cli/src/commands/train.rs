use std::collections::HashMap;
use std::path::{Path, PathBuf};

use factsum_core::aligner::OracleMode;
use factsum_core::encoder::{save_checkpoint, training_accuracy, Model};
use factsum_core::{
    build_sequence, segment_document, train, EncoderConfig, Error, Result, SegmenterConfig,
    TrainExample, TrainingConfig, Vocab,
};

use super::{load_records, Report};
use crate::artifacts::{read_jsonl, write_atomic, LabelsRecord};

#[allow(clippy::too_many_arguments)]
pub fn run(
    input: &Path,
    labels_path: &Path,
    output: &Path,
    curve: Option<&PathBuf>,
    seg: &SegmenterConfig,
    enc_cfg: &EncoderConfig,
    tcfg: &TrainingConfig,
    report: &mut Report,
) -> Result<()> {
    seg.validate()?;
    tcfg.validate()?;
    let records = load_records(input, report)?;
    report.input(labels_path);
    let labels_by_id: HashMap<String, LabelsRecord> = read_jsonl::<LabelsRecord>(labels_path)?
        .into_iter()
        .map(|r| (r.id.clone(), r))
        .collect();
    if labels_by_id.values().any(|l| l.mode != OracleMode::Fact) {
        return Err(Error::usage(
            "training needs fact-mode labels; rerun `oracle --mode fact`",
        ));
    }

    let vocab = Vocab::build(
        records
            .iter()
            .flat_map(|r| r.body().iter().chain(r.gold_summary()))
            .flat_map(|s| s.tokens().iter().map(|t| t.lower().to_string())),
    );
    let mut cfg = enc_cfg.clone();
    cfg.vocab_size = vocab.len();
    cfg.validate()?;

    let mut examples = Vec::new();
    for record in &records {
        let Some(labels) = labels_by_id.get(record.id()) else {
            report.warn(record.id(), "no oracle labels; skipped");
            continue;
        };
        let facts = segment_document(record.body(), seg);
        let total_facts: usize = facts.iter().map(|v| v.len()).sum();
        if labels.labels.len() != total_facts {
            report.record_error(&Error::Dataset {
                id: record.id().to_string(),
                msg: format!(
                    "{} labels but {} facts; labels were built with different segmenter settings",
                    labels.labels.len(),
                    total_facts
                ),
            });
            continue;
        }
        let seq = match build_sequence(&facts, cfg.max_len) {
            Ok(s) => s,
            Err(e) => {
                report.record_error(&Error::Dataset {
                    id: record.id().to_string(),
                    msg: e.to_string(),
                });
                continue;
            }
        };
        // whole-fact truncation from the tail keeps label order aligned
        let kept = seq.fact_count();
        let truncated = labels.labels[..kept].to_vec();
        examples.push(TrainExample::new(record.id(), seq, truncated, &cfg)?);
    }
    if examples.is_empty() {
        return Err(Error::usage("no trainable examples after filtering"));
    }

    let stem = output.to_string_lossy().to_string();
    let run = train(&examples, &vocab, &cfg, tcfg, |step, params| {
        let model = Model {
            cfg: cfg.clone(),
            vocab: vocab.clone(),
            params: params.clone(),
        };
        let path = PathBuf::from(format!("{stem}.step{step}"));
        save_checkpoint(&path, &model)
    })?;

    let model = Model {
        cfg: cfg.clone(),
        vocab: vocab.clone(),
        params: run.params,
    };
    save_checkpoint(output, &model)?;
    report.output(output);

    if let Some(curve_path) = curve {
        let mut csv = String::from("step,lr,loss\n");
        for p in &run.curve {
            csv.push_str(&format!("{},{},{}\n", p.step, p.lr, p.loss));
        }
        write_atomic(curve_path, &csv)?;
        report.output(curve_path);
    }

    let acc = training_accuracy(&examples, &vocab, &model.params, &cfg)?;
    let final_loss = run.curve.last().map(|p| p.loss).unwrap_or(f64::NAN);
    println!(
        "trained {} steps on {} examples; final batch loss {:.4}, training accuracy {:.1}%",
        run.curve.len(),
        examples.len(),
        final_loss,
        100.0 * acc
    );
    Ok(())
}
