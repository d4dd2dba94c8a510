//! Batch CLI for the fact-level summarization pipeline.
//!
//! Exit codes: 0 success, 1 usage errors, 2 data errors (including
//! record-level failures in otherwise successful runs), 3 internal
//! errors.

mod args;
mod artifacts;
mod commands;
mod config;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use factsum_core::{Error, ErrorClass, Result};
use serde::Serialize;

use args::{Cli, Command};
use commands::Report;
use config::load_config;

/// One line of the append-only run log.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    config: serde_json::Value,
    inputs: Vec<String>,
    seed: u64,
    outputs: Vec<String>,
    wall_clock_ms: u128,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let started = Instant::now();
    let mut report = Report::default();
    let outcome = run(&cli, &mut report);

    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        config: report.config.clone(),
        inputs: report.inputs.iter().map(|p| p.display().to_string()).collect(),
        seed: cli.seed,
        outputs: report.outputs.iter().map(|p| p.display().to_string()).collect(),
        wall_clock_ms: started.elapsed().as_millis(),
    };
    if let Ok(line) = serde_json::to_string(&manifest) {
        if let Err(e) = artifacts::append_line(&cli.manifest, &line) {
            eprintln!("error: could not write run manifest: {e}");
            return ExitCode::from(2);
        }
    }

    match outcome {
        Ok(()) => {
            if report.record_errors > 0 {
                eprintln!("finished with {} record-level errors", report.record_errors);
                ExitCode::from(2)
            } else if cli.deny_warnings && report.warnings > 0 {
                eprintln!("finished with {} warnings (denied)", report.warnings);
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e.class() {
                ErrorClass::Usage => ExitCode::from(1),
                ErrorClass::Data => ExitCode::from(2),
                ErrorClass::Internal => ExitCode::from(3),
            }
        }
    }
}

fn run(cli: &Cli, report: &mut Report) -> Result<()> {
    let (mut file_cfg, _config_path) = load_config(&cli.config)?;

    match &cli.command {
        Command::Stats { input, output, seg } => {
            seg.apply(&mut file_cfg.segmenter);
            report.config = snapshot(&file_cfg)?;
            commands::stats::run(input, output.as_ref(), &file_cfg.segmenter, report)
        }
        Command::Segment { input, output, seg } => {
            seg.apply(&mut file_cfg.segmenter);
            report.config = snapshot(&file_cfg)?;
            commands::segment::run(input, output, &file_cfg.segmenter, report)
        }
        Command::Oracle {
            input,
            facts,
            mode,
            output,
            seg,
        } => {
            seg.apply(&mut file_cfg.segmenter);
            report.config = snapshot(&file_cfg)?;
            commands::oracle::run(input, facts, *mode, output, &file_cfg.segmenter, report)
        }
        Command::Train {
            input,
            labels,
            output,
            curve,
            seg,
            enc,
            tr,
        } => {
            seg.apply(&mut file_cfg.segmenter);
            enc.apply(&mut file_cfg.encoder);
            tr.apply(&mut file_cfg.training);
            file_cfg.training.seed = cli.seed;
            report.config = snapshot(&file_cfg)?;
            commands::train::run(
                input,
                labels,
                output,
                curve.as_ref(),
                &file_cfg.segmenter,
                &file_cfg.encoder,
                &file_cfg.training,
                report,
            )
        }
        Command::Summarize {
            input,
            model,
            lead,
            output,
            k,
            no_trigram_blocking,
            seg,
        } => {
            seg.apply(&mut file_cfg.segmenter);
            let mut sel = file_cfg.selection;
            if let Some(k) = k {
                sel.k = *k;
            }
            if *no_trigram_blocking {
                sel.trigram_blocking = false;
            }
            file_cfg.selection = sel;
            report.config = snapshot(&file_cfg)?;
            let source = match (model, lead) {
                (Some(m), None) => commands::summarize::Source::Model(m),
                (None, Some(n)) => commands::summarize::Source::Lead(*n),
                _ => return Err(Error::usage("pass exactly one of --model or --lead")),
            };
            commands::summarize::run(input, source, output, &sel, &file_cfg.segmenter, report)
        }
        Command::Evaluate {
            input,
            summaries,
            output,
        } => {
            report.config = snapshot(&file_cfg)?;
            commands::evaluate::run(input, summaries, output.as_ref(), report)
        }
        Command::Positions {
            facts,
            summaries,
            output,
        } => {
            report.config = snapshot(&file_cfg)?;
            commands::positions::run(facts, summaries, output.as_ref(), report)
        }
        Command::Mask {
            input,
            id,
            max_len,
            word_scope,
            output,
            seg,
        } => {
            seg.apply(&mut file_cfg.segmenter);
            let scope = word_scope
                .map(Into::into)
                .unwrap_or(file_cfg.encoder.word_scope);
            report.config = snapshot(&file_cfg)?;
            commands::mask::run(
                input,
                id.as_deref(),
                *max_len,
                scope,
                output,
                &file_cfg.segmenter,
                report,
            )
        }
    }
}

fn snapshot(cfg: &config::FileConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(cfg)?)
}
