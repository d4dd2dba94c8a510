//! One module per subcommand.

pub mod evaluate;
pub mod mask;
pub mod oracle;
pub mod positions;
pub mod segment;
pub mod stats;
pub mod summarize;
pub mod train;

use std::path::{Path, PathBuf};

use factsum_core::corpus::load_dataset_lenient;
use factsum_core::{DocumentRecord, Error, Result};

/// What a command did, for the manifest and the exit code.
#[derive(Debug, Default)]
pub struct Report {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub record_errors: usize,
    pub warnings: usize,
    pub config: serde_json::Value,
}

impl Report {
    pub fn input(&mut self, p: &Path) -> &mut Self {
        self.inputs.push(p.to_path_buf());
        self
    }

    pub fn output(&mut self, p: &Path) -> &mut Self {
        self.outputs.push(p.to_path_buf());
        self
    }

    pub fn warn(&mut self, id: &str, msg: &str) {
        self.warnings += 1;
        eprintln!("warning: record {id}: {msg}");
    }

    pub fn record_error(&mut self, err: &Error) {
        self.record_errors += 1;
        eprintln!("error: {err}");
    }
}

/// Load the dataset leniently, routing per-record failures into the
/// report so the remaining records still process.
pub fn load_records(path: &Path, report: &mut Report) -> Result<Vec<DocumentRecord>> {
    report.input(path);
    let (records, errors) = load_dataset_lenient(path)?;
    for e in &errors {
        report.record_error(e);
    }
    if records.is_empty() {
        return Err(Error::usage(format!(
            "no usable records in {}",
            path.display()
        )));
    }
    Ok(records)
}
