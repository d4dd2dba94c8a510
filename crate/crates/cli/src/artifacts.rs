//! On-disk formats handed between pipeline stages, one JSON record per
//! line, plus atomic write helpers.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use factsum_core::aligner::{MatchEntry, OracleMode};
use factsum_core::{Error, Fact, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// All facts of one document, flattened in sentence-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactsRecord {
    pub id: String,
    pub facts: Vec<Fact>,
}

/// Oracle labels of one document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelsRecord {
    pub id: String,
    pub mode: OracleMode,
    pub labels: Vec<bool>,
    #[serde(default)]
    pub matching: Vec<MatchEntry>,
}

/// One selected summary unit. `fact` is absent for lead-baseline
/// sentences; `line` is the displayable form, one unit per line with a
/// `(sentence, fact)` prefix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryUnit {
    pub sentence: usize,
    pub fact: Option<usize>,
    pub tokens: Vec<String>,
    pub line: String,
}

impl SummaryUnit {
    pub fn for_fact(fact: &Fact) -> SummaryUnit {
        SummaryUnit {
            sentence: fact.sentence_index,
            fact: Some(fact.fact_index),
            tokens: fact.tokens.clone(),
            line: format!(
                "({},{}) {}",
                fact.sentence_index,
                fact.fact_index,
                fact.tokens.join(" ")
            ),
        }
    }

    pub fn for_sentence(index: usize, tokens: Vec<String>) -> SummaryUnit {
        let line = format!("({index},-) {}", tokens.join(" "));
        SummaryUnit {
            sentence: index,
            fact: None,
            tokens,
            line,
        }
    }
}

/// One document's summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub id: String,
    pub selected: Vec<SummaryUnit>,
}

/// Read a whole JSONL artifact file.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::Dataset {
        id: path.display().to_string(),
        msg: format!("cannot open: {e}"),
    })?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Dataset {
            id: format!("{}:{}", path.display(), lineno + 1),
            msg: format!("invalid artifact record: {e}"),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Serialize items as JSON lines.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

/// Write via a temp file in the same directory, then rename into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::usage(format!("{} is not a file path", path.display())))?;
    let tmp = match dir {
        Some(d) => d.join(format!(".{}.tmp", file_name.to_string_lossy())),
        None => std::path::PathBuf::from(format!(".{}.tmp", file_name.to_string_lossy())),
    };
    {
        let mut f = File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Append one line to a log file, creating it on first use.
pub fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{line}")?;
    Ok(())
}
