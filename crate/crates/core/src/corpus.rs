//! Dependency-parsed corpus ingestion, persistence, and statistics.
//!
//! Documents arrive pre-parsed: either as CoNLL-U files or as
//! newline-delimited JSON records with embedded token/edge lists. This
//! module never produces parses, it only consumes and validates them.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmenter::{segment_document, SegmenterConfig};

/// Normalization used for all downstream matching: lowercasing only.
pub fn normalize_token(s: &str) -> String {
    s.to_lowercase()
}

/// `File::open` with the path in the error message.
pub(crate) fn open_file(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Dataset {
        id: path.display().to_string(),
        msg: format!("cannot open: {e}"),
    })
}

/// Lowercase a whole token sequence.
pub fn normalize_tokens<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens.iter().map(|t| normalize_token(t.as_ref())).collect()
}

/// One word of a sentence, with its 1-based position and a cached
/// lowercase form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    index: usize,
    text: String,
    lower: String,
}

impl Token {
    pub fn new(index: usize, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if index == 0 {
            return Err(Error::usage("token index must be >= 1"));
        }
        if text.is_empty() {
            return Err(Error::usage("token text must be nonempty"));
        }
        let lower = normalize_token(&text);
        Ok(Token { index, text, lower })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn lower(&self) -> &str {
        &self.lower
    }
}

/// A labeled dependency edge; `head == 0` marks the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepEdge {
    head: usize,
    dependent: usize,
    label: String,
}

impl DepEdge {
    pub fn new(head: usize, dependent: usize, label: impl Into<String>) -> Result<Self> {
        if dependent == 0 {
            return Err(Error::usage("edge dependent must be >= 1"));
        }
        if head == dependent {
            return Err(Error::usage("edge head and dependent must differ"));
        }
        Ok(DepEdge {
            head,
            dependent,
            label: label.into(),
        })
    }

    pub fn head(&self) -> usize {
        self.head
    }

    pub fn dependent(&self) -> usize {
        self.dependent
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_root(&self) -> bool {
        self.head == 0
    }
}

/// A single-rooted dependency tree over one sentence.
///
/// Construction validates the tree shape: every token 1..=n is the
/// dependent of exactly one edge, exactly one edge points at the root,
/// and following heads from any token reaches the root. Edges are kept
/// sorted by dependent, so `edges()[i]` is the incoming edge of token
/// `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSentence {
    tokens: Vec<Token>,
    edges: Vec<DepEdge>,
}

impl ParsedSentence {
    pub fn new(forms: Vec<String>, mut edges: Vec<DepEdge>) -> Result<Self> {
        let n = forms.len();
        if n == 0 {
            return Err(Error::usage("sentence must have at least one token"));
        }
        if edges.len() != n {
            return Err(Error::usage(format!(
                "sentence with {n} tokens needs {n} edges, got {}",
                edges.len()
            )));
        }
        edges.sort_by_key(|e| e.dependent);
        let mut roots = 0usize;
        for (i, e) in edges.iter().enumerate() {
            if e.dependent != i + 1 {
                return Err(Error::usage(format!(
                    "token {} must be the dependent of exactly one edge",
                    i + 1
                )));
            }
            if e.head > n {
                return Err(Error::usage(format!(
                    "edge head {} out of range 0..={n}",
                    e.head
                )));
            }
            if e.is_root() {
                roots += 1;
            }
        }
        if roots != 1 {
            return Err(Error::usage(format!("expected exactly one root, got {roots}")));
        }
        // Reject head cycles: every token must reach the root.
        for start in 1..=n {
            let mut cur = start;
            let mut steps = 0usize;
            while cur != 0 {
                cur = edges[cur - 1].head;
                steps += 1;
                if steps > n {
                    return Err(Error::usage(format!(
                        "head cycle involving token {start}; parse is not a tree"
                    )));
                }
            }
        }
        let tokens = forms
            .into_iter()
            .enumerate()
            .map(|(i, f)| Token::new(i + 1, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(ParsedSentence { tokens, edges })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn edges(&self) -> &[DepEdge] {
        &self.edges
    }

    /// Head position of the 1-based token `index` (0 for the root token).
    pub fn head_of(&self, index: usize) -> usize {
        self.edges[index - 1].head
    }

    /// Label on the incoming edge of the 1-based token `index`.
    pub fn label_of(&self, index: usize) -> &str {
        self.edges[index - 1].label()
    }

    /// 1-based position of the root token.
    pub fn root(&self) -> usize {
        self.edges
            .iter()
            .find(|e| e.is_root())
            .map(|e| e.dependent)
            .expect("validated sentence has a root")
    }

    /// Surface forms in order.
    pub fn surface(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text().to_string()).collect()
    }

    /// Lowercased forms in order.
    pub fn lower_tokens(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.lower().to_string()).collect()
    }
}

/// One document: id, parsed body sentences, and (possibly empty) parsed
/// gold-summary sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    id: String,
    body: Vec<ParsedSentence>,
    gold_summary: Vec<ParsedSentence>,
}

impl DocumentRecord {
    pub fn new(
        id: impl Into<String>,
        body: Vec<ParsedSentence>,
        gold_summary: Vec<ParsedSentence>,
    ) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::usage("document id must be nonempty"));
        }
        if body.is_empty() {
            return Err(Error::Dataset {
                id,
                msg: "document body must be nonempty".into(),
            });
        }
        Ok(DocumentRecord {
            id,
            body,
            gold_summary,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn body(&self) -> &[ParsedSentence] {
        &self.body
    }

    pub fn gold_summary(&self) -> &[ParsedSentence] {
        &self.gold_summary
    }

    /// Lowercased gold-summary tokens, sentences concatenated in order.
    pub fn gold_summary_tokens(&self) -> Vec<String> {
        self.gold_summary
            .iter()
            .flat_map(|s| s.lower_tokens())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Wire format (newline-delimited JSON records)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SentenceWire {
    tokens: Vec<String>,
    edges: Vec<(usize, usize, String)>,
}

#[derive(Serialize, Deserialize)]
struct RecordWire {
    id: String,
    body: Vec<SentenceWire>,
    #[serde(default)]
    summary: Vec<SentenceWire>,
}

fn sentence_from_wire(w: SentenceWire) -> Result<ParsedSentence> {
    let edges = w
        .edges
        .into_iter()
        .map(|(h, d, l)| DepEdge::new(h, d, l))
        .collect::<Result<Vec<_>>>()?;
    ParsedSentence::new(w.tokens, edges)
}

fn sentence_to_wire(s: &ParsedSentence) -> SentenceWire {
    SentenceWire {
        tokens: s.surface(),
        edges: s
            .edges()
            .iter()
            .map(|e| (e.head(), e.dependent(), e.label().to_string()))
            .collect(),
    }
}

/// Read a newline-delimited dataset from `path`; the first malformed
/// record aborts the load.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<DocumentRecord>> {
    let file = open_file(path.as_ref())?;
    read_dataset(BufReader::new(file))
}

/// Lenient variant of [`load_dataset`]: malformed records become entries
/// in the error list and the remaining records still load.
pub fn load_dataset_lenient(
    path: impl AsRef<Path>,
) -> Result<(Vec<DocumentRecord>, Vec<Error>)> {
    let file = open_file(path.as_ref())?;
    read_dataset_lenient(BufReader::new(file))
}

/// Read newline-delimited records; order preserving, duplicate ids rejected.
pub fn read_dataset<R: BufRead>(reader: R) -> Result<Vec<DocumentRecord>> {
    let (records, errors) = read_dataset_lenient(reader)?;
    match errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(records),
    }
}

/// Read newline-delimited records, collecting one error per bad record.
/// The outer `Result` covers I/O only.
pub fn read_dataset_lenient<R: BufRead>(reader: R) -> Result<(Vec<DocumentRecord>, Vec<Error>)> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: RecordWire = match serde_json::from_str(&line) {
            Ok(w) => w,
            Err(e) => {
                errors.push(Error::Dataset {
                    id: format!("line {}", lineno + 1),
                    msg: format!("invalid record: {e}"),
                });
                continue;
            }
        };
        let id = wire.id.clone();
        if !seen.insert(id.clone()) {
            errors.push(Error::Dataset {
                id,
                msg: "duplicate document id".into(),
            });
            continue;
        }
        match record_from_wire(wire) {
            Ok(record) => out.push(record),
            Err(e) => errors.push(Error::Dataset {
                id,
                msg: e.to_string(),
            }),
        }
    }
    Ok((out, errors))
}

fn record_from_wire(wire: RecordWire) -> Result<DocumentRecord> {
    let body = wire
        .body
        .into_iter()
        .map(sentence_from_wire)
        .collect::<Result<Vec<_>>>()?;
    let summary = wire
        .summary
        .into_iter()
        .map(sentence_from_wire)
        .collect::<Result<Vec<_>>>()?;
    DocumentRecord::new(wire.id, body, summary)
}

/// Serialize one record as a single JSON line.
pub fn record_to_json_line(record: &DocumentRecord) -> Result<String> {
    let wire = RecordWire {
        id: record.id().to_string(),
        body: record.body().iter().map(sentence_to_wire).collect(),
        summary: record.gold_summary().iter().map(sentence_to_wire).collect(),
    };
    Ok(serde_json::to_string(&wire)?)
}

/// Write records to `writer`, one JSON line each.
pub fn write_dataset<W: Write>(mut writer: W, records: &[DocumentRecord]) -> Result<()> {
    for r in records {
        writeln!(writer, "{}", record_to_json_line(r)?)?;
    }
    Ok(())
}

/// Write records to `path`, one JSON line each.
pub fn save_dataset(path: impl AsRef<Path>, records: &[DocumentRecord]) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_dataset(file, records)
}

// ---------------------------------------------------------------------------
// CoNLL-U
// ---------------------------------------------------------------------------

/// Parse a CoNLL-U file; the first malformed block aborts the load.
pub fn load_conllu(path: impl AsRef<Path>) -> Result<Vec<ParsedSentence>> {
    let file = open_file(path.as_ref())?;
    let (sentences, errors) = read_conllu(BufReader::new(file))?;
    match errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(sentences),
    }
}

/// Parse CoNLL-U input, collecting one error per malformed block rather
/// than aborting. Every blank-line-separated block lands in exactly one
/// of the two returned lists, so nothing is silently dropped.
///
/// Columns used: ID, FORM, HEAD, DEPREL. Comment lines start with `#`;
/// multiword-token and empty-node lines (ID containing `-` or `.`) are
/// skipped.
pub fn read_conllu<R: BufRead>(reader: R) -> Result<(Vec<ParsedSentence>, Vec<Error>)> {
    let mut sentences = Vec::new();
    let mut errors = Vec::new();
    let mut rows: Vec<(usize, String, usize, String)> = Vec::new();
    let mut block_err: Option<Error> = None;
    let mut ordinal = 0usize;

    let flush = |rows: &mut Vec<(usize, String, usize, String)>,
                     block_err: &mut Option<Error>,
                     sentences: &mut Vec<ParsedSentence>,
                     errors: &mut Vec<Error>,
                     ordinal: &mut usize| {
        if rows.is_empty() && block_err.is_none() {
            return;
        }
        *ordinal += 1;
        if let Some(e) = block_err.take() {
            rows.clear();
            errors.push(e);
            return;
        }
        let forms: Vec<String> = rows.iter().map(|r| r.1.clone()).collect();
        let edges: Result<Vec<DepEdge>> = rows
            .iter()
            .map(|&(id, _, head, ref deprel)| DepEdge::new(head, id, deprel.clone()))
            .collect();
        let built = edges.and_then(|edges| ParsedSentence::new(forms, edges));
        match built {
            Ok(s) => sentences.push(s),
            Err(e) => errors.push(Error::Structure {
                ordinal: *ordinal,
                msg: e.to_string(),
            }),
        }
        rows.clear();
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            flush(&mut rows, &mut block_err, &mut sentences, &mut errors, &mut ordinal);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if block_err.is_some() {
            continue; // rest of a bad block
        }
        match parse_conllu_row(line, lineno, rows.len()) {
            Ok(Some(row)) => rows.push(row),
            Ok(None) => {} // multiword token or empty node
            Err(e) => block_err = Some(e),
        }
    }
    flush(&mut rows, &mut block_err, &mut sentences, &mut errors, &mut ordinal);
    Ok((sentences, errors))
}

fn parse_conllu_row(
    line: &str,
    lineno: usize,
    seen_in_block: usize,
) -> Result<Option<(usize, String, usize, String)>> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("expected 10 tab-separated columns, found {}", cols.len()),
        });
    }
    let id_col = cols[0];
    if id_col.contains('-') || id_col.contains('.') {
        return Ok(None);
    }
    let id: usize = id_col.parse().map_err(|_| Error::Parse {
        line: lineno,
        msg: format!("non-integer token ID {id_col:?}"),
    })?;
    if id != seen_in_block + 1 {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("token ID {id} out of sequence (expected {})", seen_in_block + 1),
        });
    }
    let form = cols[1].to_string();
    if form.is_empty() {
        return Err(Error::Parse {
            line: lineno,
            msg: "empty FORM column".into(),
        });
    }
    let head: usize = cols[6].parse().map_err(|_| Error::Parse {
        line: lineno,
        msg: format!("non-integer HEAD {:?}", cols[6]),
    })?;
    let deprel = cols[7].to_string();
    Ok(Some((id, form, head, deprel)))
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// Average unit count per document and average unit length in tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitStats {
    pub avg_units_per_doc: f64,
    pub avg_unit_length_tokens: f64,
}

/// Corpus-level averages at sentence and fact granularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sentence: UnitStats,
    pub fact: UnitStats,
}

/// Compute corpus statistics over document bodies. Unit counts are
/// averaged over documents; unit lengths are averaged over all units.
pub fn corpus_stats(records: &[DocumentRecord], cfg: &SegmenterConfig) -> Result<CorpusStats> {
    if records.is_empty() {
        return Err(Error::usage("corpus_stats requires a nonempty record list"));
    }
    let docs = records.len() as f64;
    let mut sent_units = 0usize;
    let mut sent_tokens = 0usize;
    let mut fact_units = 0usize;
    let mut fact_tokens = 0usize;
    for r in records {
        sent_units += r.body().len();
        sent_tokens += r.body().iter().map(|s| s.len()).sum::<usize>();
        for sentence_facts in segment_document(r.body(), cfg) {
            for f in sentence_facts {
                fact_units += 1;
                fact_tokens += f.len();
            }
        }
    }
    Ok(CorpusStats {
        sentence: UnitStats {
            avg_units_per_doc: sent_units as f64 / docs,
            avg_unit_length_tokens: sent_tokens as f64 / sent_units as f64,
        },
        fact: UnitStats {
            avg_units_per_doc: fact_units as f64 / docs,
            avg_unit_length_tokens: fact_tokens as f64 / fact_units as f64,
        },
    })
}
