//! Flattened multi-granularity input sequences and their attention masks.
//!
//! A document becomes one token stream: a document marker, then per
//! sentence a sentence marker, then per fact a fact marker, the fact's
//! words, and a closing separator. Levels alternate segment A/B by
//! parity (document = A, sentence = B, fact = A, word/separator = B).
//!
//! The mask encodes a hierarchical graph: tokens exchange information
//! with their own level, receive from their children one level down,
//! and send to their parent one level up.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmenter::Fact;

/// Token role in the flattened sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    DocCls,
    SentCls,
    FactCls,
    Word,
    Seq,
}

impl Role {
    /// Granularity level: document 1, sentence 2, fact 3, word level 4.
    pub fn level(self) -> u8 {
        match self {
            Role::DocCls => 1,
            Role::SentCls => 2,
            Role::FactCls => 3,
            Role::Word | Role::Seq => 4,
        }
    }
}

/// Segment embedding selector, assigned by level parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentId {
    A,
    B,
}

impl SegmentId {
    fn for_level(level: u8) -> Self {
        if level % 2 == 1 {
            SegmentId::A
        } else {
            SegmentId::B
        }
    }
}

/// Word-level attention scope; the default connects every word-level
/// token to every other, the alternative keeps words inside their fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordScope {
    #[default]
    Global,
    WithinFact,
}

/// One entry of the flattened sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqToken {
    pub role: Role,
    /// Surface form for words, `None` for marker tokens.
    pub text: Option<String>,
    /// Sentence ordinal (position among surviving sentences).
    pub sentence: Option<usize>,
    /// Fact ordinal (position among surviving facts, document-wide).
    pub fact: Option<usize>,
}

/// The flattened multi-granularity token sequence for one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierSequence {
    tokens: Vec<SeqToken>,
    segment_ids: Vec<SegmentId>,
    doc_cls: usize,
    sent_cls: Vec<usize>,
    fact_cls: Vec<usize>,
    fact_words: Vec<(usize, usize)>, // word+seq positions per fact: [start, end)
    fact_sentence: Vec<usize>,       // owning sentence ordinal per fact
    /// (sentence_index, fact_index) of each surviving fact in the source
    /// document's segmentation.
    fact_source: Vec<(usize, usize)>,
}

pub const DEFAULT_MAX_LEN: usize = 512;

impl HierSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[SeqToken] {
        &self.tokens
    }

    pub fn segment_ids(&self) -> &[SegmentId] {
        &self.segment_ids
    }

    /// Position ids are sequential.
    pub fn position_ids(&self) -> std::ops::Range<usize> {
        0..self.tokens.len()
    }

    pub fn doc_cls_pos(&self) -> usize {
        self.doc_cls
    }

    pub fn sent_cls_pos(&self) -> &[usize] {
        &self.sent_cls
    }

    pub fn fact_cls_pos(&self) -> &[usize] {
        &self.fact_cls
    }

    pub fn fact_count(&self) -> usize {
        self.fact_cls.len()
    }

    pub fn sentence_count(&self) -> usize {
        self.sent_cls.len()
    }

    /// Owning sentence ordinal of fact `t`.
    pub fn fact_sentence(&self, t: usize) -> usize {
        self.fact_sentence[t]
    }

    /// (sentence_index, fact_index) of fact `t` in the source segmentation.
    pub fn fact_source(&self, t: usize) -> (usize, usize) {
        self.fact_source[t]
    }

    /// Word/separator position range of fact `t`.
    pub fn fact_word_range(&self, t: usize) -> std::ops::Range<usize> {
        self.fact_words[t].0..self.fact_words[t].1
    }
}

/// Flatten per-sentence fact lists into a hierarchical token sequence.
///
/// Truncation drops whole trailing facts, then whole trailing sentences
/// left empty; the sequence always stays well formed. A document whose
/// first fact alone cannot fit yields a capacity error.
pub fn build_sequence(doc_facts: &[Vec<Fact>], max_len: usize) -> Result<HierSequence> {
    let total_facts: usize = doc_facts.iter().map(|v| v.len()).sum();
    if total_facts == 0 {
        return Err(Error::usage("build_sequence requires at least one fact"));
    }

    let mut tokens = Vec::new();
    let mut segment_ids = Vec::new();
    let mut sent_cls = Vec::new();
    let mut fact_cls = Vec::new();
    let mut fact_words = Vec::new();
    let mut fact_sentence = Vec::new();
    let mut fact_source = Vec::new();

    let push = |tokens: &mut Vec<SeqToken>, segs: &mut Vec<SegmentId>, tok: SeqToken| {
        segs.push(SegmentId::for_level(tok.role.level()));
        tokens.push(tok);
    };

    push(
        &mut tokens,
        &mut segment_ids,
        SeqToken {
            role: Role::DocCls,
            text: None,
            sentence: None,
            fact: None,
        },
    );

    'outer: for facts in doc_facts {
        if facts.is_empty() {
            continue;
        }
        let sent_ord = sent_cls.len();
        let sent_pos = tokens.len();
        push(
            &mut tokens,
            &mut segment_ids,
            SeqToken {
                role: Role::SentCls,
                text: None,
                sentence: Some(sent_ord),
                fact: None,
            },
        );
        sent_cls.push(sent_pos);
        let mut placed_any = false;
        for fact in facts {
            let need = 2 + fact.tokens.len(); // fact marker + words + separator
            if tokens.len() + need > max_len {
                if !placed_any {
                    // drop the empty sentence marker
                    tokens.pop();
                    segment_ids.pop();
                    sent_cls.pop();
                }
                break 'outer;
            }
            let fact_ord = fact_cls.len();
            let cls_pos = tokens.len();
            push(
                &mut tokens,
                &mut segment_ids,
                SeqToken {
                    role: Role::FactCls,
                    text: None,
                    sentence: Some(sent_ord),
                    fact: Some(fact_ord),
                },
            );
            let words_start = tokens.len();
            for w in &fact.tokens {
                push(
                    &mut tokens,
                    &mut segment_ids,
                    SeqToken {
                        role: Role::Word,
                        text: Some(w.clone()),
                        sentence: Some(sent_ord),
                        fact: Some(fact_ord),
                    },
                );
            }
            push(
                &mut tokens,
                &mut segment_ids,
                SeqToken {
                    role: Role::Seq,
                    text: None,
                    sentence: Some(sent_ord),
                    fact: Some(fact_ord),
                },
            );
            fact_cls.push(cls_pos);
            fact_words.push((words_start, tokens.len()));
            fact_sentence.push(sent_ord);
            fact_source.push((fact.sentence_index, fact.fact_index));
            placed_any = true;
        }
        if !placed_any {
            tokens.pop();
            segment_ids.pop();
            sent_cls.pop();
        }
    }

    if fact_cls.is_empty() {
        let first = doc_facts
            .iter()
            .flat_map(|v| v.iter())
            .next()
            .expect("total_facts > 0");
        return Err(Error::Capacity {
            needed: first.tokens.len() + 4,
            max_len,
        });
    }

    Ok(HierSequence {
        tokens,
        segment_ids,
        doc_cls: 0,
        sent_cls,
        fact_cls,
        fact_words,
        fact_sentence,
        fact_source,
    })
}

/// Dense binary attention-permission matrix. `get(i, j)` answers whether
/// token `i` may attend to token `j`, i.e. whether a directed edge runs
/// from `j` to `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl MaskMatrix {
    fn zeros(n: usize) -> Self {
        MaskMatrix {
            n,
            bits: vec![false; n * n],
        }
    }

    /// Build an arbitrary mask from a predicate; mostly for tests and
    /// experiments outside the hierarchical layout.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if f(i, j) {
                    m.set(i, j);
                }
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.n + j] = true;
    }

    /// Row `i` as a boolean slice.
    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.n..(i + 1) * self.n]
    }

    /// Render as lines of `0`/`1` characters, one row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.n * (self.n + 1));
        for i in 0..self.n {
            for j in 0..self.n {
                out.push(if self.get(i, j) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

/// Build the hierarchical graph mask for a sequence.
///
/// Incoming edges per role: word-level tokens receive from themselves and
/// the other word-level tokens in scope; fact markers from themselves,
/// all other fact markers, and their own fact's word-level tokens;
/// sentence markers from themselves, all other sentence markers, and
/// their own sentence's fact markers; the document marker from itself and
/// every sentence marker.
pub fn build_mask(seq: &HierSequence, scope: WordScope) -> MaskMatrix {
    let n = seq.len();
    let mut m = MaskMatrix::zeros(n);
    let toks = seq.tokens();

    for i in 0..n {
        m.set(i, i);
    }

    // word-level rows
    for i in 0..n {
        if toks[i].role.level() != 4 {
            continue;
        }
        for j in 0..n {
            if toks[j].role.level() != 4 {
                continue;
            }
            match scope {
                WordScope::Global => m.set(i, j),
                WordScope::WithinFact => {
                    if toks[i].fact == toks[j].fact {
                        m.set(i, j);
                    }
                }
            }
        }
    }

    // fact marker rows
    for (t, &i) in seq.fact_cls_pos().iter().enumerate() {
        for &j in seq.fact_cls_pos() {
            m.set(i, j);
        }
        for j in seq.fact_word_range(t) {
            m.set(i, j);
        }
    }

    // sentence marker rows
    for (s, &i) in seq.sent_cls_pos().iter().enumerate() {
        for &j in seq.sent_cls_pos() {
            m.set(i, j);
        }
        for (t, &j) in seq.fact_cls_pos().iter().enumerate() {
            if seq.fact_sentence(t) == s {
                m.set(i, j);
            }
        }
    }

    // document marker row
    let d = seq.doc_cls_pos();
    for &j in seq.sent_cls_pos() {
        m.set(d, j);
    }

    m
}
