//! Whole-word vocabulary over lowercased corpus tokens.

use std::collections::{BTreeSet, HashMap};

use crate::corpus::normalize_token;
use crate::error::{Error, Result};
use crate::hierseq::{Role, SeqToken};

/// Marker symbols occupying the first vocabulary slots.
pub const SPECIAL_TOKENS: [&str; 5] = ["[cls_d]", "[cls_s]", "[cls_f]", "[seq]", "[unk]"];

pub const CLS_D_ID: usize = 0;
pub const CLS_S_ID: usize = 1;
pub const CLS_F_ID: usize = 2;
pub const SEQ_ID: usize = 3;
pub const UNK_ID: usize = 4;

/// Corpus-built whole-word vocabulary; unknown words map to a reserved
/// symbol. Word order is sorted, so identical corpora yield identical
/// vocabularies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Build from an iterator of surface tokens (normalized internally).
    pub fn build<I, S>(tokens: I) -> Vocab
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let unique: BTreeSet<String> = tokens
            .into_iter()
            .map(|t| normalize_token(t.as_ref()))
            .collect();
        let mut words: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        words.extend(unique);
        Self::from_words(words).expect("specials are in place")
    }

    /// Rebuild from a previously serialized word list.
    pub fn from_words(words: Vec<String>) -> Result<Vocab> {
        if words.len() < SPECIAL_TOKENS.len()
            || words[..SPECIAL_TOKENS.len()]
                .iter()
                .zip(SPECIAL_TOKENS)
                .any(|(w, s)| w != s)
        {
            return Err(Error::usage(
                "vocabulary must start with the reserved marker symbols",
            ));
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(Vocab { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false // always holds the specials
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Id of a surface word (normalized); unknowns map to the reserved id.
    pub fn word_id(&self, word: &str) -> usize {
        self.index
            .get(&normalize_token(word))
            .copied()
            .unwrap_or(UNK_ID)
    }

    /// Id for a sequence token of any role.
    pub fn token_id(&self, token: &SeqToken) -> usize {
        match token.role {
            Role::DocCls => CLS_D_ID,
            Role::SentCls => CLS_S_ID,
            Role::FactCls => CLS_F_ID,
            Role::Seq => SEQ_ID,
            Role::Word => token
                .text
                .as_deref()
                .map(|w| self.word_id(w))
                .unwrap_or(UNK_ID),
        }
    }
}
