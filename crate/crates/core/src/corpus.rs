//! Tokenized text and collection statistics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{LsrError, Result};
use crate::vocab::TermId;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenizedText {
    pub doc_id: String,
    pub token_ids: Vec<TermId>,
}

impl TokenizedText {
    pub fn new(doc_id: impl Into<String>, token_ids: Vec<TermId>) -> Self {
        TokenizedText {
            doc_id: doc_id.into(),
            token_ids,
        }
    }

    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        match self.token_ids.iter().find(|&&t| t as usize >= vocab_size) {
            Some(&id) => Err(LsrError::TermOutOfRange { id, vocab_size }),
            None => Ok(()),
        }
    }

    /// Distinct token ids, ascending.
    pub fn distinct_terms(&self) -> Vec<TermId> {
        let mut ids = self.token_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub num_docs: usize,
    pub doc_freq: HashMap<TermId, usize>,
    pub avg_doc_len: f64,
    /// Set when `avg_doc_len` carries no usable value (no documents, or
    /// every document empty).
    pub degenerate: bool,
}

impl CorpusStats {
    pub fn df(&self, term: TermId) -> usize {
        self.doc_freq.get(&term).copied().unwrap_or(0)
    }
}

pub fn compute_corpus_stats(docs: &[TokenizedText]) -> CorpusStats {
    let mut doc_freq: HashMap<TermId, usize> = HashMap::new();
    let mut total_len = 0usize;
    for doc in docs {
        total_len += doc.len();
        for t in doc.distinct_terms() {
            *doc_freq.entry(t).or_default() += 1;
        }
    }
    let num_docs = docs.len();
    let avg_doc_len = if num_docs == 0 {
        0.0
    } else {
        total_len as f64 / num_docs as f64
    };
    CorpusStats {
        num_docs,
        doc_freq,
        avg_doc_len,
        degenerate: avg_doc_len <= 0.0,
    }
}
