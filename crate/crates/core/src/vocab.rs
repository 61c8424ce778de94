//! Term vocabulary with dense ids.

use std::collections::HashMap;

use crate::error::{LsrError, Result};

pub type TermId = u32;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    term_to_id: HashMap<String, TermId>,
}

impl Vocabulary {
    /// Builds a vocabulary from a term stream, assigning ids in first-seen order.
    pub fn build<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocabulary::default();
        for tok in tokens {
            vocab.intern(tok.as_ref());
        }
        vocab
    }

    /// Builds from an ordered list of unique terms (line number = id).
    pub fn from_terms(terms: Vec<String>) -> Result<Self> {
        let mut term_to_id = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if term_to_id.insert(t.clone(), i as TermId).is_some() {
                return Err(LsrError::DuplicateId(t.clone()));
            }
        }
        Ok(Vocabulary { terms, term_to_id })
    }

    /// Returns the id of `term`, inserting it if unseen.
    pub fn intern(&mut self, term: &str) -> TermId {
        if let Some(&id) = self.term_to_id.get(term) {
            return id;
        }
        let id = self.terms.len() as TermId;
        self.terms.push(term.to_owned());
        self.term_to_id.insert(term.to_owned(), id);
        id
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maps whitespace-separated terms to ids, failing on unknown terms.
    pub fn lookup_all(&self, text: &str) -> std::result::Result<Vec<TermId>, String> {
        text.split_whitespace()
            .map(|t| self.id(t).ok_or_else(|| format!("unknown term `{t}`")))
            .collect()
    }
}

/// Convenience wrapper mirroring the collection-level operation.
pub fn build_vocabulary<I, S>(tokens: I) -> Vocabulary
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    Vocabulary::build(tokens)
}
