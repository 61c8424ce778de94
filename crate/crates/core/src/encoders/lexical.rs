use std::collections::{HashMap, HashSet};

use crate::corpus::TokenizedText;
use crate::scalar::Scalar;
use crate::sparse::SparseVector;
use crate::vocab::TermId;

/// Presence indicators: weight 1 for every distinct input term.
pub fn encode_binary<T: Scalar>(text: &TokenizedText) -> SparseVector<T> {
    SparseVector::from_sorted(
        text.distinct_terms()
            .into_iter()
            .map(|t| (t, T::one()))
            .collect(),
    )
}

/// Appends externally generated expansion terms that are not already in the
/// text. A text without an entry in `expansions` is returned unchanged.
pub fn expand_text(text: &TokenizedText, expansions: &HashMap<String, Vec<TermId>>) -> TokenizedText {
    let Some(extra) = expansions.get(&text.doc_id) else {
        log::warn!("no expansion terms for `{}`", text.doc_id);
        return text.clone();
    };
    let mut seen: HashSet<TermId> = text.token_ids.iter().copied().collect();
    let mut ids = text.token_ids.clone();
    for &t in extra {
        if seen.insert(t) {
            ids.push(t);
        }
    }
    TokenizedText::new(text.doc_id.clone(), ids)
}
