use std::collections::{BTreeMap, HashMap};

use crate::corpus::TokenizedText;
use crate::vocab::TermId;

/// Per-document term labels: the fraction of a document's relevant queries
/// that contain each term.
pub type TermRecallLabels = BTreeMap<String, BTreeMap<TermId, f64>>;

pub fn compute_term_recall(relevant_queries: &HashMap<String, Vec<TokenizedText>>) -> TermRecallLabels {
    let mut out = TermRecallLabels::new();
    for (doc_id, queries) in relevant_queries {
        if queries.is_empty() {
            log::warn!("document `{doc_id}` has no relevant queries; skipped");
            continue;
        }
        let mut counts: BTreeMap<TermId, usize> = BTreeMap::new();
        for q in queries {
            for t in q.distinct_terms() {
                *counts.entry(t).or_default() += 1;
            }
        }
        let n = queries.len() as f64;
        out.insert(
            doc_id.clone(),
            counts.into_iter().map(|(t, c)| (t, c as f64 / n)).collect(),
        );
    }
    out
}
