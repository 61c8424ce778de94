//! BM25 split into a query-side IDF encoder and a document-side saturated-TF
//! encoder, so the classic ranking function becomes a sparse dot product.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusStats, TokenizedText};
use crate::error::{LsrError, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0) {
            return Err(LsrError::config("bm25.k1", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(LsrError::config("bm25.b", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`; positive for every `df <= N`.
pub fn idf(num_docs: usize, df: usize) -> f64 {
    let (n, df) = (num_docs as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

pub fn encode_bm25_query<T: Scalar>(text: &TokenizedText, stats: &CorpusStats) -> SparseVector<T> {
    SparseVector::from_sorted(
        text.distinct_terms()
            .into_iter()
            .map(|t| (t, T::lit(idf(stats.num_docs, stats.df(t)))))
            .collect(),
    )
}

pub fn encode_bm25_doc<T: Scalar>(
    text: &TokenizedText,
    stats: &CorpusStats,
    params: &Bm25Params,
) -> Result<SparseVector<T>> {
    params.validate()?;
    if stats.degenerate || stats.avg_doc_len <= 0.0 {
        return Err(LsrError::DegenerateStats(
            "average document length is zero or undefined".into(),
        ));
    }
    let mut tf: BTreeMap<u32, usize> = BTreeMap::new();
    for &t in &text.token_ids {
        *tf.entry(t).or_default() += 1;
    }
    let norm = params.k1 * (1.0 - params.b + params.b * text.len() as f64 / stats.avg_doc_len);
    Ok(SparseVector::from_sorted(
        tf.into_iter()
            .map(|(t, f)| {
                let f = f as f64;
                (t, T::lit(f * (params.k1 + 1.0) / (f + norm)))
            })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::compute_corpus_stats;

    #[test]
    fn idf_examples() {
        assert!((idf(2, 1) - 2f64.ln()).abs() < 1e-15);
        let n = 7;
        let v = idf(n, n);
        assert!((v - (1.0 + 0.5 / (n as f64 + 0.5)).ln()).abs() < 1e-15);
        assert!(v > 0.0);
        // df = 0 is evaluated by the same formula
        assert!((idf(3, 0) - (1.0f64 + 3.5 / 0.5).ln()).abs() < 1e-15);
    }

    #[test]
    fn query_encoder() {
        let docs = [TokenizedText::new("1", vec![0]), TokenizedText::new("2", vec![1])];
        let stats = compute_corpus_stats(&docs);
        let q: SparseVector<f64> = encode_bm25_query(&TokenizedText::new("q", vec![0, 0]), &stats);
        assert_eq!(q.nnz(), 1);
        assert!((q.get(0) - 2f64.ln()).abs() < 1e-15);
        let q: SparseVector<f64> = encode_bm25_query(&TokenizedText::new("q", vec![]), &stats);
        assert!(q.is_empty());
    }

    #[test]
    fn doc_encoder_length_parity_and_saturation() {
        let docs = [TokenizedText::new("1", vec![0, 1]), TokenizedText::new("2", vec![2, 3])];
        let stats = compute_corpus_stats(&docs);
        let p = Bm25Params::default();
        let d: SparseVector<f64> = encode_bm25_doc(&docs[0], &stats, &p).unwrap();
        assert!((d.get(0) - 1.0).abs() < 1e-15);

        let big = TokenizedText::new("big", vec![0; 1_000_000]);
        let stats = CorpusStats {
            avg_doc_len: 1_000_000.0,
            ..stats
        };
        let d: SparseVector<f64> = encode_bm25_doc(&big, &stats, &p).unwrap();
        assert!((d.get(0) - 1.9).abs() < 1e-3);
    }

    #[test]
    fn doc_encoder_edges() {
        let stats = compute_corpus_stats(&[TokenizedText::new("1", vec![0])]);
        let e: SparseVector<f64> =
            encode_bm25_doc(&TokenizedText::new("e", vec![]), &stats, &Bm25Params::default()).unwrap();
        assert!(e.is_empty());

        let degenerate = compute_corpus_stats(&[TokenizedText::new("1", vec![])]);
        let r: Result<SparseVector<f64>> =
            encode_bm25_doc(&TokenizedText::new("e", vec![0]), &degenerate, &Bm25Params::default());
        assert!(matches!(r, Err(LsrError::DegenerateStats(_))));

        let bad = Bm25Params { k1: 1.0, b: 1.5 };
        assert!(bad.validate().is_err());
    }
}
