//! Impact inverted index with term-at-a-time query processing.

mod format;
mod varint;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

pub use format::{read_index, write_index, IndexHeader, INDEX_FORMAT};
pub use varint::{decode_varint, encode_varint};

use crate::error::{LsrError, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseVector;
use crate::vocab::TermId;

/// How posting weights are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Quantization {
    Exact,
    /// Linear max-scaled integers of the given width, rounded half-up.
    Bits { bits: u8 },
}

impl Default for Quantization {
    fn default() -> Self {
        Quantization::Bits { bits: 8 }
    }
}

impl Quantization {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Quantization::Bits { bits } if !(1..=16).contains(&bits) => {
                Err(LsrError::config("quantization.bits", "must lie in 1..=16"))
            }
            _ => Ok(()),
        }
    }

    fn levels(bits: u8) -> f64 {
        ((1u32 << bits) - 1) as f64
    }
}

/// `round(w · (2^bits − 1) / max_w)`, half-up.
pub fn quantize(weight: f64, max_weight: f64, bits: u8) -> u32 {
    (weight * Quantization::levels(bits) / max_weight + 0.5).floor() as u32
}

#[derive(Debug, Clone, PartialEq)]
pub enum Impacts {
    Exact(Vec<f64>),
    Quantized(Vec<u32>),
}

impl Impacts {
    pub fn len(&self) -> usize {
        match self {
            Impacts::Exact(v) => v.len(),
            Impacts::Quantized(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, i: usize) -> f64 {
        match self {
            Impacts::Exact(v) => v[i],
            Impacts::Quantized(v) => v[i] as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posting {
    pub doc_ordinal: u32,
    /// Stored impact: the exact weight, or the integer level as `f64`.
    pub impact: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostingList {
    pub doc_ordinals: Vec<u32>,
    pub impacts: Impacts,
}

impl PostingList {
    pub fn len(&self) -> usize {
        self.doc_ordinals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ordinals.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Posting> + '_ {
        self.doc_ordinals
            .iter()
            .enumerate()
            .map(|(i, &d)| Posting {
                doc_ordinal: d,
                impact: self.impacts.get(i),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IndexStats {
    pub num_docs: usize,
    pub num_terms: usize,
    pub num_postings: usize,
    /// Nonzero weights dropped because they quantized to zero.
    pub dropped_postings: usize,
    /// Approximate in-memory size of postings (doc ids + impacts).
    pub bytes_estimate: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactIndex {
    pub vocab_size: usize,
    pub quantization: Quantization,
    /// Corpus-wide maximum weight, the quantizer's scale reference.
    pub max_weight: f64,
    pub doc_table: Vec<String>,
    pub postings: BTreeMap<TermId, PostingList>,
    pub stats: IndexStats,
    pub vocab_fingerprint: Option<String>,
}

/// Ranked output of a search, plus the number of multiply-accumulates
/// performed (the latency proxy).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchResult {
    pub hits: Vec<(String, f64)>,
    pub ops_count: u64,
}

impl ImpactIndex {
    pub fn num_docs(&self) -> usize {
        self.doc_table.len()
    }

    /// Factor turning accumulated integer impacts back into weight units.
    pub fn dequantization_scale(&self) -> f64 {
        match self.quantization {
            Quantization::Exact => 1.0,
            Quantization::Bits { bits } => {
                if self.max_weight > 0.0 {
                    self.max_weight / Quantization::levels(bits)
                } else {
                    1.0
                }
            }
        }
    }

    pub fn posting_list(&self, term: TermId) -> Option<&PostingList> {
        self.postings.get(&term)
    }
}

pub fn build_index<T, I>(vectors: I, vocab_size: usize, quantization: Quantization) -> Result<ImpactIndex>
where
    T: Scalar,
    I: IntoIterator<Item = (String, SparseVector<T>)>,
{
    quantization.validate()?;
    let docs: Vec<(String, SparseVector<T>)> = vectors.into_iter().collect();
    let mut seen = HashSet::with_capacity(docs.len());
    let mut max_weight = 0.0f64;
    for (id, v) in &docs {
        if !seen.insert(id.as_str()) {
            return Err(LsrError::DuplicateId(id.clone()));
        }
        v.check_dim(vocab_size)?;
        for (t, w) in v.iter() {
            let w = w.as_f64();
            if !(w > 0.0) || !w.is_finite() {
                return Err(LsrError::InvalidWeight { term: t, weight: w });
            }
            max_weight = max_weight.max(w);
        }
    }

    let mut lists: BTreeMap<TermId, (Vec<u32>, Vec<f64>)> = BTreeMap::new();
    for (ord, (_, v)) in docs.iter().enumerate() {
        for (t, w) in v.iter() {
            let entry = lists.entry(t).or_default();
            entry.0.push(ord as u32);
            entry.1.push(w.as_f64());
        }
    }

    let mut dropped = 0usize;
    let mut postings = BTreeMap::new();
    for (t, (docs_in_list, weights)) in lists {
        let list = match quantization {
            Quantization::Exact => PostingList {
                doc_ordinals: docs_in_list,
                impacts: Impacts::Exact(weights),
            },
            Quantization::Bits { bits } => {
                let mut ords = Vec::with_capacity(docs_in_list.len());
                let mut levels = Vec::with_capacity(docs_in_list.len());
                for (d, w) in docs_in_list.into_iter().zip(weights) {
                    let q = quantize(w, max_weight, bits);
                    if q == 0 {
                        dropped += 1;
                    } else {
                        ords.push(d);
                        levels.push(q);
                    }
                }
                PostingList {
                    doc_ordinals: ords,
                    impacts: Impacts::Quantized(levels),
                }
            }
        };
        if !list.is_empty() {
            postings.insert(t, list);
        }
    }

    let num_docs = seen.len();
    drop(seen);
    let num_postings: usize = postings.values().map(PostingList::len).sum();
    let impact_bytes = match quantization {
        Quantization::Exact => 8,
        Quantization::Bits { bits } if bits <= 8 => 1,
        Quantization::Bits { .. } => 2,
    };
    Ok(ImpactIndex {
        vocab_size,
        quantization,
        max_weight,
        doc_table: docs.into_iter().map(|(id, _)| id).collect(),
        stats: IndexStats {
            num_docs,
            num_terms: postings.len(),
            num_postings,
            dropped_postings: dropped,
            bytes_estimate: num_postings * (4 + impact_bytes),
        },
        postings,
        vocab_fingerprint: None,
    })
}

/// Sorts by score descending, then doc id ascending, and keeps `k`.
fn rank(mut hits: Vec<(String, f64)>, k: usize) -> Vec<(String, f64)> {
    hits.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    hits.truncate(k);
    hits
}

/// Term-at-a-time search with a dense accumulator.
pub fn index_search<T: Scalar>(index: &ImpactIndex, q: &SparseVector<T>, k: usize) -> Result<SearchResult> {
    q.check_dim(index.vocab_size)?;
    let mut acc = vec![0.0f64; index.num_docs()];
    let mut touched: Vec<u32> = Vec::new();
    let mut ops = 0u64;
    for (t, wq) in q.iter() {
        let Some(list) = index.postings.get(&t) else {
            continue;
        };
        let wq = wq.as_f64();
        for p in list.iter() {
            let slot = &mut acc[p.doc_ordinal as usize];
            if *slot == 0.0 {
                touched.push(p.doc_ordinal);
            }
            *slot += wq * p.impact;
        }
        ops += list.len() as u64;
    }
    if k == 0 {
        return Ok(SearchResult {
            hits: Vec::new(),
            ops_count: ops,
        });
    }
    let scale = index.dequantization_scale();
    let mut seen = vec![false; index.num_docs()];
    let hits: Vec<(String, f64)> = touched
        .into_iter()
        .filter(|&d| !std::mem::replace(&mut seen[d as usize], true))
        .filter(|&d| acc[d as usize] > 0.0)
        .map(|d| {
            let s = acc[d as usize];
            let s = if scale == 1.0 { s } else { s * scale };
            (index.doc_table[d as usize].clone(), s)
        })
        .collect();
    Ok(SearchResult {
        hits: rank(hits, k),
        ops_count: ops,
    })
}

/// Brute-force top-`k` by exact dot product; the oracle for [`index_search`].
pub fn exhaustive_search<T: Scalar>(
    q: &SparseVector<T>,
    vectors: &[(String, SparseVector<T>)],
    k: usize,
) -> Vec<(String, f64)> {
    let q = q.cast::<f64>();
    let hits = vectors
        .iter()
        .map(|(id, d)| (id.clone(), q.dot(&d.cast::<f64>())))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    rank(hits, k)
}
