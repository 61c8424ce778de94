//! On-disk index layout.
//!
//! An index directory holds two files:
//!
//! * `header.json`: format tag, vocabulary size (and optional fingerprint),
//!   quantization, corpus max weight, statistics and the doc table
//!   (ordinal → external id).
//! * `postings.bin`: little-endian binary,
//!
//! ```text
//! magic    "LSRP"
//! version  u8 (= 1)
//! kind     u8 (0 = exact f64 impacts, 1 = quantized integer impacts)
//! count    varint, number of posting lists
//! repeated count times, in ascending term id:
//!   term     varint
//!   len      varint
//!   docs     len varints: first ordinal, then gaps to the previous ordinal
//!   impacts  len × f64 LE (exact) or len varints (quantized)
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::varint::{decode_varint, encode_varint};
use super::{ImpactIndex, Impacts, IndexStats, PostingList, Quantization};
use crate::error::{LsrError, Result};
use crate::io::write_atomic;

pub const INDEX_FORMAT: &str = "lsr-index/v1";
const MAGIC: &[u8; 4] = b"LSRP";
const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexHeader {
    pub format: String,
    pub vocab_size: usize,
    #[serde(default)]
    pub vocab_fingerprint: Option<String>,
    pub quantization: Quantization,
    pub max_weight: f64,
    pub stats: IndexStats,
    pub doc_table: Vec<String>,
}

pub fn encode_postings(index: &ImpactIndex) -> Vec<u8> {
    let mut out = Vec::with_capacity(index.stats.num_postings * 3 + 16);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(match index.quantization {
        Quantization::Exact => 0,
        Quantization::Bits { .. } => 1,
    });
    encode_varint(index.postings.len() as u64, &mut out);
    for (&term, list) in &index.postings {
        encode_varint(term as u64, &mut out);
        encode_varint(list.len() as u64, &mut out);
        let mut prev = 0u32;
        for (i, &d) in list.doc_ordinals.iter().enumerate() {
            let gap = if i == 0 { d } else { d - prev };
            encode_varint(gap as u64, &mut out);
            prev = d;
        }
        match &list.impacts {
            Impacts::Exact(ws) => ws.iter().for_each(|w| out.extend_from_slice(&w.to_le_bytes())),
            Impacts::Quantized(qs) => qs.iter().for_each(|&q| encode_varint(q as u64, &mut out)),
        }
    }
    out
}

pub fn decode_postings(buf: &[u8], quantization: Quantization) -> Result<BTreeMap<u32, PostingList>> {
    let bad = |what: &str| LsrError::Format(format!("postings: {what}"));
    if buf.len() < 6 || &buf[..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    if buf[4] != VERSION {
        return Err(bad(&format!("unsupported version {}", buf[4])));
    }
    let exact = match (buf[5], quantization) {
        (0, Quantization::Exact) => true,
        (1, Quantization::Bits { .. }) => false,
        _ => return Err(bad("impact kind disagrees with header quantization")),
    };
    let mut pos = 6;
    let next = |pos: &mut usize| decode_varint(buf, pos).ok_or_else(|| bad("truncated varint"));
    let count = next(&mut pos)?;
    let mut lists = BTreeMap::new();
    let mut last_term: Option<u64> = None;
    for _ in 0..count {
        let term = next(&mut pos)?;
        if last_term.is_some_and(|t| t >= term) || term > u32::MAX as u64 {
            return Err(bad("term ids not strictly increasing"));
        }
        last_term = Some(term);
        let len = next(&mut pos)? as usize;
        let mut docs = Vec::with_capacity(len);
        let mut prev = 0u64;
        for i in 0..len {
            let gap = next(&mut pos)?;
            if i > 0 && gap == 0 {
                return Err(bad("doc ordinals not strictly increasing"));
            }
            prev = if i == 0 { gap } else { prev + gap };
            docs.push(u32::try_from(prev).map_err(|_| bad("doc ordinal overflow"))?);
        }
        let impacts = if exact {
            let end = pos + 8 * len;
            let bytes = buf.get(pos..end).ok_or_else(|| bad("truncated impacts"))?;
            pos = end;
            Impacts::Exact(
                bytes
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            )
        } else {
            let mut qs = Vec::with_capacity(len);
            for _ in 0..len {
                qs.push(u32::try_from(next(&mut pos)?).map_err(|_| bad("impact overflow"))?);
            }
            Impacts::Quantized(qs)
        };
        lists.insert(
            term as u32,
            PostingList {
                doc_ordinals: docs,
                impacts,
            },
        );
    }
    if pos != buf.len() {
        return Err(bad("trailing bytes"));
    }
    Ok(lists)
}

pub fn write_index(index: &ImpactIndex, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| LsrError::io(dir, e))?;
    let header = IndexHeader {
        format: INDEX_FORMAT.into(),
        vocab_size: index.vocab_size,
        vocab_fingerprint: index.vocab_fingerprint.clone(),
        quantization: index.quantization,
        max_weight: index.max_weight,
        stats: index.stats,
        doc_table: index.doc_table.clone(),
    };
    write_atomic(&dir.join("postings.bin"), &encode_postings(index))?;
    write_atomic(&dir.join("header.json"), serde_json::to_string_pretty(&header)?.as_bytes())
}

pub fn read_index(dir: &Path) -> Result<ImpactIndex> {
    let hpath = dir.join("header.json");
    let text = std::fs::read_to_string(&hpath).map_err(|e| LsrError::io(&hpath, e))?;
    let header: IndexHeader = serde_json::from_str(&text)?;
    if header.format != INDEX_FORMAT {
        return Err(LsrError::Mismatch(format!(
            "index format `{}`, expected `{INDEX_FORMAT}`",
            header.format
        )));
    }
    let ppath = dir.join("postings.bin");
    let buf = std::fs::read(&ppath).map_err(|e| LsrError::io(&ppath, e))?;
    let postings = decode_postings(&buf, header.quantization)?;
    let num_docs = header.doc_table.len() as u32;
    if postings
        .values()
        .any(|l| l.doc_ordinals.last().is_some_and(|&d| d >= num_docs))
    {
        return Err(LsrError::Format("posting references unknown document".into()));
    }
    if postings.keys().next_back().is_some_and(|&t| t as usize >= header.vocab_size) {
        return Err(LsrError::Format("posting term outside vocabulary".into()));
    }
    Ok(ImpactIndex {
        vocab_size: header.vocab_size,
        quantization: header.quantization,
        max_weight: header.max_weight,
        doc_table: header.doc_table,
        postings,
        stats: header.stats,
        vocab_fingerprint: header.vocab_fingerprint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_index;
    use crate::sparse::SparseVector;

    fn small(q: Quantization) -> ImpactIndex {
        let docs = vec![
            ("a".to_string(), SparseVector::new([(0u32, 1.5f64), (3, 0.25)]).unwrap()),
            ("b".to_string(), SparseVector::new([(0u32, 0.5f64)]).unwrap()),
            ("c".to_string(), SparseVector::new([(3u32, 2.0f64), (200, 1.0)]).unwrap()),
        ];
        build_index(docs, 300, q).unwrap()
    }

    #[test]
    fn postings_round_trip_both_modes() {
        for q in [Quantization::Exact, Quantization::Bits { bits: 8 }, Quantization::Bits { bits: 16 }] {
            let idx = small(q);
            let bytes = encode_postings(&idx);
            assert_eq!(decode_postings(&bytes, q).unwrap(), idx.postings);
        }
    }

    #[test]
    fn corrupt_input_rejected() {
        let idx = small(Quantization::Exact);
        let bytes = encode_postings(&idx);
        assert!(decode_postings(&bytes[..bytes.len() - 1], Quantization::Exact).is_err());
        assert!(decode_postings(&bytes, Quantization::Bits { bits: 8 }).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_postings(&bad, Quantization::Exact).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(decode_postings(&extra, Quantization::Exact).is_err());
    }

    #[test]
    fn directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut idx = small(Quantization::Bits { bits: 8 });
        idx.vocab_fingerprint = Some("abc".into());
        write_index(&idx, dir.path()).unwrap();
        assert_eq!(read_index(dir.path()).unwrap(), idx);
    }
}
