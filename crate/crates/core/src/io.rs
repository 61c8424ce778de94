//! Text and JSONL artifact formats.
//!
//! * collection / queries: `id<TAB>term term term`, one record per line
//! * vocabulary: one term per line, line number = id
//! * expansions: `id<TAB>term term term`
//! * encoded vectors: `{"id": "...", "vector": {"term": weight, ...}}` per line
//! * triples: `{"q": id, "pos": id, "negs": [ids], "teacher": {"pos": s, "negs": [s...]}}`
//! * embeddings: `{"doc_id": "...", "L": n, "d": d, "h": [row-major], "h0": [...]}`
//!   per line, plus an input-embedding matrix `{"rows": |V|, "cols": d, "data": [...]}`

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedText;
use crate::encoders::PrecomputedEmbeddings;
use crate::error::{LsrError, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::sparse::SparseVector;
use crate::vocab::{TermId, Vocabulary};

/// Writes to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| LsrError::io(parent, e))?;
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(|e| LsrError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| LsrError::io(&tmp, e))?;
    f.sync_all().map_err(|e| LsrError::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| LsrError::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| LsrError::io(path, e))
}

fn parse_err(source: &str, line: usize, reason: impl Into<String>) -> LsrError {
    LsrError::Parse {
        path: source.to_owned(),
        line,
        reason: reason.into(),
    }
}

pub fn parse_vocabulary(text: &str) -> Result<Vocabulary> {
    Vocabulary::from_terms(text.lines().map(|l| l.trim_end_matches('\r').to_owned()).collect())
}

pub fn read_vocabulary(path: &Path) -> Result<Vocabulary> {
    parse_vocabulary(&read_to_string(path)?)
}

pub fn format_vocabulary(vocab: &Vocabulary) -> String {
    let mut s = String::new();
    for t in vocab.terms() {
        s.push_str(t);
        s.push('\n');
    }
    s
}

/// Splits `id<TAB>rest` records; the text part may be empty.
fn tab_records(text: &str, source: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (id, rest) = line.split_once('\t').unwrap_or((line, ""));
        if id.is_empty() {
            return Err(parse_err(source, n + 1, "empty id"));
        }
        out.push((n + 1, id.to_owned(), rest.to_owned()));
    }
    Ok(out)
}

/// Parses a collection (or queries) file against a vocabulary.
pub fn parse_collection(text: &str, vocab: &Vocabulary, source: &str) -> Result<Vec<TokenizedText>> {
    tab_records(text, source)?
        .into_iter()
        .map(|(n, id, rest)| {
            let ids = vocab.lookup_all(&rest).map_err(|r| parse_err(source, n, r))?;
            Ok(TokenizedText::new(id, ids))
        })
        .collect()
}

pub fn read_collection(path: &Path, vocab: &Vocabulary) -> Result<Vec<TokenizedText>> {
    parse_collection(&read_to_string(path)?, vocab, &path.display().to_string())
}

pub fn format_collection(texts: &[TokenizedText], vocab: &Vocabulary) -> String {
    let mut s = String::new();
    for t in texts {
        s.push_str(&t.doc_id);
        s.push('\t');
        let terms: Vec<&str> = t.token_ids.iter().map(|&i| vocab.term(i).unwrap_or("?")).collect();
        s.push_str(&terms.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse_expansions(text: &str, vocab: &Vocabulary, source: &str) -> Result<HashMap<String, Vec<TermId>>> {
    tab_records(text, source)?
        .into_iter()
        .map(|(n, id, rest)| {
            let ids = vocab.lookup_all(&rest).map_err(|r| parse_err(source, n, r))?;
            Ok((id, ids))
        })
        .collect()
}

pub fn read_expansions(path: &Path, vocab: &Vocabulary) -> Result<HashMap<String, Vec<TermId>>> {
    parse_expansions(&read_to_string(path)?, vocab, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VectorRecord {
    id: String,
    vector: serde_json::Map<String, serde_json::Value>,
}

fn term_key(term: TermId, vocab: Option<&Vocabulary>) -> String {
    vocab
        .and_then(|v| v.term(term))
        .map(str::to_owned)
        .unwrap_or_else(|| term.to_string())
}

pub fn format_vector_line<T: Scalar>(id: &str, v: &SparseVector<T>, vocab: Option<&Vocabulary>) -> Result<String> {
    let mut map = serde_json::Map::new();
    for (t, w) in v.iter() {
        map.insert(term_key(t, vocab), serde_json::json!(w.as_f64()));
    }
    Ok(serde_json::to_string(&VectorRecord {
        id: id.to_owned(),
        vector: map,
    })?)
}

pub fn format_vectors<T: Scalar>(items: &[(String, SparseVector<T>)], vocab: Option<&Vocabulary>) -> Result<String> {
    let mut out = String::new();
    for (id, v) in items {
        out.push_str(&format_vector_line(id, v, vocab)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses encoded vectors. Keys are vocabulary terms, or numeric ids when
/// no vocabulary is given (or the term is not in it).
pub fn parse_vectors(
    text: &str,
    vocab: Option<&Vocabulary>,
    source: &str,
) -> Result<Vec<(String, SparseVector<f64>)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: VectorRecord =
            serde_json::from_str(line).map_err(|e| parse_err(source, n + 1, e.to_string()))?;
        let mut pairs = Vec::with_capacity(rec.vector.len());
        for (key, value) in rec.vector {
            let id = vocab
                .and_then(|v| v.id(&key))
                .or_else(|| key.parse().ok())
                .ok_or_else(|| parse_err(source, n + 1, format!("unknown term `{key}`")))?;
            let w = value
                .as_f64()
                .ok_or_else(|| parse_err(source, n + 1, format!("weight for `{key}` is not a number")))?;
            pairs.push((id, w));
        }
        let v = SparseVector::new(pairs).map_err(|e| parse_err(source, n + 1, e.to_string()))?;
        out.push((rec.id, v));
    }
    Ok(out)
}

pub fn read_vectors(path: &Path, vocab: Option<&Vocabulary>) -> Result<Vec<(String, SparseVector<f64>)>> {
    parse_vectors(&read_to_string(path)?, vocab, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherScores {
    pub pos: f64,
    pub negs: Vec<f64>,
}

/// One training example as stored on disk (ids refer to the query and
/// collection files).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleRecord {
    pub q: String,
    pub pos: String,
    pub negs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teacher: Option<TeacherScores>,
}

pub fn parse_triples(text: &str, source: &str) -> Result<Vec<TripleRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let rec: TripleRecord = serde_json::from_str(l).map_err(|e| parse_err(source, n + 1, e.to_string()))?;
            if let Some(t) = &rec.teacher {
                if t.negs.len() != rec.negs.len() {
                    return Err(parse_err(source, n + 1, "teacher negs length differs from negs"));
                }
            }
            Ok(rec)
        })
        .collect()
}

pub fn read_triples(path: &Path) -> Result<Vec<TripleRecord>> {
    parse_triples(&read_to_string(path)?, &path.display().to_string())
}

pub fn format_triples(triples: &[TripleRecord]) -> Result<String> {
    let mut out = String::new();
    for t in triples {
        out.push_str(&serde_json::to_string(t)?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub doc_id: String,
    #[serde(rename = "L")]
    pub len: usize,
    pub d: usize,
    pub h: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<Vec<f64>>,
}

/// Reads per-text embeddings plus the shared input-embedding matrix.
pub fn read_embeddings<T: Scalar>(input_embeddings: &Path, records: &[&Path]) -> Result<PrecomputedEmbeddings<T>> {
    let m: Matrix<f64> = serde_json::from_str(&read_to_string(input_embeddings)?)?;
    let d = m.cols();
    let input = Matrix::from_vec(m.rows(), d, m.data().iter().map(|&x| T::lit(x)).collect())?;
    let mut map = HashMap::new();
    for path in records {
        let source = path.display().to_string();
        for (n, line) in read_to_string(path)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: EmbeddingRecord =
                serde_json::from_str(line).map_err(|e| parse_err(&source, n + 1, e.to_string()))?;
            if rec.d != d {
                return Err(parse_err(&source, n + 1, format!("dimension {} differs from {d}", rec.d)));
            }
            let h = Matrix::from_vec(rec.len, rec.d, rec.h.into_iter().map(T::lit).collect())
                .map_err(|e| parse_err(&source, n + 1, e.to_string()))?;
            let h0 = rec.h0.map(|v| v.into_iter().map(T::lit).collect::<Vec<T>>());
            if h0.as_ref().is_some_and(|v| v.len() != d) {
                return Err(parse_err(&source, n + 1, "h0 dimension mismatch"));
            }
            map.insert(rec.doc_id, (h, h0));
        }
    }
    Ok(PrecomputedEmbeddings {
        input_embeddings: Arc::new(input),
        records: map,
    })
}

/// FNV-1a over the vocabulary terms, hex encoded. Stored in index headers
/// so that query vectors built against another vocabulary are rejected.
pub fn vocab_fingerprint(vocab: &Vocabulary) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for term in vocab.terms() {
        for b in term.bytes().chain(std::iter::once(b'\n')) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::build(["a", "b", "c"])
    }

    #[test]
    fn collection_parse() {
        let docs = parse_collection("d1\ta b a\nd2\t\n\nd3\tc\n", &vocab(), "mem").unwrap();
        assert_eq!(docs.len(), 3);
        assert_eq!(docs[0].token_ids, vec![0, 1, 0]);
        assert!(docs[1].is_empty());
        let err = parse_collection("d1\ta zz\n", &vocab(), "c.tsv").unwrap_err();
        assert!(matches!(err, LsrError::Parse { line: 1, .. }));
    }

    #[test]
    fn vectors_round_trip_with_terms() {
        let v = vocab();
        let items = vec![
            ("x".to_string(), SparseVector::new([(0u32, 1.0f64), (2, 0.125)]).unwrap()),
            ("y".to_string(), SparseVector::zero()),
        ];
        let text = format_vectors(&items, Some(&v)).unwrap();
        assert!(text.starts_with(r#"{"id":"x","vector":{"a":1.0,"c":0.125}}"#));
        assert_eq!(parse_vectors(&text, Some(&v), "m").unwrap(), items);
    }

    #[test]
    fn vectors_reject_negative() {
        assert!(parse_vectors(r#"{"id":"x","vector":{"0":-1.0}}"#, None, "m").is_err());
    }

    #[test]
    fn triples_parse() {
        let t = parse_triples(
            r#"{"q":"q1","pos":"d1","negs":["d2"],"teacher":{"pos":3.0,"negs":[1.0]}}
{"q":"q2","pos":"d2","negs":["d1","d3"]}"#,
            "m",
        )
        .unwrap();
        assert_eq!(t[0].teacher.as_ref().unwrap().negs, vec![1.0]);
        assert!(t[1].teacher.is_none());
        assert!(parse_triples(r#"{"q":"q","pos":"d","negs":["a"],"teacher":{"pos":1,"negs":[]}}"#, "m").is_err());
    }

    #[test]
    fn fingerprint_depends_on_order() {
        let a = vocab_fingerprint(&Vocabulary::build(["a", "b"]));
        let b = vocab_fingerprint(&Vocabulary::build(["b", "a"]));
        assert_ne!(a, b);
        assert_eq!(a, vocab_fingerprint(&Vocabulary::build(["a", "b"])));
        assert_ne!(
            vocab_fingerprint(&Vocabulary::build(["ab", "c"])),
            vocab_fingerprint(&Vocabulary::build(["a", "bc"]))
        );
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
    }
}
