//! Seeded synthetic retrieval task: topical documents, queries built from a
//! source document's distinctive terms, graded qrels, lexical negatives with
//! teacher scores, and two kinds of document expansion.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;
use serde::{Deserialize, Serialize};

use crate::corpus::{compute_corpus_stats, CorpusStats, TokenizedText};
use crate::encoders::{encode_bm25_doc, encode_bm25_query, Bm25Params};
use crate::error::{LsrError, Result};
use crate::eval::{format_qrels, Qrels};
use crate::io::{format_collection, format_triples, format_vocabulary, write_atomic, TeacherScores, TripleRecord};
use crate::sparse::SparseVector;
use crate::vocab::{TermId, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub num_topics: usize,
    pub terms_per_topic: usize,
    pub background_terms: usize,
    pub num_docs: usize,
    pub min_doc_len: usize,
    pub max_doc_len: usize,
    /// Probability that a document token is drawn from its topic.
    pub topic_fraction: f64,
    pub num_queries: usize,
    pub num_train_queries: usize,
    pub min_query_len: usize,
    pub max_query_len: usize,
    pub negatives: usize,
    pub expansion_terms: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            num_topics: 20,
            terms_per_topic: 40,
            background_terms: 200,
            num_docs: 500,
            min_doc_len: 20,
            max_doc_len: 40,
            topic_fraction: 0.6,
            num_queries: 100,
            num_train_queries: 64,
            min_query_len: 3,
            max_query_len: 5,
            negatives: 4,
            expansion_terms: 6,
            seed: 13,
        }
    }
}

impl SynthParams {
    pub fn vocab_size(&self) -> usize {
        self.num_topics * self.terms_per_topic + self.background_terms
    }

    fn validate(&self) -> Result<()> {
        let bad = |f: &str, r: &str| Err(LsrError::config(f, r));
        if self.num_topics == 0 || self.terms_per_topic == 0 || self.background_terms == 0 {
            return bad("synth", "topics, topic terms and background terms must be positive");
        }
        if self.num_docs < 2 {
            return bad("synth.num_docs", "need at least two documents");
        }
        if self.min_doc_len == 0 || self.min_doc_len > self.max_doc_len {
            return bad("synth.min_doc_len", "need 0 < min_doc_len <= max_doc_len");
        }
        if self.min_query_len == 0 || self.min_query_len > self.max_query_len {
            return bad("synth.min_query_len", "need 0 < min_query_len <= max_query_len");
        }
        if !(0.0..=1.0).contains(&self.topic_fraction) {
            return bad("synth.topic_fraction", "must lie in [0, 1]");
        }
        if self.num_queries + self.num_train_queries > self.num_docs {
            return bad("synth.num_queries", "each query needs its own source document");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub vocab: Vocabulary,
    pub docs: Vec<TokenizedText>,
    pub doc_topics: Vec<usize>,
    pub queries: Vec<TokenizedText>,
    pub qrels: Qrels,
    pub train_queries: Vec<TokenizedText>,
    pub train_qrels: Qrels,
    pub triples: Vec<TripleRecord>,
    /// Likely query terms per document (docT5query-style).
    pub expansions_dt5q: HashMap<String, Vec<TermId>>,
    /// Frequent topic terms missing from the document (TILDE-style).
    pub expansions_tilde: HashMap<String, Vec<TermId>>,
}

pub fn generate(params: &SynthParams) -> Result<SyntheticTask> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let topic_base = |topic: usize| topic * params.terms_per_topic;
    let background_base = params.num_topics * params.terms_per_topic;

    let mut terms = Vec::with_capacity(params.vocab_size());
    for t in 0..params.num_topics {
        for j in 0..params.terms_per_topic {
            terms.push(format!("k{t:02}w{j:02}"));
        }
    }
    for j in 0..params.background_terms {
        terms.push(format!("bg{j:03}"));
    }
    let vocab = Vocabulary::from_terms(terms)?;

    let zipf_topic = Zipf::new(params.terms_per_topic as f64, 1.0).expect("valid zipf");
    let zipf_bg = Zipf::new(params.background_terms as f64, 1.1).expect("valid zipf");
    let mut docs = Vec::with_capacity(params.num_docs);
    let mut doc_topics = Vec::with_capacity(params.num_docs);
    for i in 0..params.num_docs {
        let topic = i % params.num_topics;
        let len = rng.random_range(params.min_doc_len..=params.max_doc_len);
        let tokens = (0..len)
            .map(|_| {
                if rng.random_bool(params.topic_fraction) {
                    (topic_base(topic) + rng.sample(zipf_topic) as usize - 1) as TermId
                } else {
                    (background_base + rng.sample(zipf_bg) as usize - 1) as TermId
                }
            })
            .collect();
        docs.push(TokenizedText::new(format!("d{i:04}"), tokens));
        doc_topics.push(topic);
    }
    let stats = compute_corpus_stats(&docs);
    let bm25 = Bm25Params::default();
    let doc_vecs: Vec<SparseVector<f64>> = docs
        .iter()
        .map(|d| encode_bm25_doc(d, &stats, &bm25))
        .collect::<Result<_>>()?;

    // every query gets a distinct source document
    let mut sources: Vec<usize> = (0..params.num_docs).collect();
    sources.shuffle(&mut rng);
    let make_queries = |prefix: &str, srcs: &[usize], rng: &mut ChaCha8Rng| {
        let mut queries = Vec::new();
        let mut qrels = Qrels::new();
        for (n, &src) in srcs.iter().enumerate() {
            let qid = format!("{prefix}{n:03}");
            let q = build_query(&qid, &docs[src], doc_topics[src], params, &stats, rng);
            let qv: SparseVector<f64> = encode_bm25_query(&q, &stats);
            let mut judged = BTreeMap::from([(docs[src].doc_id.clone(), 2u32)]);
            let mut related: Vec<(f64, usize)> = (0..docs.len())
                .filter(|&j| j != src && doc_topics[j] == doc_topics[src])
                .map(|j| (qv.dot(&doc_vecs[j]), j))
                .filter(|&(s, _)| s > 0.0)
                .collect();
            related.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, j) in related.iter().take(2) {
                judged.insert(docs[j].doc_id.clone(), 1);
            }
            qrels.insert(qid, judged);
            queries.push(q);
        }
        (queries, qrels)
    };
    let (queries, qrels) = make_queries("q", &sources[..params.num_queries], &mut rng);
    let train_sources = &sources[params.num_queries..params.num_queries + params.num_train_queries];
    let (train_queries, train_qrels) = make_queries("tq", train_sources, &mut rng);

    let doc_index: HashMap<&str, usize> = docs.iter().enumerate().map(|(i, d)| (d.doc_id.as_str(), i)).collect();
    let mut triples = Vec::new();
    for (q, &src) in train_queries.iter().zip(train_sources) {
        let qv: SparseVector<f64> = encode_bm25_query(q, &stats);
        let judged = &train_qrels[&q.doc_id];
        let mut ranked: Vec<(f64, usize)> = (0..docs.len()).map(|j| (qv.dot(&doc_vecs[j]), j)).collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let negs: Vec<usize> = ranked
            .iter()
            .map(|&(_, j)| j)
            .filter(|&j| !judged.contains_key(&docs[j].doc_id))
            .take(params.negatives)
            .collect();
        if negs.is_empty() {
            continue;
        }
        let teacher = |j: usize| {
            let grade = judged.get(&docs[j].doc_id).copied().unwrap_or(0) as f64;
            let same_topic = if doc_topics[j] == doc_topics[src] { 1.0 } else { 0.0 };
            qv.dot(&doc_vecs[j]) + 2.0 * same_topic + 4.0 * grade
        };
        let pos = doc_index[docs[src].doc_id.as_str()];
        triples.push(TripleRecord {
            q: q.doc_id.clone(),
            pos: docs[pos].doc_id.clone(),
            negs: negs.iter().map(|&j| docs[j].doc_id.clone()).collect(),
            teacher: Some(TeacherScores {
                pos: teacher(pos),
                negs: negs.iter().map(|&j| teacher(j)).collect(),
            }),
        });
    }

    let topic_df = topic_document_frequencies(&docs, &doc_topics, params.num_topics);
    let mut expansions_dt5q = HashMap::new();
    let mut expansions_tilde = HashMap::new();
    for (d, &topic) in docs.iter().zip(&doc_topics) {
        let present: BTreeSet<TermId> = d.token_ids.iter().copied().collect();
        let distinctive = distinctive_terms(d, topic, params, &stats);
        let mut dt5q: Vec<TermId> = distinctive.iter().copied().take(params.expansion_terms / 2).collect();
        let mut absent: Vec<(usize, TermId)> = (0..params.terms_per_topic)
            .map(|j| (topic_base(topic) + j) as TermId)
            .filter(|t| !present.contains(t))
            .map(|t| (topic_df[topic].get(&t).copied().unwrap_or(0), t))
            .collect();
        absent.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        dt5q.extend(absent.iter().map(|&(_, t)| t).take(params.expansion_terms - dt5q.len().min(params.expansion_terms)));
        let tilde: Vec<TermId> = absent.iter().map(|&(_, t)| t).take(params.expansion_terms).collect();
        expansions_dt5q.insert(d.doc_id.clone(), dt5q);
        expansions_tilde.insert(d.doc_id.clone(), tilde);
    }

    Ok(SyntheticTask {
        vocab,
        docs,
        doc_topics,
        queries,
        qrels,
        train_queries,
        train_qrels,
        triples,
        expansions_dt5q,
        expansions_tilde,
    })
}

/// Topic terms of `doc`, rarest in the collection first.
fn distinctive_terms(doc: &TokenizedText, topic: usize, params: &SynthParams, stats: &CorpusStats) -> Vec<TermId> {
    let lo = (topic * params.terms_per_topic) as TermId;
    let hi = lo + params.terms_per_topic as TermId;
    let mut terms: Vec<TermId> = doc.distinct_terms().into_iter().filter(|t| (lo..hi).contains(t)).collect();
    terms.sort_by_key(|&t| (stats.df(t), t));
    terms
}

fn build_query(
    qid: &str,
    doc: &TokenizedText,
    topic: usize,
    params: &SynthParams,
    stats: &CorpusStats,
    rng: &mut ChaCha8Rng,
) -> TokenizedText {
    let len = rng.random_range(params.min_query_len..=params.max_query_len);
    let mut pool = distinctive_terms(doc, topic, params, stats);
    pool.truncate(len + 3);
    pool.shuffle(rng);
    let mut q: Vec<TermId> = pool.into_iter().take(len).collect();
    if q.is_empty() {
        q = doc.token_ids.iter().copied().take(len).collect();
    }
    if rng.random_bool(0.3) {
        if let Some(&bg) = doc
            .token_ids
            .iter()
            .find(|&&t| t as usize >= params.num_topics * params.terms_per_topic)
        {
            q.push(bg);
        }
    }
    TokenizedText::new(qid, q)
}

fn topic_document_frequencies(
    docs: &[TokenizedText],
    topics: &[usize],
    num_topics: usize,
) -> Vec<HashMap<TermId, usize>> {
    let mut out = vec![HashMap::new(); num_topics];
    for (d, &t) in docs.iter().zip(topics) {
        for term in d.distinct_terms() {
            *out[t].entry(term).or_default() += 1;
        }
    }
    out
}

fn format_expansions(map: &HashMap<String, Vec<TermId>>, vocab: &Vocabulary) -> String {
    let sorted: BTreeMap<&String, &Vec<TermId>> = map.iter().collect();
    let mut s = String::new();
    for (id, terms) in sorted {
        let words: Vec<&str> = terms.iter().map(|&t| vocab.term(t).unwrap_or("?")).collect();
        s.push_str(&format!("{id}\t{}\n", words.join(" ")));
    }
    s
}

impl SyntheticTask {
    /// Writes the task as plain files under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let files: [(&str, String); 9] = [
            ("vocab.txt", format_vocabulary(&self.vocab)),
            ("collection.tsv", format_collection(&self.docs, &self.vocab)),
            ("queries.tsv", format_collection(&self.queries, &self.vocab)),
            ("qrels.txt", format_qrels(&self.qrels)),
            ("train_queries.tsv", format_collection(&self.train_queries, &self.vocab)),
            ("train_qrels.txt", format_qrels(&self.train_qrels)),
            ("triples.jsonl", format_triples(&self.triples)?),
            ("expansions_dt5q.tsv", format_expansions(&self.expansions_dt5q, &self.vocab)),
            ("expansions_tilde.tsv", format_expansions(&self.expansions_tilde, &self.vocab)),
        ];
        for (name, body) in files {
            write_atomic(&dir.join(name), body.as_bytes())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthParams {
        SynthParams {
            num_topics: 4,
            terms_per_topic: 10,
            background_terms: 10,
            num_docs: 40,
            num_queries: 8,
            num_train_queries: 8,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_and_well_formed() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.docs, b.docs);
        assert_eq!(a.queries, b.queries);
        assert_eq!(a.triples, b.triples);
        assert_eq!(a.vocab.len(), 50);
        for d in &a.docs {
            d.validate(50).unwrap();
            assert!((20..=40).contains(&d.len()));
        }
        for (q, judged) in &a.qrels {
            assert_eq!(judged.values().filter(|&&g| g == 2).count(), 1, "{q}");
        }
        for t in &a.triples {
            assert!(!t.negs.contains(&t.pos));
            let teacher = t.teacher.as_ref().unwrap();
            assert!(teacher.negs.iter().all(|&n| n < teacher.pos));
        }
    }

    #[test]
    fn queries_come_from_their_source() {
        let task = generate(&small()).unwrap();
        let by_id: HashMap<&str, &TokenizedText> = task.docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
        for q in &task.queries {
            let src = task.qrels[&q.doc_id].iter().find(|(_, &g)| g == 2).unwrap().0;
            let doc_terms: BTreeSet<_> = by_id[src.as_str()].token_ids.iter().collect();
            assert!(q.token_ids.iter().all(|t| doc_terms.contains(t)));
        }
    }

    #[test]
    fn tilde_expansions_are_new_terms() {
        let task = generate(&small()).unwrap();
        for d in &task.docs {
            let present: BTreeSet<_> = d.token_ids.iter().collect();
            assert!(task.expansions_tilde[&d.doc_id].iter().all(|t| !present.contains(t)));
        }
    }

    #[test]
    fn rejects_too_many_queries() {
        let p = SynthParams {
            num_queries: 40,
            ..small()
        };
        assert!(generate(&p).is_err());
    }
}
