//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's math; inputs come in as plain slices.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;

use lsr_core::encoders::{Activation, EmbeddingBundle, HeadParameters};
use lsr_core::eval::{Qrels, RunFile};
use lsr_core::{MethodConfig, SparseVector, TokenizedText};
use rand::Rng;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn load_config(name: &str) -> MethodConfig {
    let path = repo_root().join("configs").join(format!("{name}.json"));
    MethodConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Textbook BM25 over raw token lists, computed from scratch.
pub struct TextbookBm25 {
    n: f64,
    avgdl: f64,
    df: HashMap<u32, f64>,
    k1: f64,
    b: f64,
}

impl TextbookBm25 {
    pub fn new(docs: &[Vec<u32>], k1: f64, b: f64) -> Self {
        let mut df = HashMap::new();
        let mut total = 0usize;
        for d in docs {
            total += d.len();
            let uniq: HashSet<u32> = d.iter().copied().collect();
            for t in uniq {
                *df.entry(t).or_insert(0.0) += 1.0;
            }
        }
        TextbookBm25 {
            n: docs.len() as f64,
            avgdl: total as f64 / docs.len() as f64,
            df,
            k1,
            b,
        }
    }

    pub fn score(&self, query: &[u32], doc: &[u32]) -> f64 {
        let uniq: HashSet<u32> = query.iter().copied().collect();
        let dl = doc.len() as f64;
        let mut s = 0.0;
        for t in uniq {
            let tf = doc.iter().filter(|&&x| x == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = self.df.get(&t).copied().unwrap_or(0.0);
            let idf = (1.0 + (self.n - df + 0.5) / (df + 0.5)).ln();
            s += idf * tf * (self.k1 + 1.0) / (tf + self.k1 * (1.0 - self.b + self.b * dl / self.avgdl));
        }
        s
    }
}

fn act(a: Activation, x: f64) -> f64 {
    match a {
        Activation::Relu => {
            if x > 0.0 {
                x
            } else {
                0.0
            }
        }
        Activation::Softplus => (1.0 + x.exp()).ln(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quality(head: &Heads, cls: &[f64]) -> f64 {
    if head.use_quality_heads {
        (1.0 + (dot(&head.quality_weight, cls) + head.quality_bias).exp()).ln()
    } else {
        1.0
    }
}

fn importance(head: &Heads, h: &[f64]) -> f64 {
    if head.use_quality_heads {
        (1.0 + (dot(&head.importance_weight, h) + head.importance_bias).exp()).ln()
    } else {
        1.0
    }
}

type Heads = HeadParameters<f64>;

pub fn dense_binary(tokens: &[u32], v: usize) -> Vec<f64> {
    let mut out = vec![0.0; v];
    for &t in tokens {
        out[t as usize] = 1.0;
    }
    out
}

pub fn dense_mlp(tokens: &[u32], emb: &EmbeddingBundle<f64>, head: &Heads) -> Vec<f64> {
    let mut out = vec![0.0; emb.vocab_size()];
    for (i, slot) in out.iter_mut().enumerate() {
        for (j, &t) in tokens.iter().enumerate() {
            if t as usize != i {
                continue;
            }
            let a = act(head.activation, dot(emb.ctx_embeddings.row(j), &head.mlp_weight) + head.mlp_bias);
            *slot += if head.mlp_log_normalize { (a + 1.0).ln() } else { a };
        }
    }
    out
}

/// `log(1 + max_j x_j)` form.
pub fn dense_mlm(tokens: &[u32], emb: &EmbeddingBundle<f64>, head: &Heads) -> Vec<f64> {
    let q = quality(head, &emb.cls_embedding);
    (0..emb.vocab_size())
        .map(|i| {
            let mut m: f64 = 0.0;
            for j in 0..tokens.len() {
                let h = emb.ctx_embeddings.row(j);
                let x = act(head.activation, dot(h, emb.input_embeddings.row(i)) + head.mlm_bias[i]) * importance(head, h);
                m = m.max(x);
            }
            q * (1.0 + m).ln()
        })
        .collect()
}

/// `max_j log(1 + x_j)` form; equal to [`dense_mlm`] for non-negative `x_j`.
pub fn dense_mlm_logmax(tokens: &[u32], emb: &EmbeddingBundle<f64>, head: &Heads) -> Vec<f64> {
    let q = quality(head, &emb.cls_embedding);
    (0..emb.vocab_size())
        .map(|i| {
            let mut m: f64 = 0.0;
            for j in 0..tokens.len() {
                let h = emb.ctx_embeddings.row(j);
                let x = act(head.activation, dot(h, emb.input_embeddings.row(i)) + head.mlm_bias[i]) * importance(head, h);
                m = m.max((1.0 + x).ln());
            }
            q * m
        })
        .collect()
}

pub fn dense_cls_mlm(emb: &EmbeddingBundle<f64>, head: &Heads) -> Vec<f64> {
    (0..emb.vocab_size())
        .map(|i| act(head.activation, dot(&emb.cls_embedding, emb.input_embeddings.row(i)) + head.mlm_bias[i]))
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn random_text<R: Rng>(rng: &mut R, id: &str, vocab: usize, max_len: usize) -> TokenizedText {
    let len = rng.random_range(0..=max_len);
    TokenizedText::new(id, (0..len).map(|_| rng.random_range(0..vocab as u32)).collect())
}

pub fn random_heads<R: Rng>(rng: &mut R, dim: usize, vocab: usize) -> Heads {
    let mut h = HeadParameters::new(dim, vocab, Default::default());
    let mut fill = |v: &mut Vec<f64>, s: f64| v.iter_mut().for_each(|x| *x = rng.random_range(-s..s));
    fill(&mut h.mlp_weight, 1.0);
    fill(&mut h.mlm_bias, 0.5);
    fill(&mut h.quality_weight, 0.5);
    fill(&mut h.importance_weight, 0.5);
    h.mlp_bias = rng.random_range(-0.5..0.5);
    h.quality_bias = rng.random_range(-0.5..0.5);
    h.importance_bias = rng.random_range(-0.5..0.5);
    h.activation = if rng.random_bool(0.5) { Activation::Relu } else { Activation::Softplus };
    h.mlp_log_normalize = rng.random_bool(0.5);
    h.use_quality_heads = rng.random_bool(0.5);
    h
}

pub fn random_sparse<R: Rng>(rng: &mut R, vocab: usize, max_nnz: usize, lo: f64, hi: f64) -> SparseVector<f64> {
    let nnz = rng.random_range(0..=max_nnz.min(vocab));
    let mut pairs = BTreeMap::new();
    while pairs.len() < nnz {
        pairs.insert(rng.random_range(0..vocab as u32), rng.random_range(lo..hi));
    }
    SparseVector::new(pairs).unwrap()
}

/// Central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `|a - n| / max(|a|, |n|)`, with exact agreement at zero counting as zero.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-12 {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Every ordering of `items`.
pub fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

/// Every ordered selection (of any length) of distinct elements.
pub fn rankings<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    let n = items.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let subset: Vec<T> = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| items[i].clone()).collect();
        out.extend(permutations(&subset));
    }
    out
}

fn grade_of(judged: Option<&BTreeMap<String, u32>>, doc: &str) -> u32 {
    judged.and_then(|j| j.get(doc)).copied().unwrap_or(0)
}

fn dcg(grades: &[u32], k: usize) -> f64 {
    grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| (2f64.powi(g as i32) - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

/// Brute-force MRR@k, NDCG@k and Recall@k averaged over queries with at
/// least one relevant judgment. `None` when no query qualifies. The ideal
/// DCG is the best DCG over every ordering of the judged documents.
pub fn brute_metrics(run: &RunFile, qrels: &Qrels, k: usize) -> Option<(f64, f64, f64)> {
    let mut sums = (0.0, 0.0, 0.0);
    let mut n = 0usize;
    for (qid, judged) in qrels {
        let relevant: Vec<&String> = judged.iter().filter(|(_, &g)| g >= 1).map(|(d, _)| d).collect();
        if relevant.is_empty() {
            continue;
        }
        n += 1;
        let ranked: Vec<&str> = run
            .rankings
            .get(qid)
            .map(|r| r.iter().map(|(d, _)| d.as_str()).collect())
            .unwrap_or_default();
        let top: Vec<&str> = ranked.iter().take(k).copied().collect();

        let mut rr = 0.0;
        for (i, d) in top.iter().enumerate() {
            if grade_of(Some(judged), d) >= 1 {
                rr = 1.0 / (i + 1) as f64;
                break;
            }
        }
        let grades: Vec<u32> = top.iter().map(|d| grade_of(Some(judged), d)).collect();
        let positive: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
        let ideal = permutations(&positive).iter().map(|p| dcg(p, k)).fold(0.0, f64::max);
        let hits = top.iter().filter(|d| grade_of(Some(judged), d) >= 1).count();

        sums.0 += rr;
        sums.1 += dcg(&grades, k) / ideal;
        sums.2 += hits as f64 / relevant.len() as f64;
    }
    (n > 0).then(|| (sums.0 / n as f64, sums.1 / n as f64, sums.2 / n as f64))
}
