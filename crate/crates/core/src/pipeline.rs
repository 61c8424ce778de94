//! End-to-end composition: load a method's data, obtain its heads, encode,
//! index, search and evaluate; plus controlled single-change ablations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BackboneConfig, Component, LossKind, MethodConfig};
use crate::corpus::{compute_corpus_stats, CorpusStats, TokenizedText};
use crate::encoders::{EmbeddingSource, Encoder, EncoderKind, HeadParameters, ToyBackbone};
use crate::error::{LsrError, Result};
use crate::eval::{mrr_at_k, ndcg_at_k, read_qrels, recall_at_k, Qrels, RunFile};
use crate::index::{build_index, index_search, ImpactIndex, IndexStats};
use crate::io::{read_collection, read_embeddings, read_expansions, read_to_string, read_triples, read_vocabulary, vocab_fingerprint};
use crate::sparse::SparseVector;
use crate::supervision::{
    compute_term_recall, train_heads, StepRecord, TermLabelExample, TrainOptions, TrainingData, TrainingResources,
    TrainingTriple,
};
use crate::vocab::{TermId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Query,
    Doc,
}

impl Side {
    pub fn parse(s: &str) -> Option<Side> {
        match s {
            "query" | "q" => Some(Side::Query),
            "doc" | "d" | "document" => Some(Side::Doc),
            _ => None,
        }
    }
}

/// Everything read from a config's data paths.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub vocab: Vocabulary,
    pub docs: Vec<TokenizedText>,
    pub queries: Vec<TokenizedText>,
    pub qrels: Option<Qrels>,
    pub expansions: Option<HashMap<String, Vec<TermId>>>,
    pub stats: CorpusStats,
}

fn required<'a>(p: &'a Option<std::path::PathBuf>, field: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| LsrError::config(format!("paths.{field}"), "required but not set"))
}

impl Dataset {
    pub fn load(config: &MethodConfig) -> Result<Dataset> {
        let p = &config.paths;
        let vocab = read_vocabulary(required(&p.vocab, "vocab")?)?;
        let docs = read_collection(required(&p.collection, "collection")?, &vocab)?;
        let queries = match &p.queries {
            Some(q) => read_collection(q, &vocab)?,
            None => Vec::new(),
        };
        let qrels = p.qrels.as_deref().map(read_qrels).transpose()?;
        let expansions = p.expansions.as_deref().map(|e| read_expansions(e, &vocab)).transpose()?;
        let stats = compute_corpus_stats(&docs);
        if stats.degenerate {
            log::warn!("collection statistics are degenerate (empty corpus or zero average length)");
        }
        Ok(Dataset {
            vocab,
            docs,
            queries,
            qrels,
            expansions,
            stats,
        })
    }
}

/// Frozen embedding sources for each side.
pub struct Backbones {
    pub query: Box<dyn EmbeddingSource<f64>>,
    pub doc: Box<dyn EmbeddingSource<f64>>,
}

impl Backbones {
    pub fn build(config: &MethodConfig, vocab_size: usize, seed: u64) -> Result<Backbones> {
        match &config.backbone {
            BackboneConfig::Toy { dim } => {
                let b = ToyBackbone::<f64>::new(vocab_size, *dim, seed);
                Ok(Backbones {
                    query: Box::new(b.clone()),
                    doc: Box::new(b),
                })
            }
            BackboneConfig::Precomputed {
                input_embeddings,
                query_embeddings,
                doc_embeddings,
            } => {
                let q = read_embeddings::<f64>(input_embeddings, &[query_embeddings.as_path()])?;
                let d = read_embeddings::<f64>(input_embeddings, &[doc_embeddings.as_path()])?;
                if q.vocab_size() != vocab_size {
                    return Err(LsrError::Mismatch(format!(
                        "input embeddings cover {} terms, vocabulary has {vocab_size}",
                        q.vocab_size()
                    )));
                }
                Ok(Backbones {
                    query: Box::new(q),
                    doc: Box::new(d),
                })
            }
        }
    }
}

/// Heads for the neural sides of a method.
#[derive(Debug, Clone, Default)]
pub struct MethodHeads {
    pub query: Option<HeadParameters<f64>>,
    pub doc: Option<HeadParameters<f64>>,
    pub history: Vec<StepRecord>,
}

impl MethodHeads {
    pub fn side(&self, side: Side) -> Option<&HeadParameters<f64>> {
        match side {
            Side::Query => self.query.as_ref(),
            Side::Doc => self.doc.as_ref(),
        }
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.history.last().map(|r| r.loss)
    }
}

fn index_by_id(texts: &[TokenizedText]) -> HashMap<&str, &TokenizedText> {
    texts.iter().map(|t| (t.doc_id.as_str(), t)).collect()
}

/// Builds the supervision examples a config asks for.
pub fn training_data(config: &MethodConfig, data: &Dataset) -> Result<TrainingData> {
    let p = &config.paths;
    let train_queries = match &p.train_queries {
        Some(path) => read_collection(path, &data.vocab)?,
        None => data.queries.clone(),
    };
    let queries = index_by_id(&train_queries);
    let docs = index_by_id(&data.docs);
    match config.supervision.loss {
        LossKind::TermMse => {
            let qrels = read_qrels(required(&p.train_qrels, "train_qrels")?)?;
            let mut relevant: HashMap<String, Vec<TokenizedText>> = HashMap::new();
            for (qid, judged) in &qrels {
                let Some(q) = queries.get(qid.as_str()) else {
                    log::warn!("train qrels mention unknown query `{qid}`");
                    continue;
                };
                for (doc, &grade) in judged {
                    if grade >= 1 {
                        relevant.entry(doc.clone()).or_default().push((*q).clone());
                    }
                }
            }
            let recall = compute_term_recall(&relevant);
            let mut examples = Vec::new();
            for (doc_id, labels) in &recall {
                let Some(doc) = docs.get(doc_id.as_str()) else {
                    log::warn!("train qrels mention unknown document `{doc_id}`");
                    continue;
                };
                // every document term gets a target; terms no query used get 0
                let full: BTreeMap<TermId, f64> = doc
                    .distinct_terms()
                    .into_iter()
                    .map(|t| (t, labels.get(&t).copied().unwrap_or(0.0)))
                    .collect();
                examples.push(TermLabelExample {
                    doc: (*doc).clone(),
                    labels: full,
                });
            }
            Ok(TrainingData::TermLabels(examples))
        }
        _ => {
            let records = read_triples(required(&p.triples, "triples")?)?;
            let per_query = config.supervision.negatives_per_query();
            let lookup = |map: &HashMap<&str, &TokenizedText>, id: &str, what: &str| {
                map.get(id)
                    .map(|t| (*t).clone())
                    .ok_or_else(|| LsrError::Mismatch(format!("triples reference unknown {what} `{id}`")))
            };
            let limit = config.training.max_triples.unwrap_or(usize::MAX);
            let mut triples = Vec::new();
            for r in records.into_iter().take(limit) {
                let n = per_query.unwrap_or(r.negs.len()).min(r.negs.len());
                triples.push(TrainingTriple {
                    query: lookup(&queries, &r.q, "query")?,
                    positive: lookup(&docs, &r.pos, "document")?,
                    negatives: r.negs[..n]
                        .iter()
                        .map(|id| lookup(&docs, id, "document"))
                        .collect::<Result<_>>()?,
                    teacher_scores: r.teacher.map(|t| (t.pos, t.negs[..n].to_vec())),
                });
            }
            Ok(TrainingData::Triples(triples))
        }
    }
}

fn load_heads(path: &Path) -> Result<HeadParameters<f64>> {
    HeadParameters::from_json(&read_to_string(path)?)
}

/// Loads, trains or initializes the heads of a method.
///
/// Heads named in `paths.heads` are loaded and kept fixed. Otherwise, when
/// `training.steps > 0`, the unfrozen neural sides are trained; `plan`
/// carries starting heads and frozen flags (used by ablations).
pub fn obtain_heads(
    config: &MethodConfig,
    data: &Dataset,
    backbones: &Backbones,
    mut plan: TrainOptions<f64>,
) -> Result<MethodHeads> {
    let dim = backbones.doc.dim();
    let v = data.vocab.len();
    let q_neural = config.query_encoder.is_differentiable();
    let d_neural = config.doc_encoder.is_differentiable();
    if let Some(path) = config.paths.heads.query.as_deref().filter(|_| q_neural) {
        plan.init_query = Some(load_heads(path)?);
        plan.freeze_query = true;
    }
    if let Some(path) = config.paths.heads.doc.as_deref().filter(|_| d_neural) {
        plan.init_doc = Some(load_heads(path)?);
        plan.freeze_doc = true;
    }
    for (h, what) in [(&plan.init_query, "query heads"), (&plan.init_doc, "doc heads")] {
        if let Some(h) = h {
            h.validate(dim, v).map_err(|e| LsrError::config("paths.heads", format!("{what}: {e}")))?;
        }
    }
    let wants_training = config.training.steps > 0
        && ((q_neural && !plan.freeze_query) || (d_neural && !plan.freeze_doc));
    if wants_training {
        let examples = training_data(config, data)?;
        let res = TrainingResources {
            query_embeddings: backbones.query.as_ref(),
            doc_embeddings: backbones.doc.as_ref(),
            stats: Some(&data.stats),
            expansions: data.expansions.as_ref(),
        };
        plan.steps = config.training.steps;
        plan.lr = config.training.lr;
        let trained = train_heads(config, &examples, &res, plan)?;
        return Ok(MethodHeads {
            query: trained.query,
            doc: trained.doc,
            history: trained.history,
        });
    }
    let query = q_neural.then(|| plan.init_query.unwrap_or_else(|| config.query_heads.build(dim, v)));
    let doc = d_neural.then(|| {
        plan.init_doc.unwrap_or_else(|| {
            if config.shared_heads {
                query.clone().expect("shared heads are neural")
            } else {
                config.doc_heads.build(dim, v)
            }
        })
    });
    Ok(MethodHeads {
        query,
        doc,
        history: Vec::new(),
    })
}

/// The configured encoder for one side.
pub fn side_encoder<'a>(
    config: &MethodConfig,
    side: Side,
    heads: &'a MethodHeads,
    backbones: &'a Backbones,
    data: &'a Dataset,
) -> Encoder<'a, f64> {
    let (kind, emb, reg) = match side {
        Side::Query => (config.query_encoder, backbones.query.as_ref(), config.regularizer.query),
        Side::Doc => (config.doc_encoder, backbones.doc.as_ref(), config.regularizer.doc),
    };
    let mut enc = Encoder::new(kind);
    enc.heads = heads.side(side);
    enc.embeddings = Some(emb);
    enc.stats = Some(&data.stats);
    enc.bm25 = config.bm25;
    enc.expansions = data.expansions.as_ref();
    enc.topk = reg.inference_topk();
    enc
}

pub fn encode_texts(enc: &Encoder<'_, f64>, texts: &[TokenizedText]) -> Result<Vec<(String, SparseVector<f64>)>> {
    texts
        .par_iter()
        .map(|t| Ok((t.doc_id.clone(), enc.encode(t)?)))
        .collect()
}

/// How many encoded texts carry terms outside their (expanded) input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SupportAudit {
    pub checked: usize,
    pub expanded: usize,
}

/// Checks the support constraint; confined encoders that emit a term
/// outside their input are an error.
pub fn audit_support(
    enc: &Encoder<'_, f64>,
    texts: &[TokenizedText],
    vectors: &[(String, SparseVector<f64>)],
) -> Result<SupportAudit> {
    if texts.len() != vectors.len() {
        return Err(LsrError::LengthMismatch(format!("{} texts vs {} vectors", texts.len(), vectors.len())));
    }
    let mut audit = SupportAudit::default();
    for (t, (_, v)) in texts.iter().zip(vectors) {
        let input: BTreeSet<TermId> = enc.prepare(t)?.token_ids.into_iter().collect();
        audit.checked += 1;
        if let Some(extra) = v.terms().find(|x| !input.contains(x)) {
            if enc.kind.confined_to_input() {
                return Err(LsrError::Mismatch(format!(
                    "{} encoder emitted term {extra} absent from input `{}`",
                    enc.kind, t.doc_id
                )));
            }
            audit.expanded += 1;
        }
    }
    Ok(audit)
}

/// Builds an index from encoded documents, stamped with the vocabulary.
pub fn index_documents(
    config: &MethodConfig,
    vocab: &Vocabulary,
    docs: Vec<(String, SparseVector<f64>)>,
) -> Result<ImpactIndex> {
    let mut index = build_index(docs, vocab.len(), config.quantization)?;
    index.vocab_fingerprint = Some(vocab_fingerprint(vocab));
    Ok(index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutput {
    pub run: RunFile,
    pub ops_count: u64,
    /// `(query id, nnz, ops)` in input order.
    pub per_query: Vec<(String, usize, u64)>,
}

pub fn check_vocab(index: &ImpactIndex, vocab: &Vocabulary) -> Result<()> {
    if index.vocab_size != vocab.len() {
        return Err(LsrError::Mismatch(format!(
            "index built over {} terms, vocabulary has {}",
            index.vocab_size,
            vocab.len()
        )));
    }
    if let Some(fp) = &index.vocab_fingerprint {
        let ours = vocab_fingerprint(vocab);
        if *fp != ours {
            return Err(LsrError::Mismatch(format!("index vocabulary fingerprint {fp} differs from {ours}")));
        }
    }
    Ok(())
}

pub fn search_all(
    index: &ImpactIndex,
    queries: &[(String, SparseVector<f64>)],
    k: usize,
    tag: &str,
) -> Result<SearchOutput> {
    let results = queries
        .par_iter()
        .map(|(_, q)| index_search(index, q, k))
        .collect::<Result<Vec<_>>>()?;
    let mut run = RunFile::new(tag);
    let mut per_query = Vec::with_capacity(queries.len());
    let mut ops_count = 0;
    for ((id, q), r) in queries.iter().zip(results) {
        ops_count += r.ops_count;
        per_query.push((id.clone(), q.nnz(), r.ops_count));
        if k > 0 {
            run.insert(id.clone(), r.hits);
        }
    }
    Ok(SearchOutput {
        run,
        ops_count,
        per_query,
    })
}

/// Metric columns of a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportMetrics {
    #[serde(rename = "mrr@10")]
    pub mrr_at_10: f64,
    #[serde(rename = "ndcg@10")]
    pub ndcg_at_10: f64,
    #[serde(rename = "recall@100")]
    pub recall_at_100: f64,
    #[serde(rename = "recall@1000")]
    pub recall_at_1000: f64,
}

pub fn report_metrics(run: &RunFile, qrels: &Qrels) -> Result<ReportMetrics> {
    Ok(ReportMetrics {
        mrr_at_10: mrr_at_k(run, qrels, 10)?,
        ndcg_at_10: ndcg_at_k(run, qrels, 10)?,
        recall_at_100: recall_at_k(run, qrels, 100)?,
        recall_at_1000: recall_at_k(run, qrels, 1000)?,
    })
}

/// One row of a method/ablation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub query_encoder: EncoderKind,
    pub doc_encoder: EncoderKind,
    pub metrics: Option<ReportMetrics>,
    pub mean_query_nnz: f64,
    pub mean_doc_nnz: f64,
    pub ops_count: u64,
    pub mean_ops_per_query: f64,
    /// Variance of all stored document weights (0 for binary weighting).
    pub doc_weight_variance: f64,
    pub doc_support: SupportAudit,
    pub query_support: SupportAudit,
    pub index: IndexStats,
    pub final_loss: Option<f64>,
}

/// Everything produced by one end-to-end run.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub report: MethodReport,
    pub run: RunFile,
    pub heads: MethodHeads,
}

fn mean_nnz(vs: &[(String, SparseVector<f64>)]) -> f64 {
    if vs.is_empty() {
        return 0.0;
    }
    vs.iter().map(|(_, v)| v.nnz()).sum::<usize>() as f64 / vs.len() as f64
}

fn weight_variance(vs: &[(String, SparseVector<f64>)]) -> f64 {
    let weights: Vec<f64> = vs.iter().flat_map(|(_, v)| v.iter().map(|(_, w)| w)).collect();
    if weights.is_empty() {
        return 0.0;
    }
    let n = weights.len() as f64;
    let mean = weights.iter().sum::<f64>() / n;
    weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n
}

/// encode → index → search → eval with the given heads.
pub fn run_with_heads(
    config: &MethodConfig,
    data: &Dataset,
    backbones: &Backbones,
    heads: MethodHeads,
) -> Result<MethodOutcome> {
    let d_enc = side_encoder(config, Side::Doc, &heads, backbones, data);
    let docs = encode_texts(&d_enc, &data.docs)?;
    let doc_support = audit_support(&d_enc, &data.docs, &docs)?;
    let q_enc = side_encoder(config, Side::Query, &heads, backbones, data);
    let queries = encode_texts(&q_enc, &data.queries)?;
    let query_support = audit_support(&q_enc, &data.queries, &queries)?;
    let mean_doc_nnz = mean_nnz(&docs);
    let doc_weight_variance = weight_variance(&docs);
    let index = index_documents(config, &data.vocab, docs)?;
    let out = search_all(&index, &queries, config.depth, &config.name)?;
    let metrics = data.qrels.as_ref().map(|q| report_metrics(&out.run, q)).transpose()?;
    let report = MethodReport {
        method: config.name.clone(),
        query_encoder: config.query_encoder,
        doc_encoder: config.doc_encoder,
        metrics,
        mean_query_nnz: mean_nnz(&queries),
        mean_doc_nnz,
        ops_count: out.ops_count,
        mean_ops_per_query: if queries.is_empty() {
            0.0
        } else {
            out.ops_count as f64 / queries.len() as f64
        },
        doc_weight_variance,
        doc_support,
        query_support,
        index: index.stats.clone(),
        final_loss: heads.final_loss(),
    };
    Ok(MethodOutcome {
        report,
        run: out.run,
        heads,
    })
}

/// Loads a config's data and runs the whole pipeline.
pub fn run_method(config: &MethodConfig, seed: u64) -> Result<MethodOutcome> {
    config.validate()?;
    let data = Dataset::load(config)?;
    let backbones = Backbones::build(config, data.vocab.len(), seed)?;
    let heads = obtain_heads(config, &data, &backbones, TrainOptions::new(0, 0.0))?;
    run_with_heads(config, &data, &backbones, heads)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub toggle: String,
    pub changed: Vec<Component>,
    pub report: MethodReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub base: MethodReport,
    pub variants: Vec<AblationRow>,
}

/// Runs `base` and each single-change variant on the same data and seed.
///
/// A variant keeps the base's trained heads on every side the toggle does
/// not touch and only trains the changed side, so differences are
/// attributable to that one change.
pub fn run_ablation(base: &MethodConfig, toggles: &[String], seed: u64) -> Result<AblationReport> {
    base.validate()?;
    let variants: Vec<(String, MethodConfig)> = toggles
        .iter()
        .map(|t| Ok((t.clone(), base.with_toggle(t)?)))
        .collect::<Result<_>>()?;
    let data = Dataset::load(base)?;
    let backbones = Backbones::build(base, data.vocab.len(), seed)?;
    let base_heads = obtain_heads(base, &data, &backbones, TrainOptions::new(0, 0.0))?;
    let base_out = run_with_heads(base, &data, &backbones, base_heads.clone())?;
    let mut rows = Vec::new();
    for (toggle, cfg) in variants {
        let shared_changed = cfg.shared_heads != base.shared_heads;
        let q_same = !shared_changed
            && cfg.query_encoder == base.query_encoder
            && cfg.query_heads == base.query_heads
            && cfg.regularizer.query == base.regularizer.query;
        let d_same = !shared_changed
            && cfg.doc_encoder == base.doc_encoder
            && cfg.doc_heads == base.doc_heads
            && cfg.regularizer.doc == base.regularizer.doc;
        let mut plan = TrainOptions::new(0, 0.0);
        if q_same && cfg.query_encoder.is_differentiable() {
            plan.init_query = base_heads.query.clone();
            plan.freeze_query = true;
        }
        if d_same && cfg.doc_encoder.is_differentiable() {
            plan.init_doc = base_heads.doc.clone();
            plan.freeze_doc = true;
        }
        if cfg.shared_heads && (plan.freeze_query || plan.freeze_doc) {
            // one side of a shared head cannot be frozen alone
            plan.freeze_query = false;
            plan.freeze_doc = false;
        }
        let heads = obtain_heads(&cfg, &data, &backbones, plan)?;
        let out = run_with_heads(&cfg, &data, &backbones, heads)?;
        rows.push(AblationRow {
            toggle,
            changed: base.diff_components(&cfg),
            report: out.report,
        });
    }
    Ok(AblationReport {
        base: base_out.report,
        variants: rows,
    })
}

fn metric_cells(m: &Option<ReportMetrics>) -> [String; 4] {
    match m {
        Some(m) => [m.mrr_at_10, m.ndcg_at_10, m.recall_at_100, m.recall_at_1000].map(|x| format!("{:.4}", x)),
        None => ["-".into(), "-".into(), "-".into(), "-".into()],
    }
}

/// Aligned plain-text table, one row per method.
pub fn format_table(rows: &[&MethodReport]) -> String {
    let header = [
        "method", "query", "doc", "MRR@10", "NDCG@10", "R@100", "R@1000", "q_nnz", "d_nnz", "ops",
    ];
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in rows {
        let mut row = vec![r.method.clone(), r.query_encoder.to_string(), r.doc_encoder.to_string()];
        row.extend(metric_cells(&r.metrics));
        row.push(format!("{:.2}", r.mean_query_nnz));
        row.push(format!("{:.2}", r.mean_doc_nnz));
        row.push(r.ops_count.to_string());
        cells.push(row);
    }
    render(&cells)
}

fn render(cells: &[Vec<String>]) -> String {
    let cols = cells.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| cells.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in cells {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
    }
    out
}

impl AblationReport {
    /// Before → after for each variant, in the layout of a controlled-change
    /// table.
    pub fn to_text(&self) -> String {
        let mut cells = vec![["change", "MRR@10", "NDCG@10", "R@100", "R@1000", "q_nnz", "d_nnz", "ops"]
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()];
        let b = &self.base;
        let base_row = |r: &MethodReport| {
            let mut row = vec![format!("{} (base)", r.method)];
            row.extend(metric_cells(&r.metrics));
            row.push(format!("{:.2}", r.mean_query_nnz));
            row.push(format!("{:.2}", r.mean_doc_nnz));
            row.push(r.ops_count.to_string());
            row
        };
        cells.push(base_row(b));
        for v in &self.variants {
            let r = &v.report;
            let before = metric_cells(&b.metrics);
            let after = metric_cells(&r.metrics);
            let mut row = vec![v.toggle.clone()];
            row.extend(before.iter().zip(&after).map(|(x, y)| format!("{x} -> {y}")));
            row.push(format!("{:.2} -> {:.2}", b.mean_query_nnz, r.mean_query_nnz));
            row.push(format!("{:.2} -> {:.2}", b.mean_doc_nnz, r.mean_doc_nnz));
            row.push(format!("{} -> {}", b.ops_count, r.ops_count));
            cells.push(row);
        }
        render(&cells)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
