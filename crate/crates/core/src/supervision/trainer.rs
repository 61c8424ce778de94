//! Full-batch gradient descent on the head parameters, with the backbone
//! frozen.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::config::{LossKind, MethodConfig};
use crate::corpus::{CorpusStats, TokenizedText};
use crate::encoders::{backward, forward, EmbeddingSource, Encoder, EncoderKind, HeadGrad, HeadParameters, TextFeatures};
use crate::error::{LsrError, Result};
use crate::regularization::{flops_penalty, lp_penalty, topk_prune, Norm, RegularizerConfig, RegularizerKind};
use crate::scalar::Scalar;
use crate::sparse::SparseVector;
use crate::vocab::TermId;

use super::losses::{contrastive_nll, margin_mse_scores, term_mse_loss};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTriple {
    pub query: TokenizedText,
    pub positive: TokenizedText,
    pub negatives: Vec<TokenizedText>,
    /// Teacher `(s⁺, [s⁻…])`, read from the triples file.
    pub teacher_scores: Option<(f64, Vec<f64>)>,
}

impl TrainingTriple {
    pub fn validate(&self) -> Result<()> {
        if self.negatives.is_empty() {
            return Err(LsrError::Empty("triple negatives"));
        }
        if let Some((_, negs)) = &self.teacher_scores {
            if negs.len() != self.negatives.len() {
                return Err(LsrError::LengthMismatch(format!(
                    "query `{}`: {} teacher scores for {} negatives",
                    self.query.doc_id,
                    negs.len(),
                    self.negatives.len()
                )));
            }
        }
        Ok(())
    }
}

/// A document with its term-level targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TermLabelExample {
    pub doc: TokenizedText,
    pub labels: BTreeMap<TermId, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainingData {
    Triples(Vec<TrainingTriple>),
    TermLabels(Vec<TermLabelExample>),
}

/// Frozen inputs the encoders read while training.
#[derive(Clone, Copy)]
pub struct TrainingResources<'a, T: Scalar> {
    pub query_embeddings: &'a dyn EmbeddingSource<T>,
    pub doc_embeddings: &'a dyn EmbeddingSource<T>,
    pub stats: Option<&'a CorpusStats>,
    pub expansions: Option<&'a HashMap<String, Vec<TermId>>>,
}

#[derive(Debug, Clone)]
pub struct TrainOptions<T> {
    pub steps: usize,
    pub lr: f64,
    /// Starting heads; freshly built from the config when absent.
    pub init_query: Option<HeadParameters<T>>,
    pub init_doc: Option<HeadParameters<T>>,
    /// A frozen side keeps its starting heads and is encoded once.
    pub freeze_query: bool,
    pub freeze_doc: bool,
}

impl<T> TrainOptions<T> {
    pub fn new(steps: usize, lr: f64) -> Self {
        TrainOptions {
            steps,
            lr,
            init_query: None,
            init_doc: None,
            freeze_query: false,
            freeze_doc: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Supervision loss before the update.
    pub loss: f64,
    /// Regularization term (already scaled by the warm-up factor).
    pub regularization: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedHeads<T> {
    pub query: Option<HeadParameters<T>>,
    pub doc: Option<HeadParameters<T>>,
    pub shared: bool,
    pub history: Vec<StepRecord>,
}

/// Objective value and head gradients at one point.
#[derive(Debug, Clone)]
pub struct Objective<T> {
    pub loss: T,
    pub regularization: T,
    pub query_grad: Option<HeadGrad<T>>,
    pub doc_grad: Option<HeadGrad<T>>,
}

/// Quadratic warm-up of λ over the first third of training.
pub fn lambda_scale(step: usize, steps: usize, warmup: bool) -> f64 {
    if !warmup {
        return 1.0;
    }
    let ramp = (steps / 3).max(1) as f64;
    (step as f64 / ramp).min(1.0).powi(2)
}

enum SideState<T> {
    Trainable(Vec<TextFeatures<T>>),
    Fixed(Vec<SparseVector<T>>),
}

struct Side<T> {
    kind: EncoderKind,
    reg: RegularizerConfig,
    state: SideState<T>,
}

impl<T: Scalar> Side<T> {
    fn trainable(&self) -> bool {
        matches!(self.state, SideState::Trainable(_))
    }

    fn vectors(&self, head: Option<&HeadParameters<T>>, step: usize) -> Result<Vec<SparseVector<T>>> {
        match &self.state {
            SideState::Fixed(v) => Ok(v.clone()),
            SideState::Trainable(feats) => {
                let head = head.expect("trainable side has heads");
                let topk = self.reg.training_topk(step);
                feats
                    .par_iter()
                    .map(|f| {
                        let v = forward(self.kind, f, head)?;
                        Ok(match topk {
                            Some(k) => topk_prune(&v, k),
                            None => v,
                        })
                    })
                    .collect()
            }
        }
    }
}

/// Precomputed training problem; `evaluate` gives the objective and its
/// gradient for any head values.
pub struct Trainer<T: Scalar> {
    config: MethodConfig,
    vocab_size: usize,
    query: Side<T>,
    doc: Side<T>,
    /// `(query, positive, negatives, teacher)` as indices into the sides.
    triples: Vec<(usize, usize, Vec<usize>, Option<(T, Vec<T>)>)>,
    term_labels: Vec<(usize, BTreeMap<TermId, T>)>,
    steps: usize,
}

fn dedup<'t>(texts: impl Iterator<Item = &'t TokenizedText>, order: &mut Vec<TokenizedText>) -> HashMap<String, usize> {
    let mut ids = HashMap::new();
    for t in texts {
        if !ids.contains_key(&t.doc_id) {
            ids.insert(t.doc_id.clone(), order.len());
            order.push(t.clone());
        }
    }
    ids
}

impl<T: Scalar> Trainer<T> {
    pub fn new(
        config: &MethodConfig,
        data: &TrainingData,
        res: &TrainingResources<'_, T>,
        opts: &TrainOptions<T>,
    ) -> Result<Self> {
        let q_diff = config.query_encoder.is_differentiable();
        let d_diff = config.doc_encoder.is_differentiable();
        if !q_diff && !d_diff {
            return Err(LsrError::NotDifferentiable(format!(
                "{}/{}",
                config.query_encoder, config.doc_encoder
            )));
        }
        if config.shared_heads && (opts.freeze_query != opts.freeze_doc) {
            return Err(LsrError::config("shared_heads", "cannot freeze one side of shared heads"));
        }
        if res.query_embeddings.vocab_size() != res.doc_embeddings.vocab_size() {
            return Err(LsrError::Mismatch("query and document embeddings disagree on |V|".into()));
        }
        let vocab_size = res.doc_embeddings.vocab_size();

        let mut q_texts = Vec::new();
        let mut d_texts = Vec::new();
        let mut triples = Vec::new();
        let mut term_labels = Vec::new();
        match data {
            TrainingData::Triples(list) => {
                if config.supervision.loss == LossKind::TermMse {
                    return Err(LsrError::config("supervision.loss", "term_mse needs term labels, not triples"));
                }
                if list.is_empty() {
                    return Err(LsrError::Empty("training triples"));
                }
                for t in list {
                    t.validate()?;
                    if config.supervision.loss == LossKind::MarginMse && t.teacher_scores.is_none() {
                        return Err(LsrError::config(
                            "supervision.label_type",
                            format!("margin_mse needs teacher scores (query `{}`)", t.query.doc_id),
                        ));
                    }
                }
                let q_ids = dedup(list.iter().map(|t| &t.query), &mut q_texts);
                let d_ids = dedup(
                    list.iter().flat_map(|t| std::iter::once(&t.positive).chain(&t.negatives)),
                    &mut d_texts,
                );
                for t in list {
                    triples.push((
                        q_ids[&t.query.doc_id],
                        d_ids[&t.positive.doc_id],
                        t.negatives.iter().map(|n| d_ids[&n.doc_id]).collect(),
                        t.teacher_scores
                            .as_ref()
                            .map(|(p, n)| (T::lit(*p), n.iter().map(|&x| T::lit(x)).collect())),
                    ));
                }
            }
            TrainingData::TermLabels(list) => {
                if config.supervision.loss != LossKind::TermMse {
                    return Err(LsrError::config("supervision.loss", "term labels train with term_mse"));
                }
                if !d_diff {
                    return Err(LsrError::config("doc_encoder", "term labels supervise the document encoder"));
                }
                let ids = dedup(list.iter().map(|e| &e.doc), &mut d_texts);
                for e in list {
                    if e.labels.is_empty() {
                        continue;
                    }
                    let labels = e.labels.iter().map(|(&t, &y)| (t, T::lit(y))).collect();
                    term_labels.push((ids[&e.doc.doc_id], labels));
                }
                if term_labels.is_empty() {
                    return Err(LsrError::Empty("term labels"));
                }
            }
        }

        let build_side = |kind: EncoderKind,
                          reg: RegularizerConfig,
                          texts: &[TokenizedText],
                          emb: &dyn EmbeddingSource<T>,
                          frozen: bool,
                          init: Option<&HeadParameters<T>>|
         -> Result<Side<T>> {
            let mut enc = Encoder::new(kind);
            enc.embeddings = Some(emb);
            enc.stats = res.stats;
            enc.expansions = res.expansions;
            enc.bm25 = config.bm25;
            enc.heads = init;
            let state = if kind.is_differentiable() && !frozen {
                let feats = texts
                    .par_iter()
                    .map(|t| enc.features(&enc.prepare(t)?))
                    .collect::<Result<Vec<_>>>()?;
                SideState::Trainable(feats)
            } else {
                enc.topk = reg.inference_topk();
                SideState::Fixed(texts.par_iter().map(|t| enc.encode(t)).collect::<Result<Vec<_>>>()?)
            };
            Ok(Side { kind, reg, state })
        };

        let dim = res.doc_embeddings.dim();
        let q_init = opts
            .init_query
            .clone()
            .or_else(|| q_diff.then(|| config.query_heads.build(dim, vocab_size)));
        let d_init = opts.init_doc.clone().or_else(|| {
            d_diff.then(|| {
                if config.shared_heads {
                    q_init.clone().expect("shared heads are neural")
                } else {
                    config.doc_heads.build(dim, vocab_size)
                }
            })
        });
        let query = build_side(
            config.query_encoder,
            config.regularizer.query,
            &q_texts,
            res.query_embeddings,
            opts.freeze_query,
            q_init.as_ref(),
        )?;
        let doc = build_side(
            config.doc_encoder,
            config.regularizer.doc,
            &d_texts,
            res.doc_embeddings,
            opts.freeze_doc,
            d_init.as_ref(),
        )?;
        if !query.trainable() && !doc.trainable() {
            return Err(LsrError::config("training", "every trainable side is frozen"));
        }
        Ok(Trainer {
            config: config.clone(),
            vocab_size,
            query,
            doc,
            triples,
            term_labels,
            steps: opts.steps,
        })
    }

    pub fn num_query_texts(&self) -> usize {
        match &self.query.state {
            SideState::Trainable(f) => f.len(),
            SideState::Fixed(v) => v.len(),
        }
    }

    pub fn num_doc_texts(&self) -> usize {
        match &self.doc.state {
            SideState::Trainable(f) => f.len(),
            SideState::Fixed(v) => v.len(),
        }
    }

    /// Loss + scaled regularizer at the given heads, with gradients for the
    /// trainable sides.
    pub fn evaluate(
        &self,
        q_head: Option<&HeadParameters<T>>,
        d_head: Option<&HeadParameters<T>>,
        step: usize,
    ) -> Result<Objective<T>> {
        let v = self.vocab_size;
        let qv = self.query.vectors(q_head, step)?;
        let dv = self.doc.vectors(d_head, step)?;
        let mut q_up = if self.query.trainable() { vec![vec![T::zero(); v]; qv.len()] } else { Vec::new() };
        let mut d_up = if self.doc.trainable() { vec![vec![T::zero(); v]; dv.len()] } else { Vec::new() };

        let mut loss = T::zero();
        if !self.triples.is_empty() {
            let n = T::lit(self.triples.len() as f64);
            for (qi, pi, negs, teacher) in &self.triples {
                let q = &qv[*qi];
                let s_pos = q.dot(&dv[*pi]);
                let s_negs: Vec<T> = negs.iter().map(|&j| q.dot(&dv[j])).collect();
                let l = match self.config.supervision.loss {
                    LossKind::MarginMse => {
                        let (tp, tn) = teacher.as_ref().expect("checked in new");
                        margin_mse_scores(s_pos, &s_negs, *tp, tn)?
                    }
                    _ => contrastive_nll(s_pos, &s_negs)?,
                };
                loss += l.value / n;
                let pairs = std::iter::once((*pi, l.d_pos)).chain(negs.iter().copied().zip(l.d_negs.iter().copied()));
                for (dj, g) in pairs {
                    let g = g / n;
                    if !q_up.is_empty() {
                        for (t, w) in dv[dj].iter() {
                            q_up[*qi][t as usize] += g * w;
                        }
                    }
                    if !d_up.is_empty() {
                        for (t, w) in q.iter() {
                            d_up[dj][t as usize] += g * w;
                        }
                    }
                }
            }
        }
        if !self.term_labels.is_empty() {
            let n = T::lit(self.term_labels.len() as f64);
            for (di, labels) in &self.term_labels {
                let (l, g) = term_mse_loss(&dv[*di], labels)?;
                loss += l / n;
                for (t, gi) in g.entries {
                    d_up[*di][t as usize] += gi / n;
                }
            }
        }

        let scale = T::lit(lambda_scale(step, self.steps, self.config.training.warmup));
        let mut regularization = T::zero();
        for (side, vecs, up) in [(&self.query, &qv, &mut q_up), (&self.doc, &dv, &mut d_up)] {
            if !side.trainable() || vecs.is_empty() {
                continue;
            }
            let lambda = T::lit(side.reg.weight) * scale;
            regularization += add_regularizer(side.reg, lambda, vecs, up, v, self.config.training.dense_flops_gradient)?;
        }

        // pruned coordinates receive no gradient
        for (side, vecs, up) in [(&self.query, &qv, &mut q_up), (&self.doc, &dv, &mut d_up)] {
            if side.trainable() && side.reg.training_topk(step).is_some() {
                for (vec, u) in vecs.iter().zip(up.iter_mut()) {
                    let mut masked = vec![T::zero(); v];
                    for t in vec.terms() {
                        masked[t as usize] = u[t as usize];
                    }
                    *u = masked;
                }
            }
        }

        let query_grad = self.side_grad(&self.query, q_head, &q_up)?;
        let doc_grad = self.side_grad(&self.doc, d_head, &d_up)?;
        Ok(Objective {
            loss,
            regularization,
            query_grad,
            doc_grad,
        })
    }

    fn side_grad(
        &self,
        side: &Side<T>,
        head: Option<&HeadParameters<T>>,
        upstream: &[Vec<T>],
    ) -> Result<Option<HeadGrad<T>>> {
        let SideState::Trainable(feats) = &side.state else {
            return Ok(None);
        };
        let head = head.expect("trainable side has heads");
        let parts = feats
            .par_iter()
            .zip(upstream.par_iter())
            .map(|(f, up)| {
                let mut g = head.zero_grad();
                if up.iter().any(|&x| x != T::zero()) {
                    backward(side.kind, f, head, up, &mut g)?;
                }
                Ok(g)
            })
            .collect::<Result<Vec<_>>>()?;
        // fixed-order reduction
        let mut total = head.zero_grad();
        for g in &parts {
            total.add_assign(g);
        }
        Ok(Some(total))
    }
}

fn add_regularizer<T: Scalar>(
    reg: RegularizerConfig,
    lambda: T,
    vecs: &[SparseVector<T>],
    up: &mut [Vec<T>],
    vocab_size: usize,
    dense_flops: bool,
) -> Result<T> {
    match reg.kind {
        RegularizerKind::None | RegularizerKind::Topk => Ok(T::zero()),
        _ if lambda == T::zero() => Ok(T::zero()),
        RegularizerKind::Flops => {
            let p = flops_penalty(vecs, vocab_size)?;
            if dense_flops {
                let g = p.dense_grad();
                for u in up.iter_mut() {
                    for (ui, &gi) in u.iter_mut().zip(&g) {
                        *ui += lambda * gi;
                    }
                }
            } else {
                for (u, g) in up.iter_mut().zip(p.sparse_grads(vecs)) {
                    for (t, gi) in g.entries {
                        u[t as usize] += lambda * gi;
                    }
                }
            }
            Ok(lambda * p.value)
        }
        RegularizerKind::L1 | RegularizerKind::L2 => {
            let norm = if reg.kind == RegularizerKind::L1 { Norm::L1 } else { Norm::L2 };
            let n = T::lit(vecs.len() as f64);
            let mut total = T::zero();
            for (vec, u) in vecs.iter().zip(up.iter_mut()) {
                let (val, g) = lp_penalty(vec, norm);
                total += val / n;
                for (t, gi) in g.entries {
                    u[t as usize] += lambda * gi / n;
                }
            }
            Ok(lambda * total)
        }
    }
}

/// Trains the heads of `config` for `opts.steps` full-batch steps.
pub fn train_heads<T: Scalar>(
    config: &MethodConfig,
    data: &TrainingData,
    res: &TrainingResources<'_, T>,
    opts: TrainOptions<T>,
) -> Result<TrainedHeads<T>> {
    if !(opts.lr >= 0.0) || !opts.lr.is_finite() {
        return Err(LsrError::config("training.lr", "must be finite and >= 0"));
    }
    let trainer = Trainer::new(config, data, res, &opts)?;
    let dim = res.doc_embeddings.dim();
    let v = trainer.vocab_size;
    let q_diff = config.query_encoder.is_differentiable();
    let d_diff = config.doc_encoder.is_differentiable();
    let mut q_head = opts
        .init_query
        .clone()
        .or_else(|| q_diff.then(|| config.query_heads.build(dim, v)));
    let mut d_head = if config.shared_heads {
        q_head.clone()
    } else {
        opts.init_doc.clone().or_else(|| d_diff.then(|| config.doc_heads.build(dim, v)))
    };
    let lr = T::lit(opts.lr);
    let mut history = Vec::with_capacity(opts.steps);
    for step in 0..opts.steps {
        let obj = trainer.evaluate(q_head.as_ref(), d_head.as_ref(), step)?;
        if !obj.loss.is_finite() || !obj.regularization.is_finite() {
            return Err(LsrError::Mismatch(format!("objective diverged at step {step}")));
        }
        history.push(StepRecord {
            step,
            loss: obj.loss.as_f64(),
            regularization: obj.regularization.as_f64(),
        });
        if config.shared_heads {
            let mut g = obj.query_grad.or(obj.doc_grad.clone()).expect("shared heads train");
            if let (true, Some(dg)) = (trainer.query.trainable(), &obj.doc_grad) {
                g.add_assign(dg);
            }
            let head = q_head.as_mut().expect("shared heads");
            head.apply_grad(&g, lr);
            d_head = Some(head.clone());
        } else {
            if let (Some(h), Some(g)) = (q_head.as_mut(), &obj.query_grad) {
                h.apply_grad(g, lr);
            }
            if let (Some(h), Some(g)) = (d_head.as_mut(), &obj.doc_grad) {
                h.apply_grad(g, lr);
            }
        }
        log::debug!(
            "{} step {step}: loss {:.6} reg {:.6}",
            config.name,
            obj.loss.as_f64(),
            obj.regularization.as_f64()
        );
    }
    Ok(TrainedHeads {
        query: q_head,
        doc: d_head,
        shared: config.shared_heads,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{LabelLevel, Supervision, TrainingSettings};
    use crate::encoders::ToyBackbone;

    fn text(id: &str, ids: &[u32]) -> TokenizedText {
        TokenizedText::new(id, ids.to_vec())
    }

    /// Query `i` is the single term `i`; its positive is the only doc
    /// containing it.
    fn separable() -> Vec<TrainingTriple> {
        (0..6u32)
            .map(|i| TrainingTriple {
                query: text(&format!("q{i}"), &[i]),
                positive: text(&format!("d{i}"), &[i, 10 + i, 20 + i]),
                negatives: vec![text(&format!("d{}", (i + 1) % 6), &[(i + 1) % 6, 11 + i % 5, 21 + i % 5])],
                teacher_scores: Some((2.0, vec![0.5])),
            })
            .collect()
    }

    fn config(q: EncoderKind, d: EncoderKind) -> MethodConfig {
        MethodConfig {
            name: "t".into(),
            query_encoder: q,
            doc_encoder: d,
            supervision: Supervision {
                loss: LossKind::Contrastive,
                level: LabelLevel::Passage,
                ..Default::default()
            },
            training: TrainingSettings {
                steps: 50,
                lr: 0.05,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn backbone() -> ToyBackbone<f64> {
        ToyBackbone::new(40, 8, 3)
    }

    fn resources(b: &ToyBackbone<f64>) -> TrainingResources<'_, f64> {
        TrainingResources {
            query_embeddings: b,
            doc_embeddings: b,
            stats: None,
            expansions: None,
        }
    }

    #[test]
    fn zero_lr_returns_initial_heads() {
        let b = backbone();
        let cfg = config(EncoderKind::Mlm, EncoderKind::Mlm);
        let out = train_heads(&cfg, &TrainingData::Triples(separable()), &resources(&b), TrainOptions::new(5, 0.0)).unwrap();
        let init: HeadParameters<f64> = cfg.doc_heads.build(8, 40);
        assert_eq!(out.doc.unwrap().flatten(), init.flatten());
        assert_eq!(out.query.unwrap().flatten(), cfg.query_heads.build::<f64>(8, 40).flatten());
        assert_eq!(out.history.len(), 5);
    }

    #[test]
    fn contrastive_loss_decreases_on_separable_task() {
        let b = backbone();
        let cfg = config(EncoderKind::Binary, EncoderKind::Mlp);
        let out = train_heads(&cfg, &TrainingData::Triples(separable()), &resources(&b), TrainOptions::new(50, 0.05)).unwrap();
        let losses: Vec<f64> = out.history.iter().map(|r| r.loss).collect();
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{losses:?}");
        }
        assert!(losses[49] < losses[0]);
    }

    #[test]
    fn non_differentiable_config_rejected() {
        let b = backbone();
        let cfg = config(EncoderKind::Binary, EncoderKind::Binary);
        let err = train_heads(&cfg, &TrainingData::Triples(separable()), &resources(&b), TrainOptions::new(1, 0.1));
        assert!(matches!(err, Err(LsrError::NotDifferentiable(_))));
    }

    #[test]
    fn warmup_is_quadratic() {
        assert_eq!(lambda_scale(0, 30, true), 0.0);
        assert_eq!(lambda_scale(5, 30, true), 0.25);
        assert_eq!(lambda_scale(10, 30, true), 1.0);
        assert_eq!(lambda_scale(29, 30, true), 1.0);
        assert_eq!(lambda_scale(0, 30, false), 1.0);
    }

    #[test]
    fn flops_weight_lowers_query_nnz() {
        let b = backbone();
        let mut cfg = config(EncoderKind::Mlm, EncoderKind::Mlm);
        let mut nnz = Vec::new();
        for lambda in [0.0, 5.0] {
            cfg.regularizer.query = RegularizerConfig::flops(lambda);
            let out = train_heads(&cfg, &TrainingData::Triples(separable()), &resources(&b), TrainOptions::new(200, 0.1)).unwrap();
            let head = out.query.unwrap();
            let mut enc = Encoder::new(EncoderKind::Mlm);
            enc.embeddings = Some(&b);
            enc.heads = Some(&head);
            let total: usize = separable().iter().map(|t| enc.encode(&t.query).unwrap().nnz()).sum();
            nnz.push(total);
        }
        assert!(nnz[0] > nnz[1], "{nnz:?}");
    }

    #[test]
    fn margin_mse_requires_teacher() {
        let b = backbone();
        let mut cfg = config(EncoderKind::Binary, EncoderKind::Mlp);
        cfg.supervision.loss = LossKind::MarginMse;
        let mut triples = separable();
        assert!(Trainer::new(&cfg, &TrainingData::Triples(triples.clone()), &resources(&b), &TrainOptions::new(1, 0.1)).is_ok());
        triples[0].teacher_scores = None;
        assert!(Trainer::new(&cfg, &TrainingData::Triples(triples), &resources(&b), &TrainOptions::new(1, 0.1)).is_err());
    }

    #[test]
    fn frozen_side_is_untouched() {
        let b = backbone();
        let cfg = config(EncoderKind::Mlm, EncoderKind::Mlm);
        let mut opts = TrainOptions::new(10, 0.1);
        opts.freeze_doc = true;
        let out = train_heads(&cfg, &TrainingData::Triples(separable()), &resources(&b), opts).unwrap();
        assert_eq!(out.doc.unwrap().flatten(), cfg.doc_heads.build::<f64>(8, 40).flatten());
        assert_ne!(out.query.unwrap().flatten(), cfg.query_heads.build::<f64>(8, 40).flatten());
    }

    #[test]
    fn term_labels_train_doc_side() {
        let b = backbone();
        let mut cfg = config(EncoderKind::Binary, EncoderKind::Mlp);
        cfg.supervision.loss = LossKind::TermMse;
        cfg.supervision.level = LabelLevel::Term;
        let data = TrainingData::TermLabels(vec![TermLabelExample {
            doc: text("d", &[1, 2, 3]),
            labels: BTreeMap::from([(1, 1.0), (2, 0.0), (3, 0.5)]),
        }]);
        let out = train_heads(&cfg, &data, &resources(&b), TrainOptions::new(100, 0.1)).unwrap();
        assert!(out.history[99].loss < out.history[0].loss);
        assert!(out.query.is_none());
    }
}
