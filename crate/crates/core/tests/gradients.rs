//! Head-parameter gradients of the full training objective against central
//! differences, across encoder kinds, losses and regularizers.

mod common;

use std::collections::BTreeMap;

use common::{random_heads, random_text};
use lsr_core::config::{LabelLevel, LossKind, Supervision, TrainingSettings};
use lsr_core::encoders::{Activation, HeadParameters, ToyBackbone};
use lsr_core::regularization::{RegularizerConfig, RegularizerKind};
use lsr_core::supervision::{TermLabelExample, TrainOptions, Trainer, TrainingData, TrainingResources, TrainingTriple};
use lsr_core::{EncoderKind, MethodConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const V: usize = 30;
const DIM: usize = 6;
const H: f64 = 1e-5;

fn triples(rng: &mut ChaCha8Rng, teacher: bool) -> Vec<TrainingTriple> {
    (0..4)
        .map(|i| {
            let mut query = random_text(rng, &format!("q{i}"), V, 4);
            query.token_ids.push(rng.random_range(0..V as u32));
            let mut positive = random_text(rng, &format!("p{i}"), V, 8);
            positive.token_ids.extend_from_slice(&query.token_ids);
            let negatives = (0..2).map(|k| random_text(rng, &format!("n{i}_{k}"), V, 8)).collect();
            TrainingTriple {
                query,
                positive,
                negatives,
                teacher_scores: teacher.then(|| (rng.random_range(2.0..4.0), vec![rng.random_range(0.0..2.0); 2])),
            }
        })
        .collect()
}

fn reg(kind: RegularizerKind, weight: f64) -> RegularizerConfig {
    RegularizerConfig {
        kind,
        weight,
        ..Default::default()
    }
}

fn config(q: EncoderKind, d: EncoderKind, loss: LossKind) -> MethodConfig {
    MethodConfig {
        query_encoder: q,
        doc_encoder: d,
        supervision: Supervision {
            loss,
            level: if loss == LossKind::TermMse { LabelLevel::Term } else { LabelLevel::Passage },
            ..Default::default()
        },
        training: TrainingSettings {
            steps: 10,
            warmup: false,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn heads(rng: &mut ChaCha8Rng, activation: Activation) -> HeadParameters<f64> {
    let mut h = random_heads(rng, DIM, V);
    h.activation = activation;
    h
}

fn objective(t: &Trainer<f64>, q: Option<&HeadParameters<f64>>, d: Option<&HeadParameters<f64>>) -> f64 {
    let o = t.evaluate(q, d, 0).unwrap();
    o.loss + o.regularization
}

fn agree(what: &str, analytic: &[f64], numeric: &[f64]) {
    assert_eq!(analytic.len(), numeric.len());
    let mut nonzero = 0;
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let tol = 1e-4 * a.abs().max(n.abs()) + 1e-8;
        assert!((a - n).abs() <= tol, "{what}: coordinate {i}: analytic {a} vs numeric {n}");
        nonzero += (a.abs() > 1e-6) as usize;
    }
    assert!(nonzero > 0, "{what}: gradient is identically zero");
}

fn numeric(flat: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..flat.len())
        .map(|i| {
            let mut p = flat.to_vec();
            p[i] = flat[i] + H;
            let up = f(&p);
            p[i] = flat[i] - H;
            (up - f(&p)) / (2.0 * H)
        })
        .collect()
}

/// Checks both sides independently (separate heads).
fn check(cfg: &MethodConfig, data: &TrainingData, seed: u64, activation: Activation) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = ToyBackbone::<f64>::new(V, DIM, seed);
    let res = TrainingResources {
        query_embeddings: &b,
        doc_embeddings: &b,
        stats: None,
        expansions: None,
    };
    let t = Trainer::new(cfg, data, &res, &TrainOptions::new(0, 0.0)).unwrap();
    let q = cfg.query_encoder.is_differentiable().then(|| heads(&mut rng, activation));
    let d = cfg.doc_encoder.is_differentiable().then(|| heads(&mut rng, activation));
    let o = t.evaluate(q.as_ref(), d.as_ref(), 0).unwrap();
    if let Some(qh) = &q {
        let num = numeric(&qh.flatten(), |p| {
            let mut h = qh.clone();
            h.unflatten(p);
            objective(&t, Some(&h), d.as_ref())
        });
        agree("query", &o.query_grad.as_ref().unwrap().flatten(), &num);
    }
    if let Some(dh) = &d {
        let num = numeric(&dh.flatten(), |p| {
            let mut h = dh.clone();
            h.unflatten(p);
            objective(&t, q.as_ref(), Some(&h))
        });
        agree("doc", &o.doc_grad.as_ref().unwrap().flatten(), &num);
    }
}

#[test]
fn mlp_contrastive_with_lp_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cfg = config(EncoderKind::Mlp, EncoderKind::Mlp, LossKind::Contrastive);
    cfg.regularizer.query = reg(RegularizerKind::L2, 0.3);
    cfg.regularizer.doc = reg(RegularizerKind::L1, 0.2);
    check(&cfg, &TrainingData::Triples(triples(&mut rng, false)), 1, Activation::Relu);
    check(&cfg, &TrainingData::Triples(triples(&mut rng, false)), 2, Activation::Softplus);
}

#[test]
fn mlm_margin_mse_with_flops() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cfg = config(EncoderKind::Mlm, EncoderKind::Mlm, LossKind::MarginMse);
    cfg.regularizer.query = RegularizerConfig::flops(0.5);
    cfg.regularizer.doc = RegularizerConfig::flops(0.1);
    let data = TrainingData::Triples(triples(&mut rng, true));
    check(&cfg, &data, 3, Activation::Relu);
    check(&cfg, &data, 4, Activation::Softplus);
    cfg.training.dense_flops_gradient = true;
    check(&cfg, &data, 5, Activation::Softplus);
}

#[test]
fn mixed_architectures() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let data = TrainingData::Triples(triples(&mut rng, false));
    for (q, d) in [
        (EncoderKind::Mlp, EncoderKind::Mlm),
        (EncoderKind::Mlm, EncoderKind::Mlp),
        (EncoderKind::Binary, EncoderKind::ClsMlm),
        (EncoderKind::Binary, EncoderKind::Mlm),
    ] {
        let mut cfg = config(q, d, LossKind::Contrastive);
        cfg.regularizer.doc = RegularizerConfig::flops(0.2);
        check(&cfg, &data, 7, Activation::Relu);
        check(&cfg, &data, 8, Activation::Softplus);
    }
}

#[test]
fn term_mse_on_document_heads() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let examples: Vec<TermLabelExample> = (0..5)
        .map(|i| {
            let mut doc = random_text(&mut rng, &format!("d{i}"), V, 8);
            doc.token_ids.push(rng.random_range(0..V as u32));
            let labels: BTreeMap<u32, f64> =
                doc.token_ids.iter().map(|&t| (t, rng.random_range(0.0..1.0))).collect();
            TermLabelExample { doc, labels }
        })
        .collect();
    let data = TrainingData::TermLabels(examples);
    for d in [EncoderKind::Mlp, EncoderKind::Mlm, EncoderKind::ClsMlm] {
        let mut cfg = config(EncoderKind::Binary, d, LossKind::TermMse);
        cfg.regularizer.doc = reg(RegularizerKind::L1, 0.05);
        check(&cfg, &data, 10, Activation::Softplus);
    }
}

#[test]
fn shared_heads_sum_both_sides() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cfg = config(EncoderKind::Mlm, EncoderKind::Mlm, LossKind::Contrastive);
    cfg.shared_heads = true;
    cfg.regularizer.query = RegularizerConfig::flops(0.3);
    cfg.regularizer.doc = RegularizerConfig::flops(0.1);
    let data = TrainingData::Triples(triples(&mut rng, false));
    let b = ToyBackbone::<f64>::new(V, DIM, 11);
    let res = TrainingResources {
        query_embeddings: &b,
        doc_embeddings: &b,
        stats: None,
        expansions: None,
    };
    let t = Trainer::new(&cfg, &data, &res, &TrainOptions::new(0, 0.0)).unwrap();
    let h = heads(&mut rng, Activation::Softplus);
    let o = t.evaluate(Some(&h), Some(&h), 0).unwrap();
    let mut total = o.query_grad.unwrap();
    total.add_assign(o.doc_grad.as_ref().unwrap());
    let num = numeric(&h.flatten(), |p| {
        let mut x = h.clone();
        x.unflatten(p);
        objective(&t, Some(&x), Some(&x))
    });
    agree("shared", &total.flatten(), &num);
}

#[test]
fn frozen_side_contributes_no_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = config(EncoderKind::Mlp, EncoderKind::Mlm, LossKind::Contrastive);
    let data = TrainingData::Triples(triples(&mut rng, false));
    let b = ToyBackbone::<f64>::new(V, DIM, 12);
    let res = TrainingResources {
        query_embeddings: &b,
        doc_embeddings: &b,
        stats: None,
        expansions: None,
    };
    let doc = heads(&mut rng, Activation::Relu);
    let mut opts = TrainOptions::new(0, 0.0);
    opts.init_doc = Some(doc.clone());
    opts.freeze_doc = true;
    let t = Trainer::new(&cfg, &data, &res, &opts).unwrap();
    let q = heads(&mut rng, Activation::Relu);
    let o = t.evaluate(Some(&q), None, 0).unwrap();
    assert!(o.doc_grad.is_none());
    let num = numeric(&q.flatten(), |p| {
        let mut x = q.clone();
        x.unflatten(p);
        objective(&t, Some(&x), None)
    });
    agree("query vs frozen doc", &o.query_grad.unwrap().flatten(), &num);
}
