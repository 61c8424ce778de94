//! Per-token linear head: weights only the terms present in the input.

use crate::corpus::TokenizedText;
use crate::error::Result;
use crate::linalg::{axpy, dot};
use crate::scalar::Scalar;
use crate::sparse::SparseVector;

use super::bundle::EmbeddingBundle;
use super::features::{FeatureNeeds, TextFeatures};
use super::heads::{HeadGrad, HeadParameters};

/// `Σ_{j: t_j = i} log(1 + act(h_j·W + b))`, or the plain sum of activations
/// when `mlp_log_normalize` is off.
pub fn encode_mlp<T: Scalar>(
    text: &TokenizedText,
    emb: &EmbeddingBundle<T>,
    head: &HeadParameters<T>,
) -> Result<SparseVector<T>> {
    head.validate(emb.embedding_dim(), emb.vocab_size())?;
    let f = TextFeatures::new(text, emb, FeatureNeeds::default())?;
    Ok(mlp_forward(&f, head))
}

fn contribution<T: Scalar>(head: &HeadParameters<T>, pre: T) -> T {
    let a = head.activation.apply(pre);
    if head.mlp_log_normalize {
        a.ln_1p()
    } else {
        a
    }
}

pub fn mlp_forward<T: Scalar>(f: &TextFeatures<T>, head: &HeadParameters<T>) -> SparseVector<T> {
    let mut pairs: Vec<(u32, T)> = f
        .token_ids
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let pre = dot(f.ctx.row(j), &head.mlp_weight) + head.mlp_bias;
            (t, contribution(head, pre))
        })
        .collect();
    // Stable sort keeps position order within a term, so sums are reproducible.
    pairs.sort_by_key(|&(t, _)| t);
    let mut merged: Vec<(u32, T)> = Vec::with_capacity(pairs.len());
    for (t, c) in pairs {
        match merged.last_mut() {
            Some((last, acc)) if *last == t => *acc += c,
            _ => merged.push((t, c)),
        }
    }
    SparseVector::from_sorted(merged)
}

/// Accumulates `Σ_i upstream[i] · ∂w_i/∂θ` into `grad`.
pub fn mlp_backward<T: Scalar>(
    f: &TextFeatures<T>,
    head: &HeadParameters<T>,
    upstream: &[T],
    grad: &mut HeadGrad<T>,
) {
    for (j, &t) in f.token_ids.iter().enumerate() {
        let u = upstream[t as usize];
        if u == T::zero() {
            continue;
        }
        let h = f.ctx.row(j);
        let pre = dot(h, &head.mlp_weight) + head.mlp_bias;
        let mut d = head.activation.derivative(pre);
        if head.mlp_log_normalize {
            d /= T::one() + head.activation.apply(pre);
        }
        let coef = u * d;
        axpy(coef, h, &mut grad.mlp_weight);
        grad.mlp_bias += coef;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::heads::HeadInit;
    use crate::linalg::Matrix;
    use std::sync::Arc;

    fn bundle(h: &[f64], vocab: usize) -> EmbeddingBundle<f64> {
        EmbeddingBundle {
            ctx_embeddings: Matrix::from_vec(h.len(), 1, h.to_vec()).unwrap(),
            cls_embedding: vec![0.0],
            input_embeddings: Arc::new(Matrix::zeros(vocab, 1)),
        }
    }

    fn unit_head(vocab: usize) -> HeadParameters<f64> {
        let mut head = HeadParameters::new(1, vocab, HeadInit::default());
        head.mlp_weight = vec![1.0];
        head.mlp_bias = 0.0;
        head
    }

    #[test]
    fn relu_drops_negative_term() {
        let text = TokenizedText::new("d", vec![0, 1]);
        let v = encode_mlp(&text, &bundle(&[2.0, -3.0], 2), &unit_head(2)).unwrap();
        assert_eq!(v.nnz(), 1);
        assert!((v.get(0) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn repeated_term_sums() {
        let text = TokenizedText::new("d", vec![0, 0]);
        let v = encode_mlp(&text, &bundle(&[2.0, 2.0], 1), &unit_head(1)).unwrap();
        assert!((v.get(0) - 2.0 * 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn empty_text() {
        let text = TokenizedText::new("d", vec![]);
        let v = encode_mlp(&text, &bundle(&[], 3), &unit_head(3)).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn without_log_normalization() {
        let text = TokenizedText::new("d", vec![0, 0]);
        let mut head = unit_head(1);
        head.mlp_log_normalize = false;
        let v = encode_mlp(&text, &bundle(&[2.0, 0.5], 1), &head).unwrap();
        assert!((v.get(0) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let text = TokenizedText::new("d", vec![0, 1]);
        assert!(encode_mlp(&text, &bundle(&[1.0], 2), &unit_head(2)).is_err());
    }
}
