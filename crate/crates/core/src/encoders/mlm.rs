//! Vocabulary-projection heads: every vocabulary term can receive weight.

use crate::corpus::TokenizedText;
use crate::error::{LsrError, Result};
use crate::linalg::{axpy, dot};
use crate::scalar::{sigmoid, Scalar};
use crate::sparse::SparseVector;

use super::bundle::EmbeddingBundle;
use super::features::{FeatureNeeds, TextFeatures};
use super::heads::{HeadGrad, HeadParameters};

/// `q(t) · log(1 + max_j act(h_j·e_i + b_i) · g(t_j))` for every vocabulary term.
pub fn encode_mlm<T: Scalar>(
    text: &TokenizedText,
    emb: &EmbeddingBundle<T>,
    head: &HeadParameters<T>,
) -> Result<SparseVector<T>> {
    head.validate(emb.embedding_dim(), emb.vocab_size())?;
    let f = TextFeatures::new(
        text,
        emb,
        FeatureNeeds {
            mlm_logits: true,
            cls_logits: false,
        },
    )?;
    mlm_forward(&f, head)
}

/// `act(h_0·e_i + b_i)` for every vocabulary term.
pub fn encode_cls_mlm<T: Scalar>(
    text: &TokenizedText,
    emb: &EmbeddingBundle<T>,
    head: &HeadParameters<T>,
) -> Result<SparseVector<T>> {
    head.validate(emb.embedding_dim(), emb.vocab_size())?;
    let f = TextFeatures::new(
        text,
        emb,
        FeatureNeeds {
            mlm_logits: false,
            cls_logits: true,
        },
    )?;
    cls_mlm_forward(&f, head)
}

struct MaxPool<T> {
    value: Vec<T>,
    arg: Vec<usize>,
    importance: Vec<T>,
}

/// Max over positions of the gated activations; ties go to the lowest position.
fn max_pool<T: Scalar>(f: &TextFeatures<T>, head: &HeadParameters<T>) -> Result<MaxPool<T>> {
    let logits = f
        .mlm_logits
        .as_ref()
        .ok_or(LsrError::Empty("mlm logits not computed"))?;
    let v = f.vocab_size;
    let importance: Vec<T> = (0..f.len()).map(|j| head.importance(f.ctx.row(j))).collect();
    let mut value = vec![T::zero(); v];
    let mut arg = vec![usize::MAX; v];
    for (j, &g) in importance.iter().enumerate() {
        let row = logits.row(j);
        for i in 0..v {
            let a = head.activation.apply(row[i] + head.mlm_bias[i]) * g;
            if arg[i] == usize::MAX || a > value[i] {
                value[i] = a;
                arg[i] = j;
            }
        }
    }
    Ok(MaxPool {
        value,
        arg,
        importance,
    })
}

pub fn mlm_forward<T: Scalar>(f: &TextFeatures<T>, head: &HeadParameters<T>) -> Result<SparseVector<T>> {
    let pool = max_pool(f, head)?;
    let q = head.quality(&f.cls);
    Ok(SparseVector::from_sorted(
        pool.value
            .iter()
            .enumerate()
            .map(|(i, &m)| (i as u32, q * m.ln_1p()))
            .collect(),
    ))
}

pub fn mlm_backward<T: Scalar>(
    f: &TextFeatures<T>,
    head: &HeadParameters<T>,
    upstream: &[T],
    grad: &mut HeadGrad<T>,
) -> Result<()> {
    if f.is_empty() {
        return Ok(());
    }
    let logits = f.mlm_logits.as_ref().expect("checked by max_pool");
    let pool = max_pool(f, head)?;
    let q = head.quality(&f.cls);
    let mut dq = T::zero();
    let mut dg = vec![T::zero(); f.len()];
    for i in 0..f.vocab_size {
        let u = upstream[i];
        let m = pool.value[i];
        if u == T::zero() || m <= T::zero() {
            continue;
        }
        let j = pool.arg[i];
        let z = logits.row(j)[i] + head.mlm_bias[i];
        let g = pool.importance[j];
        let dw_dm = q / (T::one() + m);
        grad.mlm_bias[i] += u * dw_dm * g * head.activation.derivative(z);
        dq += u * m.ln_1p();
        dg[j] += u * dw_dm * head.activation.apply(z);
    }
    if head.use_quality_heads {
        let s = sigmoid(dot(&head.quality_weight, &f.cls) + head.quality_bias);
        axpy(dq * s, &f.cls, &mut grad.quality_weight);
        grad.quality_bias += dq * s;
        for (j, &dgj) in dg.iter().enumerate() {
            if dgj == T::zero() {
                continue;
            }
            let h = f.ctx.row(j);
            let s = sigmoid(dot(&head.importance_weight, h) + head.importance_bias);
            axpy(dgj * s, h, &mut grad.importance_weight);
            grad.importance_bias += dgj * s;
        }
    }
    Ok(())
}

pub fn cls_mlm_forward<T: Scalar>(f: &TextFeatures<T>, head: &HeadParameters<T>) -> Result<SparseVector<T>> {
    let logits = f
        .cls_logits
        .as_ref()
        .ok_or(LsrError::Empty("cls logits not computed"))?;
    Ok(SparseVector::from_sorted(
        logits
            .iter()
            .zip(&head.mlm_bias)
            .enumerate()
            .map(|(i, (&z, &b))| (i as u32, head.activation.apply(z + b)))
            .collect(),
    ))
}

pub fn cls_mlm_backward<T: Scalar>(
    f: &TextFeatures<T>,
    head: &HeadParameters<T>,
    upstream: &[T],
    grad: &mut HeadGrad<T>,
) -> Result<()> {
    let logits = f
        .cls_logits
        .as_ref()
        .ok_or(LsrError::Empty("cls logits not computed"))?;
    for (i, &z) in logits.iter().enumerate() {
        let u = upstream[i];
        if u != T::zero() {
            grad.mlm_bias[i] += u * head.activation.derivative(z + head.mlm_bias[i]);
        }
    }
    Ok(())
}
