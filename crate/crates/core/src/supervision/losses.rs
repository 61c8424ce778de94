//! Training losses with analytic gradients.

use std::collections::BTreeMap;

use crate::error::{LsrError, Result};
use crate::scalar::Scalar;
use crate::sparse::{SparseGrad, SparseVector};
use crate::vocab::TermId;

/// Loss over one positive score and its negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreLoss<T> {
    pub value: T,
    pub d_pos: T,
    pub d_negs: Vec<T>,
}

/// Mean squared error between predicted weights and term labels, over the
/// labeled terms only. The gradient is reported at every labeled term.
pub fn term_mse_loss<T: Scalar>(
    pred: &SparseVector<T>,
    labels: &BTreeMap<TermId, T>,
) -> Result<(T, SparseGrad<T>)> {
    if labels.is_empty() {
        return Err(LsrError::Empty("term labels"));
    }
    let n = T::lit(labels.len() as f64);
    let mut value = T::zero();
    let mut entries = Vec::with_capacity(labels.len());
    for (&t, &y) in labels {
        let diff = pred.get(t) - y;
        value += diff * diff;
        entries.push((t, T::lit(2.0) * diff / n));
    }
    Ok((value / n, SparseGrad { entries }))
}

/// `-log softmax(s⁺)` over `[s⁺, s⁻…]`, shifted by the max for stability.
pub fn contrastive_nll<T: Scalar>(pos: T, negs: &[T]) -> Result<ScoreLoss<T>> {
    if negs.is_empty() {
        return Err(LsrError::Empty("contrastive negatives"));
    }
    let m = negs.iter().fold(pos, |m, &s| m.max(s));
    let e_pos = (pos - m).exp();
    let e_negs: Vec<T> = negs.iter().map(|&s| (s - m).exp()).collect();
    let z = e_pos + e_negs.iter().copied().sum::<T>();
    let value = z.ln() - (pos - m);
    Ok(ScoreLoss {
        value,
        d_pos: e_pos / z - T::one(),
        d_negs: e_negs.into_iter().map(|e| e / z).collect(),
    })
}

/// Mean squared difference of student and teacher margins; gradient with
/// respect to each student margin.
pub fn margin_mse_loss<T: Scalar>(student: &[T], teacher: &[T]) -> Result<(T, Vec<T>)> {
    if student.len() != teacher.len() {
        return Err(LsrError::LengthMismatch(format!(
            "{} student margins vs {} teacher margins",
            student.len(),
            teacher.len()
        )));
    }
    if student.is_empty() {
        return Err(LsrError::Empty("margins"));
    }
    let n = T::lit(student.len() as f64);
    let mut value = T::zero();
    let grads = student
        .iter()
        .zip(teacher)
        .map(|(&s, &t)| {
            let d = s - t;
            value += d * d;
            T::lit(2.0) * d / n
        })
        .collect();
    Ok((value / n, grads))
}

/// MarginMSE over `(s⁺ - s⁻_k)` pairs, with gradients pushed back to the scores.
pub fn margin_mse_scores<T: Scalar>(
    pos: T,
    negs: &[T],
    teacher_pos: T,
    teacher_negs: &[T],
) -> Result<ScoreLoss<T>> {
    let student: Vec<T> = negs.iter().map(|&s| pos - s).collect();
    let teacher: Vec<T> = teacher_negs.iter().map(|&s| teacher_pos - s).collect();
    let (value, g) = margin_mse_loss(&student, &teacher)?;
    Ok(ScoreLoss {
        value,
        d_pos: g.iter().copied().sum(),
        d_negs: g.into_iter().map(|x| -x).collect(),
    })
}
