//! Sparsity control: FLOPs and Lp penalties with analytic gradients, and
//! Top-K pruning.

use serde::{Deserialize, Serialize};

use crate::error::{LsrError, Result};
use crate::scalar::Scalar;
use crate::sparse::{SparseGrad, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    Flops,
    L1,
    L2,
    Topk,
    #[default]
    None,
}

/// One side's sparsity setting.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RegularizerConfig {
    pub kind: RegularizerKind,
    /// Penalty coefficient λ for flops/l1/l2.
    pub weight: f64,
    /// Retained terms for topk.
    pub k: usize,
    /// Optional training-time decay of `k`; inference always uses `k`.
    pub schedule: Option<TopkSchedule>,
}

impl RegularizerConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn flops(weight: f64) -> Self {
        RegularizerConfig {
            kind: RegularizerKind::Flops,
            weight,
            ..Default::default()
        }
    }

    pub fn topk(k: usize) -> Self {
        RegularizerConfig {
            kind: RegularizerKind::Topk,
            k,
            ..Default::default()
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.weight >= 0.0) || !self.weight.is_finite() {
            return Err(LsrError::config(format!("{field}.weight"), "must be finite and >= 0"));
        }
        if self.kind == RegularizerKind::Topk && self.k == 0 && self.schedule.is_none() {
            log::warn!("{field}: topk with k = 0 prunes every vector to zero");
        }
        Ok(())
    }

    /// Inference-time pruning depth, if any.
    pub fn inference_topk(&self) -> Option<usize> {
        (self.kind == RegularizerKind::Topk).then_some(self.k)
    }

    /// Training-time pruning depth at `step` of `total` steps.
    pub fn training_topk(&self, step: usize) -> Option<usize> {
        match (self.kind, self.schedule) {
            (RegularizerKind::Topk, Some(s)) => Some(s.k_at(step)),
            _ => None,
        }
    }
}

/// Linear decay of `k` from `start` to `end` over `steps` training steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopkSchedule {
    pub start: usize,
    pub end: usize,
    pub steps: usize,
}

impl TopkSchedule {
    pub fn k_at(&self, step: usize) -> usize {
        if self.steps == 0 || step >= self.steps {
            return self.end;
        }
        let frac = step as f64 / self.steps as f64;
        let k = self.start as f64 + (self.end as f64 - self.start as f64) * frac;
        k.round() as usize
    }
}

/// Batch FLOPs penalty `Σ_i ā_i²` with `ā_i = (1/N) Σ_j w_j^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlopsPenalty<T> {
    pub value: T,
    /// `ā`, one entry per vocabulary term.
    pub mean_activation: Vec<T>,
    pub batch_size: usize,
}

impl<T: Scalar> FlopsPenalty<T> {
    /// `∂/∂w_j^i = 2ā_i / N`, identical for every vector in the batch.
    ///
    /// The true gradient is dense over the vocabulary; this is it.
    pub fn dense_grad(&self) -> Vec<T> {
        let scale = T::lit(2.0) / T::lit(self.batch_size as f64);
        self.mean_activation.iter().map(|&a| a * scale).collect()
    }

    /// The gradient restricted to each vector's stored (nonzero) positions.
    pub fn sparse_grads(&self, batch: &[SparseVector<T>]) -> Vec<SparseGrad<T>> {
        let scale = T::lit(2.0) / T::lit(self.batch_size as f64);
        batch
            .iter()
            .map(|v| SparseGrad {
                entries: v
                    .terms()
                    .map(|t| (t, self.mean_activation[t as usize] * scale))
                    .collect(),
            })
            .collect()
    }
}

pub fn flops_penalty<T: Scalar>(batch: &[SparseVector<T>], vocab_size: usize) -> Result<FlopsPenalty<T>> {
    if batch.is_empty() {
        return Err(LsrError::Empty("flops penalty batch"));
    }
    let mut mean = vec![T::zero(); vocab_size];
    for v in batch {
        v.check_dim(vocab_size)?;
        for (t, w) in v.iter() {
            mean[t as usize] += w;
        }
    }
    let inv = T::one() / T::lit(batch.len() as f64);
    for m in &mut mean {
        *m *= inv;
    }
    let value = mean.iter().map(|&a| a * a).sum();
    Ok(FlopsPenalty {
        value,
        mean_activation: mean,
        batch_size: batch.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L1,
    L2,
}

/// Lp norm of an output vector and its gradient at the stored entries.
/// The L2 gradient at the zero vector is defined as zero.
pub fn lp_penalty<T: Scalar>(v: &SparseVector<T>, p: Norm) -> (T, SparseGrad<T>) {
    match p {
        Norm::L1 => (
            v.l1(),
            SparseGrad {
                entries: v.terms().map(|t| (t, T::one())).collect(),
            },
        ),
        Norm::L2 => {
            let n = v.l2();
            if n == T::zero() {
                return (n, SparseGrad::default());
            }
            (
                n,
                SparseGrad {
                    entries: v.iter().map(|(t, w)| (t, w / n)).collect(),
                },
            )
        }
    }
}

/// Keeps the `k` largest weights; ties go to the smaller term id.
pub fn topk_prune<T: Scalar>(v: &SparseVector<T>, k: usize) -> SparseVector<T> {
    if k >= v.nnz() {
        return v.clone();
    }
    let mut ranked: Vec<(u32, T)> = v.entries().to_vec();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked.sort_by_key(|&(t, _)| t);
    SparseVector::from_sorted(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(pairs: &[(u32, f64)]) -> SparseVector<f64> {
        SparseVector::new(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn flops_examples() {
        let p = flops_penalty(&[sv(&[(0, 1.0)]), sv(&[(0, 1.0), (1, 2.0)])], 2).unwrap();
        assert!((p.value - 2.0).abs() < 1e-15);
        let p = flops_penalty(&[sv(&[]), sv(&[])], 3).unwrap();
        assert_eq!(p.value, 0.0);
        let p = flops_penalty(&[sv(&[(0, 3.0)])], 1).unwrap();
        assert_eq!(p.value, 9.0);
        assert!(flops_penalty::<f64>(&[], 3).is_err());
        assert!(flops_penalty(&[sv(&[(5, 1.0)])], 3).is_err());
    }

    #[test]
    fn flops_sparse_grad_matches_dense_at_support() {
        let batch = [sv(&[(0, 1.0)]), sv(&[(0, 1.0), (1, 2.0)])];
        let p = flops_penalty(&batch, 3).unwrap();
        let dense = p.dense_grad();
        for (v, g) in batch.iter().zip(p.sparse_grads(&batch)) {
            assert_eq!(g.entries.len(), v.nnz());
            for (t, x) in g.entries {
                assert_eq!(x, dense[t as usize]);
            }
        }
    }

    #[test]
    fn lp_examples() {
        let v = sv(&[(0, 3.0), (1, 4.0)]);
        assert_eq!(lp_penalty(&v, Norm::L2).0, 5.0);
        assert_eq!(lp_penalty(&v, Norm::L1).0, 7.0);
        let z = sv(&[]);
        assert_eq!(lp_penalty(&z, Norm::L1).0, 0.0);
        let (n, g) = lp_penalty(&z, Norm::L2);
        assert_eq!(n, 0.0);
        assert!(g.entries.is_empty());
    }

    #[test]
    fn topk_examples() {
        let v = sv(&[(0, 3.0), (1, 1.0), (2, 2.0)]);
        assert_eq!(topk_prune(&v, 2).entries(), &[(0, 3.0), (2, 2.0)]);
        assert!(topk_prune(&v, 0).is_empty());
        let tie = sv(&[(0, 1.0), (1, 1.0)]);
        assert_eq!(topk_prune(&tie, 1).entries(), &[(0, 1.0)]);
    }

    #[test]
    fn schedule_decays_linearly() {
        let s = TopkSchedule { start: 100, end: 10, steps: 10 };
        assert_eq!(s.k_at(0), 100);
        assert_eq!(s.k_at(5), 55);
        assert_eq!(s.k_at(10), 10);
        assert_eq!(s.k_at(50), 10);
    }

    fn vec_strategy() -> impl Strategy<Value = SparseVector<f64>> {
        prop::collection::btree_map(0u32..32, 0.01f64..5.0, 0..16)
            .prop_map(|m| SparseVector::new(m).unwrap())
    }

    proptest! {
        #[test]
        fn topk_idempotent_and_bounded(v in vec_strategy(), k in 0usize..20) {
            let p = topk_prune(&v, k);
            prop_assert_eq!(p.nnz(), k.min(v.nnz()));
            prop_assert_eq!(topk_prune(&p, k), p.clone());
            let kept_min = p.iter().map(|(_, w)| w).fold(f64::INFINITY, f64::min);
            for (t, w) in v.iter() {
                if p.get(t) == 0.0 {
                    prop_assert!(w <= kept_min);
                }
            }
        }

        #[test]
        fn pruning_never_raises_scores(q in vec_strategy(), d in vec_strategy(), k in 0usize..20) {
            prop_assert!(topk_prune(&q, k).dot(&d) <= q.dot(&d) + 1e-12);
        }

        #[test]
        fn flops_matches_dense_oracle(batch in prop::collection::vec(vec_strategy(), 1..6)) {
            let dim = 32;
            let n = batch.len() as f64;
            let mut oracle = 0.0;
            for i in 0..dim {
                let mean: f64 = batch.iter().map(|v| v.to_dense(dim)[i]).sum::<f64>() / n;
                oracle += mean * mean;
            }
            let p = flops_penalty(&batch, dim).unwrap();
            prop_assert!((p.value - oracle).abs() <= 1e-12 * (1.0 + oracle));
        }

        #[test]
        fn zeroing_an_entry_never_increases_flops(
            batch in prop::collection::vec(vec_strategy(), 1..6),
            which in 0usize..6,
            entry in 0usize..16,
        ) {
            let before = flops_penalty(&batch, 32).unwrap().value;
            let j = which % batch.len();
            let mut after_batch = batch.clone();
            if let Some(&(t, _)) = batch[j].entries().get(entry % batch[j].nnz().max(1)) {
                after_batch[j] = SparseVector::new(batch[j].iter().filter(|&(u, _)| u != t)).unwrap();
            }
            let after = flops_penalty(&after_batch, 32).unwrap().value;
            prop_assert!(after <= before + 1e-12);
        }
    }
}
