//! Sparse non-negative term-weight vectors.

use std::collections::BTreeMap;

use crate::error::{LsrError, Result};
use crate::scalar::Scalar;
use crate::vocab::TermId;

/// A vocabulary-dimension vector of strictly positive weights, stored as
/// `(term, weight)` pairs sorted by term id. Zeros are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector<T> {
    entries: Vec<(TermId, T)>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn zero() -> Self {
        SparseVector { entries: Vec::new() }
    }

    /// Builds a vector from arbitrary `(term, weight)` pairs. Duplicate terms
    /// are summed, zeros dropped; negative or non-finite weights are rejected.
    pub fn new<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (TermId, T)>,
    {
        let mut acc: BTreeMap<TermId, T> = BTreeMap::new();
        for (term, w) in pairs {
            if !w.is_finite() || w < T::zero() {
                return Err(LsrError::InvalidWeight {
                    term,
                    weight: w.to_f64().unwrap_or(f64::NAN),
                });
            }
            *acc.entry(term).or_insert_with(T::zero) += w;
        }
        Ok(SparseVector {
            entries: acc.into_iter().filter(|&(_, w)| w > T::zero()).collect(),
        })
    }

    /// Builds from a dense array, dropping non-positive entries.
    pub fn from_dense(dense: &[T]) -> Self {
        SparseVector {
            entries: dense
                .iter()
                .enumerate()
                .filter(|&(_, &w)| w > T::zero())
                .map(|(i, &w)| (i as TermId, w))
                .collect(),
        }
    }

    /// Caller guarantees ascending unique ids; non-positive weights are still
    /// filtered out.
    pub(crate) fn from_sorted(entries: Vec<(TermId, T)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        SparseVector {
            entries: entries.into_iter().filter(|&(_, w)| w > T::zero()).collect(),
        }
    }

    pub fn entries(&self) -> &[(TermId, T)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, T)> + '_ {
        self.entries.iter().copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = TermId> + '_ {
        self.entries.iter().map(|&(t, _)| t)
    }

    pub fn get(&self, term: TermId) -> T {
        self.entries
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn check_dim(&self, vocab_size: usize) -> Result<()> {
        match self.entries.last() {
            Some(&(id, _)) if id as usize >= vocab_size => {
                Err(LsrError::TermOutOfRange { id, vocab_size })
            }
            _ => Ok(()),
        }
    }

    /// Dot product over the shared support, accumulated in ascending term order.
    pub fn dot(&self, other: &SparseVector<T>) -> T {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut sum = T::zero();
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    pub fn add(&self, other: &SparseVector<T>) -> SparseVector<T> {
        let mut out = Vec::with_capacity(self.nnz() + other.nnz());
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push(b[j]);
                j += 1;
            } else {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
        SparseVector { entries: out }
    }

    /// Scales by a non-negative factor; negative factors are clamped to zero.
    pub fn scale(&self, factor: T) -> SparseVector<T> {
        let factor = factor.max(T::zero());
        SparseVector::from_sorted(self.entries.iter().map(|&(t, w)| (t, w * factor)).collect())
    }

    pub fn to_dense(&self, dim: usize) -> Vec<T> {
        let mut dense = vec![T::zero(); dim];
        for &(t, w) in &self.entries {
            dense[t as usize] = w;
        }
        dense
    }

    pub fn l1(&self) -> T {
        self.entries.iter().map(|&(_, w)| w).sum()
    }

    pub fn l2(&self) -> T {
        self.entries.iter().map(|&(_, w)| w * w).sum::<T>().sqrt()
    }

    pub fn max_weight(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |m, &(_, w)| if w > m { w } else { m })
    }

    /// Converts the scalar type (e.g. `f32` to `f64`).
    pub fn cast<U: Scalar>(&self) -> SparseVector<U> {
        SparseVector::from_sorted(
            self.entries
                .iter()
                .map(|&(t, w)| (t, U::lit(w.as_f64())))
                .collect(),
        )
    }
}

impl<T: Scalar> FromIterator<(TermId, T)> for SparseVector<T> {
    /// Panics on negative weights; use [`SparseVector::new`] for fallible input.
    fn from_iter<I: IntoIterator<Item = (TermId, T)>>(iter: I) -> Self {
        SparseVector::new(iter).expect("non-negative weights")
    }
}

/// A signed sparse gradient with respect to the entries of a [`SparseVector`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseGrad<T> {
    pub entries: Vec<(TermId, T)>,
}

impl<T: Scalar> SparseGrad<T> {
    pub fn get(&self, term: TermId) -> T {
        self.entries
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn to_dense(&self, dim: usize) -> Vec<T> {
        let mut dense = vec![T::zero(); dim];
        for &(t, g) in &self.entries {
            dense[t as usize] += g;
        }
        dense
    }
}
