//! Trainable head parameters sitting on top of the frozen backbone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{LsrError, Result};
use crate::scalar::{sigmoid, softplus, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Softplus,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Softplus => softplus(x),
        }
    }

    /// Derivative; ReLU uses 0 at the kink.
    pub fn derivative<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Softplus => sigmoid(x),
        }
    }
}

/// Initial values for freshly constructed heads.
///
/// The MLM bias starts at -1: on the toy backbone a token's own logit sits
/// near 2 and unrelated logits near 0, so this keeps input terms and drops
/// most cross-term noise before any training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadInit {
    pub mlp_bias: f64,
    pub mlm_bias: f64,
}

impl Default for HeadInit {
    fn default() -> Self {
        HeadInit {
            mlp_bias: 1.0,
            mlm_bias: -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParameters<T> {
    /// `W`, the `d × 1` linear term-weight head.
    pub mlp_weight: Vec<T>,
    pub mlp_bias: T,
    /// Per-vocabulary MLM bias `b_i`.
    pub mlm_bias: Vec<T>,
    /// Passage quality head `q(t)`, read from the CLS embedding.
    pub quality_weight: Vec<T>,
    pub quality_bias: T,
    /// Term importance head `g(t_j)`, read from each position.
    pub importance_weight: Vec<T>,
    pub importance_bias: T,
    pub activation: Activation,
    pub mlp_log_normalize: bool,
    pub use_quality_heads: bool,
}

impl<T: Scalar> HeadParameters<T> {
    /// Heads that start as neutral as possible: the MLP emits the same weight
    /// for every input term, quality heads output 1.
    pub fn new(dim: usize, vocab_size: usize, init: HeadInit) -> Self {
        // softplus(ln(e - 1)) == 1
        let unit = T::lit((std::f64::consts::E - 1.0).ln());
        HeadParameters {
            mlp_weight: vec![T::zero(); dim],
            mlp_bias: T::lit(init.mlp_bias),
            mlm_bias: vec![T::lit(init.mlm_bias); vocab_size],
            quality_weight: vec![T::zero(); dim],
            quality_bias: unit,
            importance_weight: vec![T::zero(); dim],
            importance_bias: unit,
            activation: Activation::Relu,
            mlp_log_normalize: true,
            use_quality_heads: false,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.mlp_weight.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.mlm_bias.len()
    }

    pub fn validate(&self, dim: usize, vocab_size: usize) -> Result<()> {
        let checks = [
            ("mlp_weight", self.mlp_weight.len(), dim),
            ("quality_weight", self.quality_weight.len(), dim),
            ("importance_weight", self.importance_weight.len(), dim),
            ("mlm_bias", self.mlm_bias.len(), vocab_size),
        ];
        for (what, actual, expected) in checks {
            if actual != expected {
                return Err(LsrError::Shape {
                    what,
                    expected,
                    actual,
                });
            }
        }
        Ok(())
    }

    /// `q(t)` given the CLS embedding; 1 when quality heads are disabled.
    pub fn quality(&self, cls: &[T]) -> T {
        if self.use_quality_heads {
            softplus(crate::linalg::dot(&self.quality_weight, cls) + self.quality_bias)
        } else {
            T::one()
        }
    }

    /// `g(t_j)` given a position embedding; 1 when quality heads are disabled.
    pub fn importance(&self, h: &[T]) -> T {
        if self.use_quality_heads {
            softplus(crate::linalg::dot(&self.importance_weight, h) + self.importance_bias)
        } else {
            T::one()
        }
    }

    pub fn zero_grad(&self) -> HeadGrad<T> {
        HeadGrad {
            mlp_weight: vec![T::zero(); self.mlp_weight.len()],
            mlp_bias: T::zero(),
            mlm_bias: vec![T::zero(); self.mlm_bias.len()],
            quality_weight: vec![T::zero(); self.quality_weight.len()],
            quality_bias: T::zero(),
            importance_weight: vec![T::zero(); self.importance_weight.len()],
            importance_bias: T::zero(),
        }
    }

    /// Gradient-descent step `θ ← θ − lr·∇`.
    pub fn apply_grad(&mut self, grad: &HeadGrad<T>, lr: T) {
        let step = |p: &mut [T], g: &[T]| {
            for (pi, &gi) in p.iter_mut().zip(g) {
                *pi -= lr * gi;
            }
        };
        step(&mut self.mlp_weight, &grad.mlp_weight);
        self.mlp_bias -= lr * grad.mlp_bias;
        step(&mut self.mlm_bias, &grad.mlm_bias);
        step(&mut self.quality_weight, &grad.quality_weight);
        self.quality_bias -= lr * grad.quality_bias;
        step(&mut self.importance_weight, &grad.importance_weight);
        self.importance_bias -= lr * grad.importance_bias;
    }

    /// All trainable values in a fixed order (used by gradient checks).
    pub fn flatten(&self) -> Vec<T> {
        let mut v = self.mlp_weight.clone();
        v.push(self.mlp_bias);
        v.extend_from_slice(&self.mlm_bias);
        v.extend_from_slice(&self.quality_weight);
        v.push(self.quality_bias);
        v.extend_from_slice(&self.importance_weight);
        v.push(self.importance_bias);
        v
    }

    pub fn unflatten(&mut self, flat: &[T]) {
        let mut it = flat.iter().copied();
        let mut fill = |dst: &mut [T]| dst.iter_mut().for_each(|x| *x = it.next().unwrap());
        fill(&mut self.mlp_weight);
        fill(std::slice::from_mut(&mut self.mlp_bias));
        fill(&mut self.mlm_bias);
        fill(&mut self.quality_weight);
        fill(std::slice::from_mut(&mut self.quality_bias));
        fill(&mut self.importance_weight);
        fill(std::slice::from_mut(&mut self.importance_bias));
    }

    pub fn to_json(&self) -> Result<String> {
        let file = HeadFile::from_heads(self);
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: HeadFile = serde_json::from_str(s)?;
        file.into_heads()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrad<T> {
    pub mlp_weight: Vec<T>,
    pub mlp_bias: T,
    pub mlm_bias: Vec<T>,
    pub quality_weight: Vec<T>,
    pub quality_bias: T,
    pub importance_weight: Vec<T>,
    pub importance_bias: T,
}

impl<T: Scalar> HeadGrad<T> {
    pub fn add_assign(&mut self, other: &HeadGrad<T>) {
        let add = |a: &mut [T], b: &[T]| a.iter_mut().zip(b).for_each(|(x, &y)| *x += y);
        add(&mut self.mlp_weight, &other.mlp_weight);
        self.mlp_bias += other.mlp_bias;
        add(&mut self.mlm_bias, &other.mlm_bias);
        add(&mut self.quality_weight, &other.quality_weight);
        self.quality_bias += other.quality_bias;
        add(&mut self.importance_weight, &other.importance_weight);
        self.importance_bias += other.importance_bias;
    }

    pub fn flatten(&self) -> Vec<T> {
        let mut v = self.mlp_weight.clone();
        v.push(self.mlp_bias);
        v.extend_from_slice(&self.mlm_bias);
        v.extend_from_slice(&self.quality_weight);
        v.push(self.quality_bias);
        v.extend_from_slice(&self.importance_weight);
        v.push(self.importance_bias);
        v
    }
}

/// On-disk head record: named tensors with explicit shapes.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct HeadFile {
    format: String,
    activation: Activation,
    mlp_log_normalize: bool,
    use_quality_heads: bool,
    tensors: BTreeMap<String, Tensor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

const HEAD_FORMAT: &str = "lsr-heads/v1";

impl HeadFile {
    fn from_heads<T: Scalar>(h: &HeadParameters<T>) -> Self {
        let t = |shape: Vec<usize>, data: &[T]| Tensor {
            shape,
            data: data.iter().map(|x| x.as_f64()).collect(),
        };
        let d = h.embedding_dim();
        let mut tensors = BTreeMap::new();
        tensors.insert("W".into(), t(vec![d, 1], &h.mlp_weight));
        tensors.insert("b".into(), t(vec![1], &[h.mlp_bias]));
        tensors.insert("b_i".into(), t(vec![h.vocab_size()], &h.mlm_bias));
        tensors.insert("quality_weight".into(), t(vec![d, 1], &h.quality_weight));
        tensors.insert("quality_bias".into(), t(vec![1], &[h.quality_bias]));
        tensors.insert("importance_weight".into(), t(vec![d, 1], &h.importance_weight));
        tensors.insert("importance_bias".into(), t(vec![1], &[h.importance_bias]));
        HeadFile {
            format: HEAD_FORMAT.into(),
            activation: h.activation,
            mlp_log_normalize: h.mlp_log_normalize,
            use_quality_heads: h.use_quality_heads,
            tensors,
        }
    }

    fn into_heads<T: Scalar>(mut self) -> Result<HeadParameters<T>> {
        if self.format != HEAD_FORMAT {
            return Err(LsrError::Format(format!("unknown head format `{}`", self.format)));
        }
        let mut take = |name: &str| -> Result<Vec<T>> {
            let t = self
                .tensors
                .remove(name)
                .ok_or_else(|| LsrError::Format(format!("missing tensor `{name}`")))?;
            let n: usize = t.shape.iter().product();
            if n != t.data.len() {
                return Err(LsrError::Shape {
                    what: "head tensor",
                    expected: n,
                    actual: t.data.len(),
                });
            }
            Ok(t.data.into_iter().map(T::lit).collect())
        };
        let scalar = |v: Vec<T>| -> Result<T> {
            match v.as_slice() {
                [x] => Ok(*x),
                _ => Err(LsrError::Shape {
                    what: "scalar head tensor",
                    expected: 1,
                    actual: v.len(),
                }),
            }
        };
        let heads = HeadParameters {
            mlp_weight: take("W")?,
            mlp_bias: scalar(take("b")?)?,
            mlm_bias: take("b_i")?,
            quality_weight: take("quality_weight")?,
            quality_bias: scalar(take("quality_bias")?)?,
            importance_weight: take("importance_weight")?,
            importance_bias: scalar(take("importance_bias")?)?,
            activation: self.activation,
            mlp_log_normalize: self.mlp_log_normalize,
            use_quality_heads: self.use_quality_heads,
        };
        let d = heads.embedding_dim();
        heads.validate(d, heads.vocab_size())?;
        Ok(heads)
    }
}
