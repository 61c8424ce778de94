//! Contextualized embeddings consumed by the neural heads, and a
//! deterministic stand-in backbone for tests and the synthetic task.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::TokenizedText;
use crate::error::{LsrError, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::vocab::TermId;

/// Per-text backbone output plus the shared vocabulary input embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBundle<T> {
    /// `L × d`, one row per input position.
    pub ctx_embeddings: Matrix<T>,
    /// The `[CLS]` embedding `h_0`.
    pub cls_embedding: Vec<T>,
    /// `|V| × d`, shared across texts.
    pub input_embeddings: Arc<Matrix<T>>,
}

impl<T: Scalar> EmbeddingBundle<T> {
    pub fn embedding_dim(&self) -> usize {
        self.cls_embedding.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.input_embeddings.rows()
    }

    pub fn validate_for(&self, text: &TokenizedText) -> Result<()> {
        let d = self.embedding_dim();
        if self.ctx_embeddings.rows() != text.len() {
            return Err(LsrError::Shape {
                what: "ctx_embeddings rows vs text length",
                expected: text.len(),
                actual: self.ctx_embeddings.rows(),
            });
        }
        if self.ctx_embeddings.cols() != d {
            return Err(LsrError::Shape {
                what: "ctx_embeddings dim",
                expected: d,
                actual: self.ctx_embeddings.cols(),
            });
        }
        if self.input_embeddings.cols() != d {
            return Err(LsrError::Shape {
                what: "input_embeddings dim",
                expected: d,
                actual: self.input_embeddings.cols(),
            });
        }
        text.validate(self.vocab_size())
    }
}

const NO_TOKEN: u64 = u64::MAX;

/// splitmix64 finalizer; stable across platforms and releases.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn stable_hash(parts: &[u64]) -> u64 {
    parts.iter().fold(0x51_7C_C1_B7_27_22_0A_95u64, |h, &p| mix(h ^ mix(p)))
}

fn normal_vector<T: Scalar>(key: u64, dim: usize) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let scale = 1.0 / (dim as f64).sqrt();
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::lit(z * scale)
        })
        .collect()
}

/// Mixing weights of the toy contextual embedding
/// `h_j = s·e(t_j) + n·(e(t_{j-1}) + e(t_{j+1})) + r·noise(t_{j-1}, t_j, t_{j+1}, j mod 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyMixing {
    pub self_weight: f64,
    pub neighbor_weight: f64,
    pub noise_weight: f64,
}

impl Default for ToyMixing {
    fn default() -> Self {
        ToyMixing {
            self_weight: 2.0,
            neighbor_weight: 0.5,
            noise_weight: 0.5,
        }
    }
}

/// Deterministic stand-in for a transformer backbone. Input embeddings are
/// generated once and shared by every bundle it produces.
#[derive(Debug, Clone)]
pub struct ToyBackbone<T> {
    dim: usize,
    seed: u64,
    mixing: ToyMixing,
    input_embeddings: Arc<Matrix<T>>,
}

impl<T: Scalar> ToyBackbone<T> {
    pub fn new(vocab_size: usize, dim: usize, seed: u64) -> Self {
        Self::with_mixing(vocab_size, dim, seed, ToyMixing::default())
    }

    pub fn with_mixing(vocab_size: usize, dim: usize, seed: u64, mixing: ToyMixing) -> Self {
        let mut data = Vec::with_capacity(vocab_size * dim);
        for i in 0..vocab_size {
            data.extend(normal_vector::<T>(stable_hash(&[1, i as u64, seed]), dim));
        }
        let input_embeddings = Arc::new(Matrix::from_vec(vocab_size, dim, data).expect("shape"));
        ToyBackbone {
            dim,
            seed,
            mixing,
            input_embeddings,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.input_embeddings.rows()
    }

    pub fn input_embeddings(&self) -> &Arc<Matrix<T>> {
        &self.input_embeddings
    }

    pub fn embed(&self, text: &TokenizedText) -> EmbeddingBundle<T> {
        let d = self.dim;
        let ids = &text.token_ids;
        let tok = |j: isize| -> u64 {
            if j < 0 || j as usize >= ids.len() {
                NO_TOKEN
            } else {
                ids[j as usize] as u64
            }
        };
        let emb = |t: u64| -> Option<&[T]> {
            (t != NO_TOKEN).then(|| self.input_embeddings.row(t as usize))
        };
        let (s, n, r) = (
            T::lit(self.mixing.self_weight),
            T::lit(self.mixing.neighbor_weight),
            T::lit(self.mixing.noise_weight),
        );
        let mut ctx = Matrix::zeros(ids.len(), d);
        for j in 0..ids.len() {
            let (prev, cur, next) = (tok(j as isize - 1), tok(j as isize), tok(j as isize + 1));
            let noise: Vec<T> =
                normal_vector(stable_hash(&[2, prev, cur, next, (j % 2) as u64, self.seed]), d);
            let row = ctx.row_mut(j);
            for k in 0..d {
                let mut v = s * emb(cur).map_or(T::zero(), |e| e[k]) + r * noise[k];
                v += n * emb(prev).map_or(T::zero(), |e| e[k]);
                v += n * emb(next).map_or(T::zero(), |e| e[k]);
                row[k] = v;
            }
        }
        let mut cls = vec![T::zero(); d];
        if !ids.is_empty() {
            let inv = T::one() / T::lit(ids.len() as f64);
            for j in 0..ids.len() {
                for (c, &h) in cls.iter_mut().zip(ctx.row(j)) {
                    *c += h * inv;
                }
            }
        }
        EmbeddingBundle {
            ctx_embeddings: ctx,
            cls_embedding: cls,
            input_embeddings: Arc::clone(&self.input_embeddings),
        }
    }
}

/// One-shot form of [`ToyBackbone::embed`]. Regenerates the input embeddings
/// on every call; build a [`ToyBackbone`] once when embedding many texts.
pub fn toy_backbone<T: Scalar>(
    text: &TokenizedText,
    vocab_size: usize,
    dim: usize,
    seed: u64,
) -> EmbeddingBundle<T> {
    ToyBackbone::new(vocab_size, dim, seed).embed(text)
}

/// Source of embedding bundles for a text (toy backbone or precomputed dumps).
pub trait EmbeddingSource<T: Scalar>: Sync {
    fn bundle(&self, text: &TokenizedText) -> Result<EmbeddingBundle<T>>;
    fn vocab_size(&self) -> usize;
    fn dim(&self) -> usize;
}

impl<T: Scalar> EmbeddingSource<T> for ToyBackbone<T> {
    fn bundle(&self, text: &TokenizedText) -> Result<EmbeddingBundle<T>> {
        text.validate(self.vocab_size())?;
        Ok(self.embed(text))
    }

    fn vocab_size(&self) -> usize {
        ToyBackbone::vocab_size(self)
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

/// Precomputed per-text embeddings keyed by text id, e.g. dumped by an
/// external transformer.
#[derive(Debug, Clone)]
pub struct PrecomputedEmbeddings<T> {
    pub input_embeddings: Arc<Matrix<T>>,
    pub records: std::collections::HashMap<String, (Matrix<T>, Option<Vec<T>>)>,
}

impl<T: Scalar> EmbeddingSource<T> for PrecomputedEmbeddings<T> {
    fn bundle(&self, text: &TokenizedText) -> Result<EmbeddingBundle<T>> {
        let (h, h0) = self.records.get(&text.doc_id).ok_or_else(|| {
            LsrError::Mismatch(format!("no embeddings for text `{}`", text.doc_id))
        })?;
        let d = self.input_embeddings.cols();
        let cls = match h0 {
            Some(v) => v.clone(),
            None => {
                let mut c = vec![T::zero(); d];
                if h.rows() > 0 {
                    let inv = T::one() / T::lit(h.rows() as f64);
                    for j in 0..h.rows() {
                        for (ci, &x) in c.iter_mut().zip(h.row(j)) {
                            *ci += x * inv;
                        }
                    }
                }
                c
            }
        };
        let bundle = EmbeddingBundle {
            ctx_embeddings: h.clone(),
            cls_embedding: cls,
            input_embeddings: Arc::clone(&self.input_embeddings),
        };
        bundle.validate_for(text)?;
        Ok(bundle)
    }

    fn vocab_size(&self) -> usize {
        self.input_embeddings.rows()
    }

    fn dim(&self) -> usize {
        self.input_embeddings.cols()
    }
}

/// Permutes the positions of a text and its embedding rows identically.
pub fn permute_positions<T: Scalar>(
    text: &TokenizedText,
    bundle: &EmbeddingBundle<T>,
    perm: &[usize],
) -> (TokenizedText, EmbeddingBundle<T>) {
    let ids: Vec<TermId> = perm.iter().map(|&p| text.token_ids[p]).collect();
    (
        TokenizedText::new(text.doc_id.clone(), ids),
        EmbeddingBundle {
            ctx_embeddings: bundle.ctx_embeddings.select_rows(perm),
            cls_embedding: bundle.cls_embedding.clone(),
            input_embeddings: Arc::clone(&bundle.input_embeddings),
        },
    )
}
