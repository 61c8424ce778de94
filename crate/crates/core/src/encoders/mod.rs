//! Sparse encoders: text in, non-negative vocabulary-sized vector out.
//!
//! | kind       | expansion | weighting |
//! |------------|-----------|-----------|
//! | `binary`   | no        | no        |
//! | `mlp`      | no        | yes       |
//! | `exp_mlp`  | external  | yes       |
//! | `mlm`      | yes       | yes       |
//! | `cls_mlm`  | yes       | yes       |
//!
//! plus the BM25 query/document pair. The neural kinds read frozen backbone
//! features and trainable [`HeadParameters`]; each has a matching backward
//! pass used by the head trainer.

mod bm25;
mod bundle;
mod features;
mod heads;
mod lexical;
mod mlm;
mod mlp;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use bm25::{encode_bm25_doc, encode_bm25_query, idf, Bm25Params};
pub use bundle::{
    permute_positions, toy_backbone, EmbeddingBundle, EmbeddingSource, PrecomputedEmbeddings,
    ToyBackbone, ToyMixing,
};
pub use features::{FeatureNeeds, TextFeatures};
pub use heads::{Activation, HeadGrad, HeadInit, HeadParameters};
pub use lexical::{encode_binary, expand_text};
pub use mlm::{cls_mlm_backward, cls_mlm_forward, encode_cls_mlm, encode_mlm, mlm_backward, mlm_forward};
pub use mlp::{encode_mlp, mlp_backward, mlp_forward};

use crate::corpus::{CorpusStats, TokenizedText};
use crate::error::{LsrError, Result};
use crate::regularization::topk_prune;
use crate::scalar::Scalar;
use crate::sparse::SparseVector;
use crate::vocab::TermId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Binary,
    Mlp,
    ExpMlp,
    Mlm,
    ClsMlm,
    Bm25Query,
    Bm25Doc,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 7] = [
        EncoderKind::Binary,
        EncoderKind::Mlp,
        EncoderKind::ExpMlp,
        EncoderKind::Mlm,
        EncoderKind::ClsMlm,
        EncoderKind::Bm25Query,
        EncoderKind::Bm25Doc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Binary => "binary",
            EncoderKind::Mlp => "mlp",
            EncoderKind::ExpMlp => "exp_mlp",
            EncoderKind::Mlm => "mlm",
            EncoderKind::ClsMlm => "cls_mlm",
            EncoderKind::Bm25Query => "bm25_query",
            EncoderKind::Bm25Doc => "bm25_doc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_differentiable(self) -> bool {
        matches!(
            self,
            EncoderKind::Mlp | EncoderKind::ExpMlp | EncoderKind::Mlm | EncoderKind::ClsMlm
        )
    }

    /// Whether outputs are confined to the (possibly pre-expanded) input terms.
    pub fn confined_to_input(self) -> bool {
        !matches!(self, EncoderKind::Mlm | EncoderKind::ClsMlm)
    }

    pub fn needs_embeddings(self) -> bool {
        self.is_differentiable()
    }

    pub fn needs_expansions(self) -> bool {
        self == EncoderKind::ExpMlp
    }

    pub fn feature_needs(self) -> FeatureNeeds {
        FeatureNeeds {
            mlm_logits: self == EncoderKind::Mlm,
            cls_logits: self == EncoderKind::ClsMlm,
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Forward pass of a neural head on precomputed features.
pub fn forward<T: Scalar>(
    kind: EncoderKind,
    f: &TextFeatures<T>,
    head: &HeadParameters<T>,
) -> Result<SparseVector<T>> {
    match kind {
        EncoderKind::Mlp | EncoderKind::ExpMlp => Ok(mlp_forward(f, head)),
        EncoderKind::Mlm => mlm_forward(f, head),
        EncoderKind::ClsMlm => cls_mlm_forward(f, head),
        other => Err(LsrError::NotDifferentiable(other.to_string())),
    }
}

/// Accumulates `Σ_i upstream[i]·∂w_i/∂θ` for a neural head.
pub fn backward<T: Scalar>(
    kind: EncoderKind,
    f: &TextFeatures<T>,
    head: &HeadParameters<T>,
    upstream: &[T],
    grad: &mut HeadGrad<T>,
) -> Result<()> {
    match kind {
        EncoderKind::Mlp | EncoderKind::ExpMlp => {
            mlp_backward(f, head, upstream, grad);
            Ok(())
        }
        EncoderKind::Mlm => mlm_backward(f, head, upstream, grad),
        EncoderKind::ClsMlm => cls_mlm_backward(f, head, upstream, grad),
        other => Err(LsrError::NotDifferentiable(other.to_string())),
    }
}

/// Query–document similarity.
pub fn score<T: Scalar>(q: &SparseVector<T>, d: &SparseVector<T>) -> T {
    q.dot(d)
}

/// One side's encoder together with everything it reads.
#[derive(Clone, Copy)]
pub struct Encoder<'a, T: Scalar> {
    pub kind: EncoderKind,
    pub heads: Option<&'a HeadParameters<T>>,
    pub embeddings: Option<&'a dyn EmbeddingSource<T>>,
    pub stats: Option<&'a CorpusStats>,
    pub bm25: Bm25Params,
    pub expansions: Option<&'a HashMap<String, Vec<TermId>>>,
    /// Inference-time Top-K pruning.
    pub topk: Option<usize>,
}

impl<'a, T: Scalar> Encoder<'a, T> {
    pub fn new(kind: EncoderKind) -> Self {
        Encoder {
            kind,
            heads: None,
            embeddings: None,
            stats: None,
            bm25: Bm25Params::default(),
            expansions: None,
            topk: None,
        }
    }

    /// Applies pre-processing (external expansion) to a text.
    pub fn prepare(&self, text: &TokenizedText) -> Result<TokenizedText> {
        if self.kind.needs_expansions() {
            let map = self
                .expansions
                .ok_or_else(|| LsrError::config("expansions", "exp_mlp requires expansion terms"))?;
            Ok(expand_text(text, map))
        } else {
            Ok(text.clone())
        }
    }

    pub fn features(&self, prepared: &TokenizedText) -> Result<TextFeatures<T>> {
        let src = self
            .embeddings
            .ok_or_else(|| LsrError::config("backbone", format!("{} requires embeddings", self.kind)))?;
        let bundle = src.bundle(prepared)?;
        TextFeatures::new(prepared, &bundle, self.kind.feature_needs())
    }

    pub fn encode(&self, text: &TokenizedText) -> Result<SparseVector<T>> {
        let prepared = self.prepare(text)?;
        let v = match self.kind {
            EncoderKind::Binary => encode_binary(&prepared),
            EncoderKind::Bm25Query => encode_bm25_query(&prepared, self.stats_or_err()?),
            EncoderKind::Bm25Doc => encode_bm25_doc(&prepared, self.stats_or_err()?, &self.bm25)?,
            kind => {
                let heads = self
                    .heads
                    .ok_or_else(|| LsrError::config("heads", format!("{kind} requires head parameters")))?;
                let f = self.features(&prepared)?;
                heads.validate(f.ctx.cols(), f.vocab_size)?;
                forward(kind, &f, heads)?
            }
        };
        Ok(match self.topk {
            Some(k) => topk_prune(&v, k),
            None => v,
        })
    }

    fn stats_or_err(&self) -> Result<&'a CorpusStats> {
        self.stats
            .ok_or_else(|| LsrError::config("stats", "bm25 encoders require corpus statistics"))
    }
}
