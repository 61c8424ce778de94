//! Frozen per-text features: everything an encoder head needs that does not
//! depend on trainable parameters. Computed once, reused across training steps.

use crate::corpus::TokenizedText;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::vocab::TermId;

use super::bundle::EmbeddingBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FeatureNeeds {
    pub mlm_logits: bool,
    pub cls_logits: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextFeatures<T> {
    pub token_ids: Vec<TermId>,
    pub ctx: Matrix<T>,
    pub cls: Vec<T>,
    /// `L × |V|` matrix of `h_j · e_i`.
    pub mlm_logits: Option<Matrix<T>>,
    /// `|V|` vector of `h_0 · e_i`.
    pub cls_logits: Option<Vec<T>>,
    pub vocab_size: usize,
}

impl<T: Scalar> TextFeatures<T> {
    pub fn new(text: &TokenizedText, bundle: &EmbeddingBundle<T>, needs: FeatureNeeds) -> Result<Self> {
        bundle.validate_for(text)?;
        let mlm_logits = needs
            .mlm_logits
            .then(|| bundle.ctx_embeddings.mul_transpose(&bundle.input_embeddings));
        let cls_logits = needs
            .cls_logits
            .then(|| bundle.input_embeddings.mul_vec(&bundle.cls_embedding));
        Ok(TextFeatures {
            token_ids: text.token_ids.clone(),
            ctx: bundle.ctx_embeddings.clone(),
            cls: bundle.cls_embedding.clone(),
            mlm_logits,
            cls_logits,
            vocab_size: bundle.vocab_size(),
        })
    }

    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}
