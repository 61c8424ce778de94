//! Learned sparse retrieval: sparse encoders, sparsity regularizers and
//! supervision composed as per-method configurations, together with an
//! impact-scored inverted index and TREC-style evaluation.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the bottom of this file fix it to `f64`, which is what the
//! command-line tool uses.

pub mod config;
pub mod corpus;
pub mod encoders;
pub mod error;
pub mod eval;
pub mod index;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod regularization;
pub mod scalar;
pub mod sparse;
pub mod supervision;
pub mod synth;
pub mod vocab;

pub use config::MethodConfig;
pub use corpus::{compute_corpus_stats, CorpusStats, TokenizedText};
pub use encoders::{score, Encoder, EncoderKind};
pub use error::{LsrError, Result};
pub use index::{build_index, exhaustive_search, index_search, ImpactIndex, Quantization, SearchResult};
pub use scalar::Scalar;
pub use sparse::{SparseGrad, SparseVector};
pub use vocab::{build_vocabulary, TermId, Vocabulary};

pub type SparseVec = SparseVector<f64>;
pub type Heads = encoders::HeadParameters<f64>;
pub type Bundle = encoders::EmbeddingBundle<f64>;
pub type Backbone = encoders::ToyBackbone<f64>;
pub type Features = encoders::TextFeatures<f64>;
