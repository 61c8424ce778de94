//! Method configuration: one document per retrieval method, naming the
//! query/document encoders, sparsity control and supervision.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::encoders::{Activation, Bm25Params, EncoderKind, HeadInit, HeadParameters};
use crate::error::{LsrError, Result};
use crate::index::Quantization;
use crate::regularization::RegularizerConfig;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadSettings {
    pub activation: Activation,
    pub mlp_log_normalize: bool,
    pub use_quality_heads: bool,
    pub init: HeadInit,
}

impl Default for HeadSettings {
    fn default() -> Self {
        HeadSettings {
            activation: Activation::Relu,
            mlp_log_normalize: true,
            use_quality_heads: false,
            init: HeadInit::default(),
        }
    }
}

impl HeadSettings {
    pub fn build<T: Scalar>(&self, dim: usize, vocab_size: usize) -> HeadParameters<T> {
        let mut h = HeadParameters::new(dim, vocab_size, self.init);
        h.activation = self.activation;
        h.mlp_log_normalize = self.mlp_log_normalize;
        h.use_quality_heads = self.use_quality_heads;
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SideRegularizers {
    pub query: RegularizerConfig,
    pub doc: RegularizerConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Softmax NLL over the positive and its negatives.
    Contrastive,
    /// Squared error between student and teacher score margins.
    MarginMse,
    /// Squared error against per-term recall labels (document side).
    TermMse,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelLevel {
    Term,
    #[default]
    Passage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeSource {
    #[default]
    None,
    /// A single lexical negative per query.
    Bm25,
    /// Several lexical negatives per query.
    Bm25Multi,
    /// Mined hard negatives, read from the triples file.
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelType {
    #[default]
    None,
    Human,
    Teacher,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Supervision {
    pub loss: LossKind,
    pub level: LabelLevel,
    pub negatives: NegativeSource,
    pub label_type: LabelType,
    /// Negatives per query taken from each triple; `None` uses all of them.
    pub num_negatives: Option<usize>,
}

impl Default for Supervision {
    fn default() -> Self {
        Supervision {
            loss: LossKind::None,
            level: LabelLevel::Passage,
            negatives: NegativeSource::None,
            label_type: LabelType::None,
            num_negatives: None,
        }
    }
}

impl Supervision {
    pub fn negatives_per_query(&self) -> Option<usize> {
        match (self.num_negatives, self.negatives) {
            (Some(n), _) => Some(n),
            (None, NegativeSource::Bm25) => Some(1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSettings {
    pub steps: usize,
    pub lr: f64,
    /// Quadratic ramp of the regularizer coefficient over the first third
    /// of the steps.
    pub warmup: bool,
    /// Use the dense FLOPs gradient instead of the support-restricted one.
    pub dense_flops_gradient: bool,
    /// Cap on the number of triples used (first `n` in file order).
    pub max_triples: Option<usize>,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        TrainingSettings {
            steps: 0,
            lr: 0.05,
            warmup: true,
            dense_flops_gradient: false,
            max_triples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackboneConfig {
    /// Deterministic stand-in backbone seeded from `--seed`.
    Toy { dim: usize },
    /// Embeddings dumped by an external model.
    Precomputed {
        input_embeddings: PathBuf,
        query_embeddings: PathBuf,
        doc_embeddings: PathBuf,
    },
}

impl Default for BackboneConfig {
    fn default() -> Self {
        BackboneConfig::Toy { dim: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadPaths {
    pub query: Option<PathBuf>,
    pub doc: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DataPaths {
    pub vocab: Option<PathBuf>,
    pub collection: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub expansions: Option<PathBuf>,
    pub triples: Option<PathBuf>,
    pub train_queries: Option<PathBuf>,
    pub train_qrels: Option<PathBuf>,
    pub heads: HeadPaths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfig {
    pub name: String,
    pub query_encoder: EncoderKind,
    pub doc_encoder: EncoderKind,
    pub shared_heads: bool,
    pub query_heads: HeadSettings,
    pub doc_heads: HeadSettings,
    pub regularizer: SideRegularizers,
    pub supervision: Supervision,
    pub training: TrainingSettings,
    pub quantization: Quantization,
    /// Retrieval depth `k` for search.
    pub depth: usize,
    pub bm25: Bm25Params,
    pub backbone: BackboneConfig,
    pub paths: DataPaths,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            name: "unnamed".into(),
            query_encoder: EncoderKind::Binary,
            doc_encoder: EncoderKind::Binary,
            shared_heads: false,
            query_heads: HeadSettings::default(),
            doc_heads: HeadSettings::default(),
            regularizer: SideRegularizers::default(),
            supervision: Supervision::default(),
            training: TrainingSettings::default(),
            quantization: Quantization::default(),
            depth: 1000,
            bm25: Bm25Params::default(),
            backbone: BackboneConfig::default(),
            paths: DataPaths::default(),
        }
    }
}

/// Which part of a method an ablation toggle touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    QueryEncoder,
    DocEncoder,
    Regularizer,
    SharedHeads,
}

impl MethodConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Loads a config and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LsrError::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        let p = &mut self.paths;
        for slot in [
            &mut p.vocab,
            &mut p.collection,
            &mut p.queries,
            &mut p.qrels,
            &mut p.expansions,
            &mut p.triples,
            &mut p.train_queries,
            &mut p.train_qrels,
            &mut p.heads.query,
            &mut p.heads.doc,
        ] {
            fix(slot);
        }
        if let BackboneConfig::Precomputed {
            input_embeddings,
            query_embeddings,
            doc_embeddings,
        } = &mut self.backbone
        {
            for path in [input_embeddings, query_embeddings, doc_embeddings] {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        use EncoderKind::*;
        if self.query_encoder == Bm25Doc {
            return Err(LsrError::config("query_encoder", "bm25_doc is a document-side encoder"));
        }
        if self.doc_encoder == Bm25Query {
            return Err(LsrError::config("doc_encoder", "bm25_query is a query-side encoder"));
        }
        if self.query_encoder == ExpMlp {
            return Err(LsrError::config("query_encoder", "exp_mlp is a document-side encoder"));
        }
        if self.doc_encoder == ExpMlp && self.paths.expansions.is_none() {
            return Err(LsrError::config("paths.expansions", "exp_mlp document encoder requires expansion terms"));
        }
        if self.shared_heads {
            if self.query_encoder != self.doc_encoder {
                return Err(LsrError::config(
                    "shared_heads",
                    format!(
                        "shared heads require identical encoder kinds (query {} vs doc {})",
                        self.query_encoder, self.doc_encoder
                    ),
                ));
            }
            if !self.query_encoder.is_differentiable() {
                return Err(LsrError::config("shared_heads", "only neural encoders have heads to share"));
            }
        }
        self.bm25.validate()?;
        self.regularizer.query.validate("regularizer.query")?;
        self.regularizer.doc.validate("regularizer.doc")?;
        self.quantization.validate()?;
        if let BackboneConfig::Toy { dim } = self.backbone {
            if dim == 0 {
                return Err(LsrError::config("backbone.dim", "must be positive"));
            }
        }
        if self.training.steps > 0 {
            let trainable = self.query_encoder.is_differentiable() || self.doc_encoder.is_differentiable();
            if !trainable {
                return Err(LsrError::NotDifferentiable(format!(
                    "{}/{}",
                    self.query_encoder, self.doc_encoder
                )));
            }
            if !(self.training.lr >= 0.0) {
                return Err(LsrError::config("training.lr", "must be >= 0"));
            }
            match self.supervision.loss {
                LossKind::None => {
                    return Err(LsrError::config("supervision.loss", "training requires a loss"))
                }
                LossKind::TermMse => {
                    if self.supervision.level != LabelLevel::Term {
                        return Err(LsrError::config("supervision.level", "term_mse uses term-level labels"));
                    }
                    if !self.doc_encoder.is_differentiable() {
                        return Err(LsrError::config("doc_encoder", "term labels supervise the document encoder"));
                    }
                    if self.paths.train_queries.is_none() || self.paths.train_qrels.is_none() {
                        return Err(LsrError::config(
                            "paths.train_qrels",
                            "term-recall labels need training queries and qrels",
                        ));
                    }
                }
                LossKind::Contrastive | LossKind::MarginMse => {
                    if self.supervision.level != LabelLevel::Passage {
                        return Err(LsrError::config("supervision.level", "passage losses use passage-level labels"));
                    }
                    if self.paths.triples.is_none() {
                        return Err(LsrError::config("paths.triples", "passage-level training needs triples"));
                    }
                }
            }
            if (self.supervision.loss == LossKind::MarginMse) != (self.supervision.label_type == LabelType::Teacher) {
                return Err(LsrError::config(
                    "supervision.label_type",
                    "teacher labels go with the margin_mse loss",
                ));
            }
        }
        Ok(())
    }

    /// Components on which `other` differs from `self`.
    pub fn diff_components(&self, other: &MethodConfig) -> Vec<Component> {
        let mut out = Vec::new();
        if self.query_encoder != other.query_encoder || self.query_heads != other.query_heads {
            out.push(Component::QueryEncoder);
        }
        if self.doc_encoder != other.doc_encoder || self.doc_heads != other.doc_heads {
            out.push(Component::DocEncoder);
        }
        if self.regularizer != other.regularizer {
            out.push(Component::Regularizer);
        }
        if self.shared_heads != other.shared_heads {
            out.push(Component::SharedHeads);
        }
        out
    }

    /// Applies a `field=value` toggle, returning the modified copy.
    ///
    /// Supported fields: `query_encoder`, `doc_encoder`, `shared_heads`,
    /// `regularizer.query`, `regularizer.doc` (values `none`, `flops:λ`,
    /// `l1:λ`, `l2:λ`, `topk:k`).
    pub fn with_toggle(&self, toggle: &str) -> Result<MethodConfig> {
        let (field, value) = toggle
            .split_once('=')
            .ok_or_else(|| LsrError::config("toggle", format!("expected field=value, got `{toggle}`")))?;
        let mut out = self.clone();
        let kind = |v: &str| {
            EncoderKind::parse(v).ok_or_else(|| LsrError::config(field, format!("unknown encoder `{v}`")))
        };
        match field.trim() {
            "query_encoder" => out.query_encoder = kind(value.trim())?,
            "doc_encoder" => out.doc_encoder = kind(value.trim())?,
            "shared_heads" => {
                out.shared_heads = value
                    .trim()
                    .parse()
                    .map_err(|_| LsrError::config(field, "expected true or false"))?
            }
            "regularizer.query" => out.regularizer.query = parse_regularizer(field, value.trim())?,
            "regularizer.doc" => out.regularizer.doc = parse_regularizer(field, value.trim())?,
            other => return Err(LsrError::config("toggle", format!("unsupported field `{other}`"))),
        }
        out.name = format!("{}[{}]", self.name, toggle.trim());
        let changed = self.diff_components(&out);
        if changed.len() > 1 {
            return Err(LsrError::config(
                "toggle",
                format!("`{toggle}` changes more than one component: {changed:?}"),
            ));
        }
        out.validate()?;
        Ok(out)
    }
}

fn parse_regularizer(field: &str, value: &str) -> Result<RegularizerConfig> {
    let (kind, arg) = value.split_once(':').unwrap_or((value, ""));
    let num = |a: &str| -> Result<f64> {
        a.parse().map_err(|_| LsrError::config(field, format!("bad number `{a}`")))
    };
    Ok(match kind {
        "none" => RegularizerConfig::none(),
        "flops" => RegularizerConfig::flops(num(arg)?),
        "l1" => RegularizerConfig {
            kind: crate::regularization::RegularizerKind::L1,
            weight: num(arg)?,
            ..Default::default()
        },
        "l2" => RegularizerConfig {
            kind: crate::regularization::RegularizerKind::L2,
            weight: num(arg)?,
            ..Default::default()
        },
        "topk" => RegularizerConfig::topk(num(arg)? as usize),
        other => return Err(LsrError::config(field, format!("unknown regularizer `{other}`"))),
    })
}
