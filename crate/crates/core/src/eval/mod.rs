//! Ranking metrics over TREC-style runs and relevance judgments.

mod metrics;
mod trec;

pub use metrics::{evaluate_standard, mrr_at_k, ndcg_at_k, recall_at_k, StandardMetrics};
pub use trec::{format_qrels, format_run, parse_qrels, parse_run, read_qrels, read_run, write_qrels, write_run, Qrels, RunFile};
