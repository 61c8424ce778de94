//! Labels, losses and the head-only trainer.

mod labels;
mod losses;
mod trainer;

pub use labels::{compute_term_recall, TermRecallLabels};
pub use losses::{contrastive_nll, margin_mse_loss, margin_mse_scores, term_mse_loss, ScoreLoss};
pub use trainer::{
    lambda_scale, train_heads, Objective, StepRecord, TermLabelExample, TrainOptions, TrainedHeads, Trainer,
    TrainingData, TrainingResources, TrainingTriple,
};
