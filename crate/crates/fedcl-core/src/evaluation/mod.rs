//! Stage-two fine-tuning with limited labels and the recall/precision
//! scoring used to compare pretraining methods.

mod finetune;
mod metrics;

pub use finetune::{
    attach_classifier, finetune_federated, finetune_local, FinetuneConfig, FinetuneMode,
};
pub use metrics::{
    aggregate_metrics, evaluate, metrics_from_confusion, AggregateMode, ConfusionMatrix, Metrics,
};
