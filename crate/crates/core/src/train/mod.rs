//! Optimization, data handling and the reconstruction metric.

mod adam;
mod data;
mod metric;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use data::{split_indices, TrainingData};
pub use metric::{
    mean_image, normalized_error, pairwise_normalizer, ErrorReport, MAX_EXACT_PAIRS_SET,
};
pub use trainer::{
    encode_all, train_classifier, BatchSampler, Checkpoint, Mode, TrainConfig, Trainer,
};
