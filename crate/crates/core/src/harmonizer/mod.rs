//! The harmonization network and its objective, at CPU scale.

mod features;
mod loss;
mod model;
mod train;

pub use features::{extract_features, hist_bin, AppearanceFeatures, FEATURE_DIM, HIST_BINS};
pub use loss::{batch_loss_and_grad, grad, loss_and_grad, loss_total, LossReport, LossWeights};
pub use model::{
    harmonize, ColorTransform, Dense, HarmonizerModel, CODE_DIM, COEFF_DIM, FUSE_1, FUSE_2, FUSE_PARAMS, LAYERS,
    PARAM_COUNT, REF_1, REF_2, REF_PARAMS,
};
pub use train::{
    learning_rate_at, train, Adam, Checkpoint, EpochRecord, TrainConfig, TrainHistory, CHECKPOINT_VERSION,
};
