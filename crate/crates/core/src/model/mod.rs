//! Feedforward acoustic and duration models.

mod file;
mod network;
mod predict;
mod spec;
mod train;

pub use network::{init_network, Gradients, Layer, Network, Provenance, Workspace};
pub use predict::{
    acoustic_training_pair, clamp_duration, duration_training_pair, output_columns, output_matrix, predict_durations,
    predict_parameters, predict_raw, retime, train_duration_model, PredictConfig, OUTPUT_LF0, OUTPUT_MGC, OUTPUT_MVF,
};
pub use spec::{Activation, LayerSpec};
pub use train::{
    adapt, evaluate_mse, fit, rebase_output_stats, sgd_epoch, train_avm, train_network, AdaptConfig, AdaptReport,
    Dataset, EpochRecord, LayersToUpdate, TrainConfig, TrainingLog, TrainingUtterance,
};
