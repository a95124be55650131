//! Loss, gradients, optimizer, checkpoints and the training loop.

mod adam;
mod backward;
mod checkpoint;
mod data;
mod loss;
mod trainer;

pub use adam::{adam_step, AdamState};
pub use backward::{backward, backward_into, gradient_check, sample_gradient, sample_gradient_into, GRAD_FLOOR};
pub use checkpoint::{
    check_config, decode_checkpoint, encode_checkpoint, load_checkpoint, load_checkpoint_for, save_checkpoint,
    Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use data::TrainingData;
pub use loss::{layerwise_relative_loss, loss_and_grad};
pub use trainer::{
    evaluate_loss, train, train_to_dir, train_with, write_loss_csv, EpochRecord, TrainConfig, TrainOutcome,
    BEST_CHECKPOINT, FINAL_CHECKPOINT, LOSS_CSV,
};
