//! The embedding → LSTM → CNN → dense → head network: configuration,
//! weights, forward/backward passes, training, checkpoints and prediction.

mod checkpoint;
mod config;
mod network;
mod predict;
mod train;
mod weights;

use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{Head, ModelConfig, TrainConfig};
pub use network::{
    batch_loss_and_grads, forward, forward_example, gradient_check, loss, ExampleCache, Gradients, LabeledSequence,
};
pub use predict::{Prediction, Predictor};
pub use train::{accuracy, train, EpochRecord, TrainOutcome};
pub use weights::ModelWeights;

/// Output of one forward pass: a tanh score in `[-1, 1]` or a probability
/// pair over (positive, negative).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SentimentScore {
    Tanh(f64),
    Softmax { positive: f64, negative: f64 },
}

impl SentimentScore {
    /// Signed score in `[-1, 1]`: the tanh value itself, or
    /// `p(positive) - p(negative)` for the softmax head.
    pub fn scalar(&self) -> f64 {
        match *self {
            SentimentScore::Tanh(s) => s,
            SentimentScore::Softmax { positive, negative } => positive - negative,
        }
    }
}
