//! Bidirectional-LSTM sequence autoencoder with attention, trained from
//! scratch with manual backpropagation.

mod adam;
mod checkpoint;
mod gradcheck;
mod model;
mod params;
mod tensor;
mod train;

pub use adam::Adam;
pub use checkpoint::{ModelCheckpoint, CHECKPOINT_FORMAT_VERSION};
pub use gradcheck::{
    gradient_check, relative_error, GradCheckConfig, GradCheckProblem, GradCheckReport, TensorError, RELATIVE_ERROR_FLOOR,
};
pub use model::{
    attend, backward, decode_step, encode, forward, greedy_decode, lstm_step, reconstruction_loss, DecodeStep,
    EncoderOutput, Feed, ForwardPass, GreedyDecode,
};
pub use params::{Hyperparameters, LstmParams, ModelParameters, TensorSpec, TENSOR_NAMES};
pub use tensor::{argmax, log_softmax, softmax, Matrix, Scalar};
pub use train::{reconstruction_accuracy, train, LossPoint, StepOutcome, TrainedModel, Trainer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty input sequence")]
    EmptySequence,
    #[error("{logits} logit rows for {target} target tokens")]
    LengthMismatch { logits: usize, target: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error("non-finite parameters after update at iteration {iteration}")]
    NonFiniteParameters { iteration: usize },
    #[error("unknown tensor `{0}`")]
    UnknownTensor(String),
    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
