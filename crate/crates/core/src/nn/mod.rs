//! Numeric kernel: GRU cell, bidirectional encoder with mean pooling,
//! feedforward heads, softmax and bag-of-words losses, Adam, gradient
//! checking, and checkpoints. Every differentiable op has a hand-derived
//! backward pass; kernels are generic over `f32`/`f64`.

pub mod adam;
pub mod checkpoint;
pub mod encoder;
pub mod feedforward;
pub mod gradcheck;
pub mod gru;
pub mod loss;
pub mod tensor;

use rand::Rng;
use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use encoder::{bigru_encode, encode_backward, encode_cached, EncodeCache, EncoderDims, EncoderParams, HeadKind};
pub use feedforward::{feedforward_apply, FeedForward};
pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport};
pub use gru::{gru_cell, GruParams};
pub use loss::{bow_log_prob, bow_xent, class_log_prob, softmax, softmax_xent, HeadLoss};
pub use tensor::{Parameters, Real, Tensor};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("empty token sequence")]
    EmptySequence,
    #[error("token index {index} outside vocabulary of size {vocab}")]
    IndexOutOfVocab { index: usize, vocab: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("empty bag-of-words target")]
    EmptyTarget,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("non-finite loss")]
    NonFiniteLoss,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Uniform `±1/√fan_in` initialization of a matrix.
pub(crate) fn init_matrix<F: Real, R: Rng>(m: &mut Tensor<F>, rng: &mut R) {
    let fan_in = m.cols().max(1) as f64;
    let bound = 1.0 / fan_in.sqrt();
    for v in m.data_mut() {
        *v = F::from_f64(rng.random_range(-bound..=bound));
    }
}
