//! Encoder-decoder transformer written against `ndarray`, with hand-derived
//! gradients, Adam, greedy/beam decoding and a binary checkpoint format.

mod attention;
mod checkpoint;
mod config;
mod decode;
mod external;
mod inference;
mod layers;
mod optim;
mod params;
mod train;
mod transformer;

use thiserror::Error;

use crate::preprocess::VocabError;

pub use attention::{
    causal_mask, multi_head_attention, padding_mask, positional_encoding, scaled_dot_attention, AttentionOutput,
};
pub use checkpoint::{Checkpoint, CheckpointError};
pub use config::{ModelConfig, TrainConfig};
pub use decode::{beam_decode, beam_search, greedy_decode, greedy_search, Hypothesis, StepScorer, TransformerScorer};
pub use external::{
    align_responses, external_predict, parse_responses, requests_to_jsonl, responses_to_jsonl, Adapter,
    AdapterError, PredictionRequest, PredictionResponse,
};
pub use inference::{build_vocabs, encode_record, encode_records, equation_tokens, EquationPredictor};
pub use optim::{adam_step, clip_global_norm, AdamState};
pub use params::{
    AttentionParams, DecoderLayerParams, EncoderLayerParams, FeedForwardParams, LayerNormParams, Matrix, Parameters,
};
pub use train::{train, train_with_callback, EpochStats};
pub use transformer::{
    batch_loss, cross_entropy_loss, decoder_logits, encode_source, forward, log_softmax_row, loss_and_gradients,
    EncodedPair, Mode,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("d_model must be even, got {0}")]
    OddModelWidth(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("sequence of length {len} exceeds max_len {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("every target position is padding")]
    AllPadding,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

impl ModelError {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        ModelError::Shape(msg.into())
    }
}
