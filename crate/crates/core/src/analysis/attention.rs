use serde::Serialize;

use super::AnalysisError;
use crate::corpus::EOS;
use crate::neural::{greedy_decode, ModelCheckpoint};

/// Attention weights of a greedy decode, one row per emitted token and one
/// column per source token in source order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttentionTrace {
    pub source_tokens: Vec<String>,
    pub decoded_tokens: Vec<String>,
    pub weights: Vec<Vec<f64>>,
}

impl AttentionTrace {
    pub fn shape(&self) -> (usize, usize) {
        (self.weights.len(), self.source_tokens.len())
    }
}

/// Decodes greedily for at most `2·T + 1` steps (stopping at EOS),
/// recording attention at every step.
pub fn attention_trace<S: AsRef<str>>(tokens: &[S], ckpt: &ModelCheckpoint) -> Result<AttentionTrace, AnalysisError> {
    let input = ckpt.encoder_input(tokens);
    let t = input.len();
    let decode = greedy_decode(&ckpt.params, &input, EOS, 2 * t + 1)?;
    let weights = decode
        .attention
        .iter()
        .map(|alpha| {
            (0..t)
                .map(|src| {
                    let pos = if ckpt.hyperparameters.reverse_input { t - 1 - src } else { src };
                    alpha[pos] as f64
                })
                .collect()
        })
        .collect();
    Ok(AttentionTrace {
        source_tokens: tokens.iter().map(|s| s.as_ref().to_string()).collect(),
        decoded_tokens: ckpt.vocabulary.decode(&decode.tokens),
        weights,
    })
}
