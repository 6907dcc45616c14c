//! Checkpoint file: magic, little-endian u64 manifest length, JSON manifest,
//! then every tensor as little-endian f32 in manifest order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::encode;
use super::params::{Hyperparameters, ModelParameters, TensorSpec};
use super::NeuralError;
use crate::abstraction::AbstractionConfig;
use crate::corpus::Vocabulary;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"CBLEMBCK";

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Offset in f32 elements from the start of the payload.
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    hyperparameters: Hyperparameters,
    abstraction: AbstractionConfig,
    vocabulary: Vec<String>,
    vocab_hash: String,
    tensors: Vec<TensorEntry>,
}

/// Trained parameters bound to the vocabulary, hyperparameters and
/// abstraction settings they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub hyperparameters: Hyperparameters,
    pub abstraction: AbstractionConfig,
    pub vocabulary: Vocabulary,
    pub params: ModelParameters<f32>,
}

fn malformed(msg: impl Into<String>) -> NeuralError {
    NeuralError::MalformedCheckpoint(msg.into())
}

impl ModelCheckpoint {
    pub fn new(
        hyperparameters: Hyperparameters,
        abstraction: AbstractionConfig,
        vocabulary: Vocabulary,
        params: ModelParameters<f32>,
    ) -> Result<Self, NeuralError> {
        let ck = Self {
            hyperparameters,
            abstraction,
            vocabulary,
            params,
        };
        ck.validate()?;
        Ok(ck)
    }

    /// Checks that tensor shapes agree with the vocabulary and dimensions.
    pub fn validate(&self) -> Result<(), NeuralError> {
        self.hyperparameters.validate()?;
        let expected = ModelParameters::<f32>::zeros(self.vocabulary.len(), &self.hyperparameters).specs();
        let actual = self.params.specs();
        if let Some((e, a)) = expected.iter().zip(&actual).find(|(e, a)| e != a) {
            return Err(malformed(format!(
                "tensor {} has shape {:?}, expected {:?}",
                a.name, a.shape, e.shape
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let specs = self.params.specs();
        let mut offset = 0;
        let tensors = specs
            .into_iter()
            .map(|TensorSpec { name, shape }| {
                let entry = TensorEntry {
                    offset,
                    shape: shape.clone(),
                    name,
                };
                offset += shape.iter().product::<usize>();
                entry
            })
            .collect();
        let manifest = Manifest {
            format_version: CHECKPOINT_FORMAT_VERSION,
            hyperparameters: self.hyperparameters.clone(),
            abstraction: self.abstraction.clone(),
            vocabulary: self.vocabulary.tokens().to_vec(),
            vocab_hash: self.vocabulary.hash(),
            tensors,
        };
        let json = serde_json::to_vec(&manifest).expect("manifest serializes");
        let mut out = Vec::with_capacity(16 + json.len() + 4 * offset);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for t in self.params.tensors() {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NeuralError> {
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(malformed("not a checkpoint file"));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let json = bytes
            .get(16..16usize.saturating_add(len))
            .ok_or_else(|| malformed("truncated manifest"))?;
        let manifest: Manifest = serde_json::from_slice(json).map_err(|e| malformed(e.to_string()))?;
        if manifest.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(malformed(format!("unsupported format version {}", manifest.format_version)));
        }
        let vocabulary = Vocabulary::from_tokens(&manifest.vocabulary).map_err(|e| malformed(e.to_string()))?;
        if vocabulary.hash() != manifest.vocab_hash {
            return Err(malformed("vocabulary hash mismatch"));
        }
        manifest.hyperparameters.validate()?;
        let mut params = ModelParameters::<f32>::zeros(vocabulary.len(), &manifest.hyperparameters);
        let specs = params.specs();
        if specs.len() != manifest.tensors.len() {
            return Err(malformed("tensor count mismatch"));
        }
        let payload = &bytes[16 + len..];
        for ((spec, entry), dest) in specs.iter().zip(&manifest.tensors).zip(params.tensors_mut()) {
            if spec.name != entry.name || spec.shape != entry.shape {
                return Err(malformed(format!(
                    "tensor {} {:?} does not match expected {} {:?}",
                    entry.name, entry.shape, spec.name, spec.shape
                )));
            }
            let start = entry.offset * 4;
            let raw = payload
                .get(start..start + 4 * dest.len())
                .ok_or_else(|| malformed(format!("tensor {} truncated", entry.name)))?;
            for (d, chunk) in dest.iter_mut().zip(raw.chunks_exact(4)) {
                *d = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
            }
        }
        Self::new(manifest.hyperparameters, manifest.abstraction, vocabulary, params)
    }

    pub fn save(&self, path: &Path) -> Result<(), NeuralError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NeuralError> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// SHA-256 of the serialized checkpoint, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    /// Token ids for the encoder, reversed if the model was trained so.
    pub fn encoder_input<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        let mut ids: Vec<usize> = tokens.iter().map(|t| self.vocabulary.id(t.as_ref())).collect();
        if self.hyperparameters.reverse_input {
            ids.reverse();
        }
        ids
    }

    /// Latent vector z of an abstract token sequence.
    pub fn embed<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<f32>, NeuralError> {
        Ok(encode(&self.encoder_input(tokens), &self.params)?.z)
    }
}
