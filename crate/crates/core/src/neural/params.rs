use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{fill_normal, Matrix, Scalar};
use super::NeuralError;

/// Training and architecture settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Size of the sentence embedding z. The decoder starts from z, so this
    /// must equal `hidden_dim`.
    pub latent_dim: usize,
    pub learning_rate: f64,
    /// Probability of feeding the gold previous token (otherwise the
    /// previous step's argmax) while training.
    pub teacher_forcing_prob: f64,
    pub iterations: usize,
    pub init_std: f64,
    pub seed: u64,
    pub batch_size: usize,
    pub reverse_input: bool,
    /// Loss telemetry period in iterations.
    pub log_every: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self::full()
    }
}

impl Hyperparameters {
    /// 512-dimensional model, N(0, 1) init, Adam at 1e-3, 50k iterations.
    pub fn full() -> Self {
        Self {
            embed_dim: 512,
            hidden_dim: 512,
            latent_dim: 512,
            learning_rate: 0.001,
            teacher_forcing_prob: 0.5,
            iterations: 50_000,
            init_std: 1.0,
            seed: 0,
            batch_size: 1,
            reverse_input: true,
            log_every: 500,
        }
    }

    /// 64-dimensional desk-scale profile with a scaled initialisation.
    pub fn fast() -> Self {
        Self {
            embed_dim: 64,
            hidden_dim: 64,
            latent_dim: 64,
            iterations: 20_000,
            init_std: 0.1,
            log_every: 250,
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |msg: String| Err(NeuralError::InvalidHyperparameters(msg));
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.latent_dim == 0 {
            return bad("dimensions must be positive".into());
        }
        if self.latent_dim != self.hidden_dim {
            return bad(format!(
                "latent_dim ({}) must equal hidden_dim ({}) because z initialises the decoder state",
                self.latent_dim, self.hidden_dim
            ));
        }
        if !(0.0..=1.0).contains(&self.teacher_forcing_prob) {
            return bad(format!("teacher_forcing_prob {} outside [0, 1]", self.teacher_forcing_prob));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if !(self.init_std >= 0.0 && self.init_std.is_finite()) {
            return bad(format!("init_std {} must be non-negative", self.init_std));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        Ok(())
    }
}

/// Gate weights of one LSTM. Rows are stacked input, forget, output and
/// candidate gates; columns are `[x; h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LstmParams<T> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            weight: Matrix::zeros(4 * hidden_dim, input_dim + hidden_dim),
            bias: vec![T::zero(); 4 * hidden_dim],
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.bias.len() / 4
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols() - self.hidden_dim()
    }

    fn cast<U: Scalar>(&self) -> LstmParams<U> {
        LstmParams {
            weight: self.weight.cast(),
            bias: self.bias.iter().map(|v| U::from_f64(Scalar::to_f64(*v))).collect(),
        }
    }
}

/// Every trainable tensor of the autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters<T> {
    /// `|V| × embed_dim`, shared by encoder and decoder.
    pub embedding: Matrix<T>,
    pub encoder_fwd: LstmParams<T>,
    pub encoder_bwd: LstmParams<T>,
    /// `latent_dim × 2·hidden_dim`; z = latent · tanh([h_f; h_b]).
    pub latent: Matrix<T>,
    pub decoder: LstmParams<T>,
    /// `hidden_dim × 2·hidden_dim` bilinear attention projection.
    pub attention: Matrix<T>,
    /// `hidden_dim × 3·hidden_dim` combiner over `[context; h]`.
    pub combine: Matrix<T>,
    /// `|V| × hidden_dim`.
    pub output: Matrix<T>,
    pub output_bias: Vec<T>,
}

/// Shape of a named tensor, as stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub const TENSOR_NAMES: [&str; 12] = [
    "embedding",
    "encoder.forward.weight",
    "encoder.forward.bias",
    "encoder.backward.weight",
    "encoder.backward.bias",
    "latent.weight",
    "decoder.weight",
    "decoder.bias",
    "attention.weight",
    "combine.weight",
    "output.weight",
    "output.bias",
];

impl<T: Scalar> ModelParameters<T> {
    pub fn zeros(vocab_size: usize, hp: &Hyperparameters) -> Self {
        let (e, h, l) = (hp.embed_dim, hp.hidden_dim, hp.latent_dim);
        Self {
            embedding: Matrix::zeros(vocab_size, e),
            encoder_fwd: LstmParams::zeros(e, h),
            encoder_bwd: LstmParams::zeros(e, h),
            latent: Matrix::zeros(l, 2 * h),
            decoder: LstmParams::zeros(e, h),
            attention: Matrix::zeros(h, 2 * h),
            combine: Matrix::zeros(h, 3 * h),
            output: Matrix::zeros(vocab_size, h),
            output_bias: vec![T::zero(); vocab_size],
        }
    }

    /// Every entry drawn i.i.d. from N(0, std²), tensors in declaration order.
    pub fn random<R: Rng + ?Sized>(vocab_size: usize, hp: &Hyperparameters, rng: &mut R) -> Self {
        let mut p = Self::zeros(vocab_size, hp);
        for t in p.tensors_mut() {
            fill_normal(t, hp.init_std, rng);
        }
        p
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.decoder.hidden_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.latent.rows()
    }

    /// Flat views of all tensors, in checkpoint order.
    pub fn tensors(&self) -> Vec<&[T]> {
        vec![
            self.embedding.as_slice(),
            self.encoder_fwd.weight.as_slice(),
            &self.encoder_fwd.bias,
            self.encoder_bwd.weight.as_slice(),
            &self.encoder_bwd.bias,
            self.latent.as_slice(),
            self.decoder.weight.as_slice(),
            &self.decoder.bias,
            self.attention.as_slice(),
            self.combine.as_slice(),
            self.output.as_slice(),
            &self.output_bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        vec![
            self.embedding.as_mut_slice(),
            self.encoder_fwd.weight.as_mut_slice(),
            &mut self.encoder_fwd.bias,
            self.encoder_bwd.weight.as_mut_slice(),
            &mut self.encoder_bwd.bias,
            self.latent.as_mut_slice(),
            self.decoder.weight.as_mut_slice(),
            &mut self.decoder.bias,
            self.attention.as_mut_slice(),
            self.combine.as_mut_slice(),
            self.output.as_mut_slice(),
            &mut self.output_bias,
        ]
    }

    /// Names and shapes matching [`ModelParameters::tensors`].
    pub fn specs(&self) -> Vec<TensorSpec> {
        let mat = |name: &str, m: &Matrix<T>| TensorSpec {
            name: name.into(),
            shape: m.shape().to_vec(),
        };
        let vec = |name: &str, v: &[T]| TensorSpec {
            name: name.into(),
            shape: vec![v.len()],
        };
        vec![
            mat("embedding", &self.embedding),
            mat("encoder.forward.weight", &self.encoder_fwd.weight),
            vec("encoder.forward.bias", &self.encoder_fwd.bias),
            mat("encoder.backward.weight", &self.encoder_bwd.weight),
            vec("encoder.backward.bias", &self.encoder_bwd.bias),
            mat("latent.weight", &self.latent),
            mat("decoder.weight", &self.decoder.weight),
            vec("decoder.bias", &self.decoder.bias),
            mat("attention.weight", &self.attention),
            mat("combine.weight", &self.combine),
            mat("output.weight", &self.output),
            vec("output.bias", &self.output_bias),
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn cast<U: Scalar>(&self) -> ModelParameters<U> {
        ModelParameters {
            embedding: self.embedding.cast(),
            encoder_fwd: self.encoder_fwd.cast(),
            encoder_bwd: self.encoder_bwd.cast(),
            latent: self.latent.cast(),
            decoder: self.decoder.cast(),
            attention: self.attention.cast(),
            combine: self.combine.cast(),
            output: self.output.cast(),
            output_bias: self.output_bias.iter().map(|v| U::from_f64(Scalar::to_f64(*v))).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = T::zero());
        }
    }
}
