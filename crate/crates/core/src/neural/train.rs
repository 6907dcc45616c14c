use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::checkpoint::ModelCheckpoint;
use super::model::{backward, forward, Feed};
use super::params::{Hyperparameters, ModelParameters};
use super::NeuralError;
use crate::abstraction::AbstractionConfig;
use crate::corpus::{EncodedSentence, Vocabulary};

/// Mean training loss over one telemetry window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub iteration: usize,
    pub loss: f64,
}

/// What one optimisation step saw.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Mean token negative log-likelihood over the batch.
    pub loss: f64,
    /// Decoder input tokens per batch element.
    pub decoder_inputs: Vec<Vec<usize>>,
}

/// Single-threaded f32 trainer. All randomness (initialisation, sentence
/// sampling and scheduled sampling) comes from one seeded stream, so runs
/// are bitwise reproducible.
pub struct Trainer {
    hp: Hyperparameters,
    params: ModelParameters<f32>,
    grads: ModelParameters<f32>,
    adam: Adam<f32>,
    rng: ChaCha8Rng,
    iteration: usize,
}

impl Trainer {
    pub fn new(vocab_size: usize, hp: &Hyperparameters) -> Result<Self, NeuralError> {
        hp.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let params = ModelParameters::random(vocab_size, hp, &mut rng);
        let grads = ModelParameters::zeros(vocab_size, hp);
        let adam = Adam::new(hp.learning_rate, &params);
        Ok(Self {
            hp: hp.clone(),
            params,
            grads,
            adam,
            rng,
            iteration: 0,
        })
    }

    pub fn params(&self) -> &ModelParameters<f32> {
        &self.params
    }

    pub fn into_params(self) -> ModelParameters<f32> {
        self.params
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// One Adam update on the summed token loss of `batch`, normalised by
    /// the total number of decoder steps.
    pub fn step(&mut self, batch: &[&EncodedSentence]) -> Result<StepOutcome, NeuralError> {
        self.iteration += 1;
        self.grads.fill_zero();
        let total_steps: usize = batch.iter().map(|s| s.decoder_target.len()).sum();
        let scale = 1.0 / total_steps.max(1) as f32;
        let mut loss_sum = 0.0f64;
        let mut decoder_inputs = Vec::with_capacity(batch.len());
        for s in batch {
            let feed = Feed::Scheduled {
                p: self.hp.teacher_forcing_prob,
                rng: &mut self.rng,
            };
            let pass = forward(&self.params, &s.encoder_input, &s.decoder_target, feed)?;
            loss_sum += pass.loss_sum as f64;
            backward(&self.params, &pass, &s.decoder_target, scale, &mut self.grads);
            decoder_inputs.push(pass.decoder_inputs);
        }
        let loss = loss_sum / total_steps.max(1) as f64;
        if !loss.is_finite() {
            return Err(NeuralError::NonFiniteLoss {
                iteration: self.iteration,
            });
        }
        self.adam.step(&mut self.params, &self.grads);
        if !self.params.is_finite() {
            return Err(NeuralError::NonFiniteParameters {
                iteration: self.iteration,
            });
        }
        Ok(StepOutcome { loss, decoder_inputs })
    }

    /// Draws `batch_size` sentences uniformly with replacement and steps.
    pub fn sample_and_step(&mut self, data: &[EncodedSentence]) -> Result<StepOutcome, NeuralError> {
        if data.is_empty() {
            return Err(NeuralError::EmptyTrainingSet);
        }
        let batch: Vec<&EncodedSentence> = (0..self.hp.batch_size)
            .map(|_| &data[self.rng.random_range(0..data.len())])
            .collect();
        self.step(&batch)
    }
}

/// A trained model and its loss curve.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub checkpoint: ModelCheckpoint,
    pub losses: Vec<LossPoint>,
}

pub fn train(
    data: &[EncodedSentence],
    vocabulary: &Vocabulary,
    abstraction: &AbstractionConfig,
    hp: &Hyperparameters,
) -> Result<TrainedModel, NeuralError> {
    if data.is_empty() {
        return Err(NeuralError::EmptyTrainingSet);
    }
    let mut trainer = Trainer::new(vocabulary.len(), hp)?;
    let mut losses = Vec::new();
    let mut window = 0.0;
    let mut window_len = 0usize;
    for it in 1..=hp.iterations {
        window += trainer.sample_and_step(data)?.loss;
        window_len += 1;
        if window_len == hp.log_every.max(1) || it == hp.iterations {
            let loss = window / window_len as f64;
            log::info!("iteration {it}/{}: loss {loss:.4}", hp.iterations);
            losses.push(LossPoint { iteration: it, loss });
            window = 0.0;
            window_len = 0;
        }
    }
    let checkpoint = ModelCheckpoint::new(hp.clone(), abstraction.clone(), vocabulary.clone(), trainer.into_params())?;
    Ok(TrainedModel { checkpoint, losses })
}

/// Fraction of target tokens (EOS included) recovered by greedy decoding
/// run for exactly the target length.
pub fn reconstruction_accuracy(params: &ModelParameters<f32>, data: &[EncodedSentence]) -> Result<f64, NeuralError> {
    let counts = data
        .par_iter()
        .map(|s| {
            let pass = forward::<f32, ChaCha8Rng>(params, &s.encoder_input, &s.decoder_target, Feed::Greedy)?;
            let hits = pass
                .predictions
                .iter()
                .zip(&s.decoder_target)
                .filter(|(p, t)| p == t)
                .count();
            Ok((hits, s.decoder_target.len()))
        })
        .collect::<Result<Vec<_>, NeuralError>>()?;
    let (hits, total) = counts.iter().fold((0, 0), |(h, t), &(a, b)| (h + a, t + b));
    Ok(if total == 0 { 0.0 } else { hits as f64 / total as f64 })
}
