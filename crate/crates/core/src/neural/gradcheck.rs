//! Finite-difference verification of the analytic gradients.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::model::{backward, forward, Feed};
use super::params::{Hyperparameters, ModelParameters, TENSOR_NAMES};
use super::NeuralError;
use crate::corpus::EOS;

/// Denominator floor of the relative error, so that parameters whose true
/// gradient is zero are judged on absolute finite-difference noise.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    pub epsilon: f64,
    pub min_samples: usize,
    /// Lower bound of sampled parameters per tensor.
    pub per_tensor: usize,
    pub seed: u64,
    /// Corrupt this tensor's analytic gradient (`2g + 1e-2`) before comparing.
    pub corrupt: Option<String>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            min_samples: 200,
            per_tensor: 8,
            seed: 0,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorError {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    pub per_tensor: Vec<TensorError>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

fn loss(params: &ModelParameters<f64>, input: &[usize], target: &[usize]) -> Result<f64, NeuralError> {
    Ok(forward::<f64, ChaCha8Rng>(params, input, target, Feed::Teacher)?.mean_loss())
}

/// Compares the analytic gradient of the teacher-forced mean loss with
/// central differences on a stratified random subset of parameters.
pub fn gradient_check(
    params: &ModelParameters<f64>,
    input: &[usize],
    target: &[usize],
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport, NeuralError> {
    if target.is_empty() {
        return Err(NeuralError::EmptySequence);
    }
    let corrupt_idx = match &cfg.corrupt {
        Some(name) => Some(
            TENSOR_NAMES
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| NeuralError::UnknownTensor(name.clone()))?,
        ),
        None => None,
    };

    let pass = forward::<f64, ChaCha8Rng>(params, input, target, Feed::Teacher)?;
    let mut grads = ModelParameters::zeros(params.vocab_size(), &dims_of(params));
    backward(params, &pass, target, 1.0 / target.len() as f64, &mut grads);
    if let Some(k) = corrupt_idx {
        for g in grads.tensors_mut().swap_remove(k) {
            *g = 2.0 * *g + 1e-2;
        }
    }

    let sizes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let total: usize = sizes.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        per_tensor: Vec::new(),
    };

    for (k, &len) in sizes.iter().enumerate() {
        let share = (cfg.min_samples * len).div_ceil(total);
        let count = share.max(cfg.per_tensor).min(len);
        let analytic = grads.tensors()[k].to_vec();
        let mut worst = 0.0f64;
        for idx in sample(&mut rng, len, count) {
            let original = probe.tensors()[k][idx];
            probe.tensors_mut()[k][idx] = original + cfg.epsilon;
            let plus = loss(&probe, input, target)?;
            probe.tensors_mut()[k][idx] = original - cfg.epsilon;
            let minus = loss(&probe, input, target)?;
            probe.tensors_mut()[k][idx] = original;
            let numeric = (plus - minus) / (2.0 * cfg.epsilon);
            worst = worst.max(relative_error(analytic[idx], numeric));
        }
        report.checked += count;
        report.max_rel_error = report.max_rel_error.max(worst);
        report.per_tensor.push(TensorError {
            name: TENSOR_NAMES[k].to_string(),
            checked: count,
            max_rel_error: worst,
        });
    }
    Ok(report)
}

fn dims_of(params: &ModelParameters<f64>) -> Hyperparameters {
    Hyperparameters {
        embed_dim: params.embed_dim(),
        hidden_dim: params.hidden_dim(),
        latent_dim: params.latent_dim(),
        ..Hyperparameters::full()
    }
}

/// A random reduced model and sentence for gradient checking.
pub struct GradCheckProblem {
    pub params: ModelParameters<f64>,
    pub input: Vec<usize>,
    pub target: Vec<usize>,
}

impl GradCheckProblem {
    /// `len` source tokens drawn from the non-reserved ids; the target is
    /// the sentence in source order followed by EOS.
    pub fn random(vocab_size: usize, dim: usize, len: usize, init_std: f64, seed: u64) -> Self {
        let hp = Hyperparameters {
            embed_dim: dim,
            hidden_dim: dim,
            latent_dim: dim,
            init_std,
            ..Hyperparameters::full()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ModelParameters::random(vocab_size, &hp, &mut rng);
        let first = EOS + 2;
        let sentence: Vec<usize> = (0..len).map(|_| rng.random_range(first..vocab_size)).collect();
        let mut input = sentence.clone();
        input.reverse();
        let mut target = sentence;
        target.push(EOS);
        Self { params, input, target }
    }
}
