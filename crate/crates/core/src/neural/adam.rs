use super::params::ModelParameters;
use super::tensor::Scalar;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    steps: i32,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(learning_rate: f64, params: &ModelParameters<T>) -> Self {
        let zeros: Vec<Vec<T>> = params.tensors().iter().map(|t| vec![T::zero(); t.len()]).collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            steps: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, params: &mut ModelParameters<T>, grads: &ModelParameters<T>) {
        self.steps += 1;
        let b1 = T::from_f64(self.beta1);
        let b2 = T::from_f64(self.beta2);
        let one = T::one();
        let bias1 = T::from_f64(1.0 - self.beta1.powi(self.steps));
        let bias2 = T::from_f64(1.0 - self.beta2.powi(self.steps));
        let lr = T::from_f64(self.learning_rate);
        let eps = T::from_f64(self.epsilon);

        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for k in 0..p.len() {
                let gk = g[k];
                m[k] = b1 * m[k] + (one - b1) * gk;
                v[k] = b2 * v[k] + (one - b2) * gk * gk;
                let m_hat = m[k] / bias1;
                let v_hat = v[k] / bias2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
