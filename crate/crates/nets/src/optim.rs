use serde::{Deserialize, Serialize};

use crate::network::{Grads, Network};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    /// Plain gradient descent on the whole training set each epoch.
    FullBatchGd,
    /// Adam over shuffled mini-batches (or the full set when no batch size is given).
    Adam,
}

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators shaped like the model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub hyper: Adam,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new<N: Network>(model: &N, hyper: Adam) -> AdamState {
        let zeros: Vec<Vec<f64>> = model.params().iter().map(|p| vec![0.0; p.len()]).collect();
        AdamState {
            hyper,
            first: zeros.clone(),
            second: zeros,
            step: 0,
        }
    }

    /// One bias-corrected Adam update.
    pub fn apply<N: Network>(&mut self, model: &mut N, grads: &Grads, lr: f64) {
        self.step += 1;
        let Adam { beta1, beta2, epsilon } = self.hyper;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in model
            .params_mut()
            .into_iter()
            .zip(&grads.0)
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}

/// `θ ← θ − lr·g`.
pub fn sgd_step<N: Network>(model: &mut N, grads: &Grads, lr: f64) {
    for (p, g) in model.params_mut().into_iter().zip(&grads.0) {
        for (pi, gi) in p.iter_mut().zip(g) {
            *pi -= lr * gi;
        }
    }
}
