//! Adam optimizer with bias correction.

use super::{Gradients, MLPParams};
use ndarray::{Array1, Array2};

/// Step-size hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment accumulators plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m_weights: Vec<Array2<f64>>,
    m_biases: Vec<Array1<f64>>,
    v_weights: Vec<Array2<f64>>,
    v_biases: Vec<Array1<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &MLPParams) -> AdamState {
        let zero2 = |src: &[Array2<f64>]| -> Vec<Array2<f64>> {
            src.iter().map(|w| Array2::zeros(w.dim())).collect()
        };
        let zero1 = |src: &[Array1<f64>]| -> Vec<Array1<f64>> {
            src.iter().map(|b| Array1::zeros(b.len())).collect()
        };
        AdamState {
            m_weights: zero2(&params.weights),
            m_biases: zero1(&params.biases),
            v_weights: zero2(&params.weights),
            v_biases: zero1(&params.biases),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

fn update_tensor<D: ndarray::Dimension>(
    theta: &mut ndarray::Array<f64, D>,
    grad: &ndarray::Array<f64, D>,
    m: &mut ndarray::Array<f64, D>,
    v: &mut ndarray::Array<f64, D>,
    hyper: &AdamHyper,
    bias1: f64,
    bias2: f64,
) {
    ndarray::Zip::from(theta)
        .and(grad)
        .and(m)
        .and(v)
        .for_each(|t, g, m, v| {
            *m = hyper.beta1 * *m + (1.0 - hyper.beta1) * g;
            *v = hyper.beta2 * *v + (1.0 - hyper.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *t -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.epsilon);
        });
}

/// One Adam update in place: m and v decay toward the gradient and its
/// square, then the bias-corrected ratio steps the parameters.
pub fn adam_step(
    params: &mut MLPParams,
    grads: &Gradients,
    state: &mut AdamState,
    hyper: &AdamHyper,
) {
    state.t += 1;
    let bias1 = 1.0 - hyper.beta1.powi(state.t as i32);
    let bias2 = 1.0 - hyper.beta2.powi(state.t as i32);
    for l in 0..params.weights.len() {
        update_tensor(
            &mut params.weights[l],
            &grads.weights[l],
            &mut state.m_weights[l],
            &mut state.v_weights[l],
            hyper,
            bias1,
            bias2,
        );
        update_tensor(
            &mut params.biases[l],
            &grads.biases[l],
            &mut state.m_biases[l],
            &mut state.v_biases[l],
            hyper,
            bias1,
            bias2,
        );
    }
}
