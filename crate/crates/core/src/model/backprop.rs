//! Hand-derived reverse-mode gradients for the logistic loss.
//!
//! The loss is evaluated from the logit u rather than the clamped
//! probability: softplus(u) - y*u, with softplus(u) = max(u, 0) +
//! ln(1 + exp(-|u|)). That keeps both the loss and its derivative
//! sigmoid(u) - y finite for any finite logit.

use super::{forward_trace, sigmoid, MLPParams, ModelError};
use crate::features::SparseVector;
use ndarray::{Array1, Array2};

/// Per-layer gradient tensors, same shapes as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &MLPParams) -> Gradients {
        Gradients {
            weights: params
                .weights
                .iter()
                .map(|w| Array2::zeros(w.dim()))
                .collect(),
            biases: params
                .biases
                .iter()
                .map(|b| Array1::zeros(b.len()))
                .collect(),
        }
    }

    fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            *w *= factor;
        }
        for b in &mut self.biases {
            *b *= factor;
        }
    }
}

fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// Mean logistic loss over the batch and its gradients.
///
/// Gradients accumulate example by example in batch order, so the result
/// is bit-deterministic.
pub fn loss_and_gradients(
    params: &MLPParams,
    batch: &[(&SparseVector, f64)],
) -> Result<(f64, Gradients), ModelError> {
    assert!(!batch.is_empty(), "empty batch");
    let mut grads = Gradients::zeros_like(params);
    let mut loss_sum = 0.0;
    let n_hidden = params.n_layers() - 1;
    let last = params.n_layers() - 1;

    for (input, label) in batch {
        let trace = forward_trace(params, input)?;
        let u = trace.logit;
        loss_sum += softplus(u) - label * u;

        // d loss / d logit.
        let du = sigmoid(u) - label;

        grads.biases[last][0] += du;
        grads.weights[last]
            .row_mut(0)
            .scaled_add(du, &trace.post[n_hidden - 1]);

        // Backpropagate into the top hidden layer.
        let mut delta: Array1<f64> = params.weights[last].row(0).mapv(|w| w * du);
        delta.zip_mut_with(&trace.pre[n_hidden - 1], |d, z| {
            *d *= params.activation.derivative(*z)
        });

        for l in (1..n_hidden).rev() {
            for (mut row, d) in grads.weights[l].outer_iter_mut().zip(delta.iter()) {
                row.scaled_add(*d, &trace.post[l - 1]);
            }
            grads.biases[l] += &delta;
            let mut next: Array1<f64> = params.weights[l].t().dot(&delta);
            next.zip_mut_with(&trace.pre[l - 1], |d, z| {
                *d *= params.activation.derivative(*z)
            });
            delta = next;
        }

        // First layer touches only the non-zero input columns.
        for (idx, value) in input.iter() {
            grads.weights[0]
                .column_mut(idx as usize)
                .scaled_add(value, &delta);
        }
        grads.biases[0] += &delta;
    }

    let scale = 1.0 / batch.len() as f64;
    grads.scale(scale);
    let loss = loss_sum * scale;
    if !loss.is_finite() {
        return Err(ModelError::NonFinite {
            layer: params.n_layers() - 1,
        });
    }
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, ModelConfig};

    fn small_net(activation: Activation, seed: u64) -> MLPParams {
        MLPParams::init(&ModelConfig {
            input_dim: 6,
            hidden_dims: vec![5, 4],
            activation,
            seed,
        })
        .unwrap()
    }

    fn example(seed: u64) -> SparseVector {
        SparseVector::from_entries(vec![
            (0, (seed % 3) as f64 + 0.5),
            (2, 1.0),
            (5, (seed % 7) as f64 * 0.25),
        ])
    }

    #[test]
    fn logit_zero_label_one_gives_ln_two() {
        let mut p = small_net(Activation::Relu, 1);
        for w in &mut p.weights {
            w.fill(0.0);
        }
        for b in &mut p.biases {
            b.fill(0.0);
        }
        let x = example(1);
        let (loss, grads) = loss_and_gradients(&p, &[(&x, 1.0)]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        // Output-layer bias gradient is sigmoid(0) - 1 = -0.5.
        assert!((grads.biases[2][0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_gradient() {
        let mut p = small_net(Activation::Relu, 2);
        for w in &mut p.weights {
            w.fill(0.0);
        }
        for b in &mut p.biases {
            b.fill(0.0);
        }
        // Drive the logit strongly positive with the output bias.
        p.biases[2][0] = 40.0;
        let x = example(2);
        let (loss, grads) = loss_and_gradients(&p, &[(&x, 1.0)]).unwrap();
        assert!(loss < 1e-15);
        assert!(grads.biases[2][0].abs() < 1e-15);
    }

    #[test]
    fn batch_loss_is_mean_of_singles() {
        let p = small_net(Activation::Selu, 3);
        let xs: Vec<SparseVector> = (0..5).map(example).collect();
        let labels = [1.0, 0.0, 1.0, 1.0, 0.0];
        let batch: Vec<(&SparseVector, f64)> =
            xs.iter().zip(labels.iter().copied()).collect();
        let (batch_loss, batch_grads) = loss_and_gradients(&p, &batch).unwrap();

        let mut single_sum = 0.0;
        let mut grad_sum = Gradients::zeros_like(&p);
        for pair in &batch {
            let (loss, grads) = loss_and_gradients(&p, std::slice::from_ref(pair)).unwrap();
            single_sum += loss;
            for (acc, g) in grad_sum.weights.iter_mut().zip(&grads.weights) {
                *acc += g;
            }
            for (acc, g) in grad_sum.biases.iter_mut().zip(&grads.biases) {
                *acc += g;
            }
        }
        assert!((batch_loss - single_sum / 5.0).abs() < 1e-12);
        for (b, s) in batch_grads.weights.iter().zip(&grad_sum.weights) {
            let diff = (b - &(s / 5.0)).iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn non_finite_parameters_are_reported_with_layer() {
        let mut p = small_net(Activation::Tanh, 4);
        p.weights[1][[0, 0]] = f64::INFINITY;
        let x = example(4);
        assert_eq!(
            loss_and_gradients(&p, &[(&x, 0.0)]),
            Err(ModelError::NonFinite { layer: 1 })
        );
    }
}
