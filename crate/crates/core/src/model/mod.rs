//! From-scratch deep feedforward binary classifier.
//!
//! Dense affine layers with a choice of SeLU, ReLU, or tanh activations and
//! a scalar sigmoid output. The first-layer product walks the sparse input
//! (cost proportional to non-zeros x width). Backpropagation and Adam are
//! hand-written; everything is f64 and bit-deterministic given a seed.

pub mod adam;
pub mod backprop;
pub mod io;
pub mod train;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use backprop::{loss_and_gradients, Gradients};
pub use train::{train, TrainConfig, TrainError, TrainLogEntry, TrainOutcome};

use crate::features::SparseVector;
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::fmt;
use std::str::FromStr;

pub const SELU_LAMBDA: f64 = 1.0507009873554805;
pub const SELU_ALPHA: f64 = 1.6732632423543772;

// Probabilities are clamped away from {0, 1} so logistic terms stay finite.
const PROB_CLAMP: f64 = 1e-12;

/// Hidden-layer activation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Selu,
    Relu,
    Tanh,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Selu, Activation::Relu, Activation::Tanh];

    pub fn token(self) -> &'static str {
        match self {
            Activation::Selu => "selu",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA * x
                } else {
                    SELU_LAMBDA * SELU_ALPHA * (x.exp() - 1.0)
                }
            }
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA
                } else {
                    SELU_LAMBDA * SELU_ALPHA * x.exp()
                }
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Activation::ALL
            .into_iter()
            .find(|a| a.token() == s)
            .ok_or_else(|| format!("unknown activation {s:?}"))
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Network shape and initialization seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelConfigError {
    #[error("input_dim must be positive")]
    BadInputDim,
    #[error("hidden layer widths must be positive, with at least one layer")]
    BadHiddenDims,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelConfigError> {
        if self.input_dim == 0 {
            return Err(ModelConfigError::BadInputDim);
        }
        if self.hidden_dims.is_empty() || self.hidden_dims.iter().any(|w| *w == 0) {
            return Err(ModelConfigError::BadHiddenDims);
        }
        Ok(())
    }
}

/// Model parameters. `weights[l]` is (out x in); layer 0 consumes the
/// input, the last layer emits the scalar logit.
#[derive(Debug, Clone, PartialEq)]
pub struct MLPParams {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub activation: Activation,
}

/// Numeric failure inside the network.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("non-finite values at layer {layer}")]
    NonFinite { layer: usize },
}

impl MLPParams {
    /// Zero-mean normal weights with standard deviation 1/sqrt(fan_in),
    /// zero biases (the variance-preserving choice for self-normalizing
    /// nets). Deterministic given the config seed.
    pub fn init(config: &ModelConfig) -> Result<MLPParams, ModelConfigError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut dims = vec![config.input_dim];
        dims.extend_from_slice(&config.hidden_dims);
        dims.push(1);

        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let normal = Normal::new(0.0, 1.0 / (fan_in as f64).sqrt()).unwrap();
            weights.push(Array2::from_shape_fn((fan_out, fan_in), |_| {
                normal.sample(&mut rng)
            }));
            biases.push(Array1::zeros(fan_out));
        }
        Ok(MLPParams {
            weights,
            biases,
            activation: config.activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn hidden_dims(&self) -> Vec<usize> {
        self.weights[..self.weights.len() - 1]
            .iter()
            .map(|w| w.nrows())
            .collect()
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    /// Index of the first layer holding a non-finite entry, if any.
    pub fn first_non_finite_layer(&self) -> Option<usize> {
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            if w.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
                return Some(l);
            }
        }
        None
    }
}

/// Forward-pass intermediates for one example, kept for backpropagation.
/// `pre[l]` and `post[l]` are the affine output and activation of hidden
/// layer `l`.
pub(crate) struct ForwardTrace {
    pub pre: Vec<Array1<f64>>,
    pub post: Vec<Array1<f64>>,
    pub logit: f64,
}

pub(crate) fn forward_trace(
    params: &MLPParams,
    input: &SparseVector,
) -> Result<ForwardTrace, ModelError> {
    assert!(
        input.min_dim() <= params.input_dim(),
        "input index {} exceeds model input dimension {}",
        input.min_dim(),
        params.input_dim()
    );
    let n_hidden = params.n_layers() - 1;
    let mut pre = Vec::with_capacity(n_hidden);
    let mut post = Vec::with_capacity(n_hidden);

    for l in 0..n_hidden {
        let mut z = params.biases[l].clone();
        if l == 0 {
            for (idx, value) in input.iter() {
                z.scaled_add(value, &params.weights[0].column(idx as usize));
            }
        } else {
            z += &params.weights[l].dot(&post[l - 1]);
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { layer: l });
        }
        let a = z.mapv(|v| params.activation.apply(v));
        pre.push(z);
        post.push(a);
    }

    let last = params.n_layers() - 1;
    let logit = params.weights[last].row(0).dot(&post[n_hidden - 1]) + params.biases[last][0];
    if !logit.is_finite() {
        return Err(ModelError::NonFinite { layer: last });
    }
    Ok(ForwardTrace { pre, post, logit })
}

/// Numerically stable sigmoid.
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Predicted probability, clamped inside (0, 1).
///
/// # Panics
/// On inputs beyond the model's input dimension or non-finite parameters;
/// both indicate a corrupted pipeline rather than recoverable input.
pub fn forward(params: &MLPParams, input: &SparseVector) -> f64 {
    let trace = forward_trace(params, input).expect("non-finite forward pass");
    sigmoid(trace.logit).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}
