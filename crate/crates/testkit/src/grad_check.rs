//! Finite-difference gradient verification.
//!
//! Perturbs every individual weight and bias by a central difference step
//! and compares the numeric slope of the batch loss against the analytic
//! gradient. Slow by design; only suitable for small networks.

use palscreen::features::SparseVector;
use palscreen::model::{loss_and_gradients, MLPParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Largest relative disagreement between analytic and central-difference
/// gradients over every parameter of the network.
pub fn max_relative_gradient_error(
    params: &MLPParams,
    batch: &[(&SparseVector, f64)],
    step: f64,
) -> f64 {
    let (_, grads) = loss_and_gradients(params, batch).expect("finite baseline loss");
    let loss_at = |p: &MLPParams| loss_and_gradients(p, batch).expect("finite perturbed loss").0;

    let mut worst = 0.0f64;
    let mut probe = params.clone();
    for l in 0..params.weights.len() {
        for (idx, analytic) in grads.weights[l].indexed_iter() {
            let original = probe.weights[l][idx];
            probe.weights[l][idx] = original + step;
            let up = loss_at(&probe);
            probe.weights[l][idx] = original - step;
            let down = loss_at(&probe);
            probe.weights[l][idx] = original;
            worst = worst.max(relative_error((up - down) / (2.0 * step), *analytic));
        }
        for (idx, analytic) in grads.biases[l].indexed_iter() {
            let original = probe.biases[l][idx];
            probe.biases[l][idx] = original + step;
            let up = loss_at(&probe);
            probe.biases[l][idx] = original - step;
            let down = loss_at(&probe);
            probe.biases[l][idx] = original;
            worst = worst.max(relative_error((up - down) / (2.0 * step), *analytic));
        }
    }
    worst
}

fn relative_error(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-8)
}

/// Move biases off their all-zero init to a generic point. Zero biases make
/// fully dead relu layers emit pre-activations of exactly 0, where a finite
/// difference on the bias straddles the kink no matter how small the step.
pub fn randomize_biases(params: &mut MLPParams, rng: &mut ChaCha8Rng) {
    for b in &mut params.biases {
        for v in b.iter_mut() {
            *v = rng.gen_range(-0.5..0.5);
        }
    }
}

/// Smallest |pre-activation| over every hidden unit and example, recomputed
/// with plain loops. Central differences are invalid when a perturbation
/// can cross an activation kink (relu and selu both bend at 0), so callers
/// should re-draw batches until this clears a margin well above the step.
pub fn min_preactivation_magnitude(params: &MLPParams, batch: &[(&SparseVector, f64)]) -> f64 {
    let mut min = f64::INFINITY;
    for (x, _) in batch {
        let mut a: Vec<f64> = x.to_dense(params.input_dim());
        for l in 0..params.weights.len() - 1 {
            let w = &params.weights[l];
            let b = &params.biases[l];
            let (rows, cols) = w.dim();
            let mut next = vec![0.0; rows];
            for r in 0..rows {
                let mut z = b[r];
                for c in 0..cols {
                    z += w[(r, c)] * a[c];
                }
                min = min.min(z.abs());
                next[r] = params.activation.apply(z);
            }
            a = next;
        }
    }
    min
}

/// Random sparse inputs with 0/1 labels for gradient checking.
pub fn random_sparse_batch(
    rng: &mut ChaCha8Rng,
    input_dim: usize,
    n_examples: usize,
) -> Vec<(SparseVector, f64)> {
    (0..n_examples)
        .map(|_| {
            let nnz = rng.gen_range(1..=input_dim.min(6));
            let mut entries: Vec<(u32, f64)> = Vec::new();
            while entries.len() < nnz {
                let idx = rng.gen_range(0..input_dim) as u32;
                if entries.iter().all(|(i, _)| *i != idx) {
                    entries.push((idx, rng.gen_range(-2.0..2.0)));
                }
            }
            entries.sort_by_key(|(i, _)| *i);
            let label = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
            (SparseVector::from_entries(entries), label)
        })
        .collect()
}
