//! Reference implementations for test targets.
//!
//! Everything here recomputes a result by a slower, more literal route than
//! the shipped code path: exhaustive threshold sweeps, rank statistics,
//! finite differences, dense vectors. Test targets compare the fast path
//! against these. Nothing in this crate ships.

pub mod cohort_check;
pub mod dense_features;
pub mod grad_check;
pub mod histories;
pub mod metrics_oracle;
