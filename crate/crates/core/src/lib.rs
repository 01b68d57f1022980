//! Mortality-risk screening over longitudinal coded event logs.
//!
//! The pipeline turns a snapshot of per-patient coded events (diagnoses,
//! procedures, medications, encounters) into a calibrated 3-12 month
//! all-cause mortality classifier:
//!
//! 1. [`event_log`]: data model, file ingestion, and a synthetic
//!    population generator with a controllable mortality signal.
//! 2. [`cohort`]: label assignment, prediction-date selection under
//!    timeline constraints, censoring, splits, and censor-length
//!    Kaplan-Meier curves.
//! 3. [`features`]: observation-slice code counts, per-category summary
//!    statistics, and demographics as pruned sparse vectors.
//! 4. [`model`]: a from-scratch deep feedforward classifier with
//!    hand-derived backpropagation and Adam.
//! 5. [`eval`]: precision-recall / ROC / calibration metrics with
//!    admitted-subgroup breakdowns.
//! 6. [`explain`]: per-patient code-ablation influence reports.

pub mod cohort;
pub mod dates;
pub mod eval;
pub mod event_log;
pub mod explain;
pub mod features;
pub mod model;

mod seeding;

pub use dates::Day;
pub use seeding::{hash_str, mix64};
