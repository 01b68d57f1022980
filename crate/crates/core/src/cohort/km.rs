//! Kaplan-Meier estimation of censoring-length curves.
//!
//! Used descriptively: one curve per label class over time from prediction
//! date to death (event) or last-known-alive date (censoring). Positive
//! cases die within the lead window by construction, so their curve reaches
//! 0 by 365 days; negative cases contribute no deaths, so theirs stays at 1.

use super::{Label, PredictionPoint};
use crate::event_log::Snapshot;

/// A survival step function. `points[i]` gives the survival fraction from
/// `points[i].0` (inclusive) until the next time.
#[derive(Debug, Clone, PartialEq)]
pub struct KMCurve {
    pub points: Vec<(i32, f64)>,
}

impl KMCurve {
    /// Survival at time `t`: the value of the latest step at or before `t`.
    /// Before the first point the curve is 1.
    pub fn survival_at(&self, t: i32) -> f64 {
        self.points
            .iter()
            .take_while(|(time, _)| *time <= t)
            .last()
            .map_or(1.0, |(_, s)| *s)
    }
}

/// Product-limit estimator. `durations[i]` is the follow-up length of
/// subject `i`; `event[i]` is true for a death, false for censoring.
/// Subjects censored at a death time count as still at risk at that time.
pub fn km(durations: &[i32], event: &[bool]) -> KMCurve {
    assert_eq!(durations.len(), event.len());
    let mut death_times: Vec<i32> = durations
        .iter()
        .zip(event)
        .filter(|(_, e)| **e)
        .map(|(d, _)| *d)
        .collect();
    death_times.sort_unstable();
    death_times.dedup();

    let mut points = Vec::with_capacity(death_times.len() + 1);
    if death_times.first() != Some(&0) {
        points.push((0, 1.0));
    }
    let mut survival = 1.0;
    for t in death_times {
        let at_risk = durations.iter().filter(|d| **d >= t).count();
        let deaths = durations
            .iter()
            .zip(event)
            .filter(|(d, e)| **d == t && **e)
            .count();
        survival *= 1.0 - deaths as f64 / at_risk as f64;
        points.push((t, survival));
    }
    KMCurve { points }
}

/// Follow-up inputs for one label class could not be derived.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KMError {
    #[error("prediction point references unknown patient {0:?}")]
    UnknownPatient(String),
    #[error("patient {0:?} has no follow-up endpoint")]
    NoEndpoint(String),
}

/// Censor-length curves per label class.
#[derive(Debug, Clone, PartialEq)]
pub struct CensorCurves {
    pub positive: KMCurve,
    pub negative: KMCurve,
}

/// Follow-up time runs from the prediction date to death for positives and
/// to the last-known-alive date for negatives (always censored).
pub fn km_censor_curve(
    points: &[PredictionPoint],
    snapshot: &Snapshot,
) -> Result<CensorCurves, KMError> {
    let mut durations = [Vec::new(), Vec::new()];
    let mut events = [Vec::new(), Vec::new()];
    for point in points {
        let patient = snapshot
            .patients
            .get(&point.patient_id)
            .ok_or_else(|| KMError::UnknownPatient(point.patient_id.clone()))?;
        let class = if point.label == Label::Positive { 0 } else { 1 };
        let (endpoint, died) = match point.label {
            Label::Positive => (
                patient
                    .death_date
                    .ok_or_else(|| KMError::NoEndpoint(point.patient_id.clone()))?,
                true,
            ),
            Label::Negative => (
                patient
                    .last_known_alive()
                    .ok_or_else(|| KMError::NoEndpoint(point.patient_id.clone()))?,
                false,
            ),
        };
        durations[class].push(endpoint.days_since(point.prediction_date));
        events[class].push(died);
    }
    Ok(CensorCurves {
        positive: km(&durations[0], &events[0]),
        negative: km(&durations[1], &events[1]),
    })
}
