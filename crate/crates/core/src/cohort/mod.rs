//! Cohort construction over an event-log snapshot.
//!
//! Every patient contributes at most one prediction point. Deceased
//! patients are positive cases: the prediction date is the earliest
//! encounter date sitting 90 to 365 days before death with at least a year
//! of prior history. Living patients are negative cases: the prediction
//! date is the latest encounter date with a year of prior history and a
//! year of recorded follow-up afterwards. Inpatient admission dates are
//! preferred over other encounter dates before the earliest/latest rule is
//! applied; a point landing on an admission date is moved to the second day
//! of the admission and re-checked. Patients with no qualifying date are
//! excluded. All data after the prediction date is censored before
//! featurization.

pub mod io;
pub mod km;

use crate::event_log::{PatientRecord, Snapshot};
use crate::seeding::{hash_str, mix64};
use crate::Day;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// Interval constraints and split ratios for cohort construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortConfig {
    /// Minimum days between prediction date and death for a positive case.
    pub lead_min_days: i32,
    /// Maximum days between prediction date and death for a positive case.
    pub lead_max_days: i32,
    /// Minimum days of history before the prediction date.
    pub history_min_days: i32,
    /// Minimum days of recorded follow-up after a negative prediction date.
    pub followup_min_days: i32,
    /// Train / validation / test fractions; must sum to 1.
    pub split_ratios: [f64; 3],
    /// Seed for the per-patient split assignment.
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            lead_min_days: 90,
            lead_max_days: 365,
            history_min_days: 365,
            followup_min_days: 365,
            split_ratios: [0.8, 0.1, 0.1],
            seed: 42,
        }
    }
}

/// Invalid cohort configuration.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CohortConfigError {
    #[error("lead interval requires 0 < lead_min < lead_max")]
    BadLeadInterval,
    #[error("history_min_days must be positive")]
    BadHistoryMin,
    #[error("followup_min_days must be positive")]
    BadFollowupMin,
    #[error("split ratios must be positive and sum to 1")]
    BadSplitRatios,
}

impl CohortConfig {
    pub fn validate(&self) -> Result<(), CohortConfigError> {
        if !(0 < self.lead_min_days && self.lead_min_days < self.lead_max_days) {
            return Err(CohortConfigError::BadLeadInterval);
        }
        if self.history_min_days <= 0 {
            return Err(CohortConfigError::BadHistoryMin);
        }
        if self.followup_min_days <= 0 {
            return Err(CohortConfigError::BadFollowupMin);
        }
        let sum: f64 = self.split_ratios.iter().sum();
        if self.split_ratios.iter().any(|r| *r <= 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(CohortConfigError::BadSplitRatios);
        }
        Ok(())
    }
}

/// Case label of a prediction point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn token(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Dataset partition of a prediction point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn token(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One labeled example: a patient frozen at a prediction date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionPoint {
    pub patient_id: String,
    pub prediction_date: Day,
    pub label: Label,
    pub admitted: bool,
    pub split: Split,
}

fn satisfies_label_constraints(
    patient: &PatientRecord,
    date: Day,
    label: Label,
    config: &CohortConfig,
) -> bool {
    let Some(first) = patient.first_encounter() else {
        return false;
    };
    if date.days_since(first) < config.history_min_days {
        return false;
    }
    match label {
        Label::Positive => {
            let Some(death) = patient.death_date else {
                return false;
            };
            let lead = death.days_since(date);
            lead >= config.lead_min_days && lead <= config.lead_max_days
        }
        Label::Negative => {
            let Some(last) = patient.last_encounter() else {
                return false;
            };
            last.days_since(date) >= config.followup_min_days
        }
    }
}

// Inpatient admission dates are a hard filter: when any candidate date has
// one, all other candidates drop out before the earliest/latest rule.
fn prefer_inpatient(patient: &PatientRecord, candidates: BTreeSet<Day>) -> BTreeSet<Day> {
    let admitted: BTreeSet<Day> = candidates
        .iter()
        .copied()
        .filter(|d| patient.has_inpatient_admission_on(*d))
        .collect();
    if admitted.is_empty() {
        candidates
    } else {
        admitted
    }
}

fn candidate_dates(patient: &PatientRecord, label: Label, config: &CohortConfig) -> BTreeSet<Day> {
    let candidates: BTreeSet<Day> = patient
        .events
        .iter()
        .filter(|e| e.category == crate::event_log::CodeCategory::Encounter)
        .map(|e| e.date)
        .filter(|d| satisfies_label_constraints(patient, *d, label, config))
        .collect();
    prefer_inpatient(patient, candidates)
}

/// Earliest qualifying encounter date for a deceased patient, if any.
pub fn select_prediction_date_positive(
    patient: &PatientRecord,
    config: &CohortConfig,
) -> Option<Day> {
    patient.death_date?;
    candidate_dates(patient, Label::Positive, config)
        .into_iter()
        .next()
}

/// Latest qualifying encounter date for a living patient, if any.
pub fn select_prediction_date_negative(
    patient: &PatientRecord,
    config: &CohortConfig,
) -> Option<Day> {
    if patient.death_date.is_some() {
        return None;
    }
    candidate_dates(patient, Label::Negative, config)
        .into_iter()
        .next_back()
}

/// Move a prediction date landing on an inpatient admission to the second
/// day of the admission. Returns the possibly shifted date and the admitted
/// flag, or `None` when the shifted date no longer satisfies the label
/// constraints.
pub fn adjust_admitted(
    patient: &PatientRecord,
    date: Day,
    label: Label,
    config: &CohortConfig,
) -> Option<(Day, bool)> {
    if !patient.has_inpatient_admission_on(date) {
        return Some((date, false));
    }
    let shifted = date + 1;
    if satisfies_label_constraints(patient, shifted, label, config) {
        Some((shifted, true))
    } else {
        None
    }
}

/// Full per-patient selection: label from death-date presence, date from
/// the matching selector, then the admission adjustment.
pub fn select_point(
    patient: &PatientRecord,
    config: &CohortConfig,
) -> Option<(Day, bool, Label)> {
    let (label, date) = if patient.death_date.is_some() {
        (
            Label::Positive,
            select_prediction_date_positive(patient, config)?,
        )
    } else {
        (
            Label::Negative,
            select_prediction_date_negative(patient, config)?,
        )
    };
    let (date, admitted) = adjust_admitted(patient, date, label, config)?;
    Some((date, admitted, label))
}

/// Copy of the patient with every event after `prediction_date` removed.
/// The prediction date itself is kept. Demographics and the death date stay
/// on the record for labeling; featurization never reads the death date.
pub fn censor(patient: &PatientRecord, prediction_date: Day) -> PatientRecord {
    let mut censored = patient.clone();
    censored.events.retain(|e| e.date <= prediction_date);
    censored
}

/// Deterministic per-patient split assignment: hash the patient id with the
/// seed and bucket the resulting uniform draw by the cumulative ratios.
pub fn assign_split(patient_id: &str, ratios: [f64; 3], seed: u64) -> Split {
    let bits = mix64(seed ^ hash_str(patient_id));
    let u = (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    if u < ratios[0] {
        Split::Train
    } else if u < ratios[0] + ratios[1] {
        Split::Validation
    } else {
        Split::Test
    }
}

/// Reassign splits on existing points. Deterministic given the seed.
pub fn split_cohort(points: &mut [PredictionPoint], ratios: [f64; 3], seed: u64) {
    for point in points {
        point.split = assign_split(&point.patient_id, ratios, seed);
    }
}

/// Patient counts for one vital-status group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroupCounts {
    /// Patients present in the snapshot.
    pub in_ehr: usize,
    /// Patients contributing a prediction point.
    pub selected: usize,
    /// Selected patients whose prediction date fell on an inpatient
    /// admission.
    pub admitted: usize,
}

/// Cohort funnel broken down by vital status.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CohortStats {
    pub deceased: GroupCounts,
    pub alive: GroupCounts,
}

impl CohortStats {
    pub fn total(&self) -> GroupCounts {
        GroupCounts {
            in_ehr: self.deceased.in_ehr + self.alive.in_ehr,
            selected: self.deceased.selected + self.alive.selected,
            admitted: self.deceased.admitted + self.alive.admitted,
        }
    }
}

/// Run selection over every patient and assign splits. Points come out in
/// patient-id order.
pub fn build_cohort(
    snapshot: &Snapshot,
    config: &CohortConfig,
) -> Result<(Vec<PredictionPoint>, CohortStats), CohortConfigError> {
    config.validate()?;
    let mut points = Vec::new();
    let mut stats = CohortStats::default();
    for (patient_id, patient) in &snapshot.patients {
        let group = if patient.death_date.is_some() {
            &mut stats.deceased
        } else {
            &mut stats.alive
        };
        group.in_ehr += 1;
        if let Some((date, admitted, label)) = select_point(patient, config) {
            group.selected += 1;
            if admitted {
                group.admitted += 1;
            }
            points.push(PredictionPoint {
                patient_id: patient_id.clone(),
                prediction_date: date,
                label,
                admitted,
                split: assign_split(patient_id, config.split_ratios, config.seed),
            });
        }
    }
    Ok((points, stats))
}
