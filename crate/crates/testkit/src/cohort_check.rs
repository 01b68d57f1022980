//! Literal re-derivation of cohort selection, written straight from the
//! constraint list with no shared helpers: scan every encounter date, test
//! each constraint by explicit loops, then apply preference, ordering, and
//! the admission shift.

use palscreen::cohort::{CohortConfig, Label, PredictionPoint};
use palscreen::event_log::{CodeCategory, PatientRecord, INPATIENT_CODE};
use palscreen::Day;

fn first_encounter(patient: &PatientRecord) -> Option<Day> {
    let mut first: Option<Day> = None;
    for e in &patient.events {
        if e.category == CodeCategory::Encounter && first.map_or(true, |f| e.date < f) {
            first = Some(e.date);
        }
    }
    first
}

fn last_encounter(patient: &PatientRecord) -> Option<Day> {
    let mut last: Option<Day> = None;
    for e in &patient.events {
        if e.category == CodeCategory::Encounter && last.map_or(true, |l| e.date > l) {
            last = Some(e.date);
        }
    }
    last
}

fn is_inpatient_date(patient: &PatientRecord, date: Day) -> bool {
    patient.events.iter().any(|e| {
        e.date == date && e.category == CodeCategory::Encounter && e.code == INPATIENT_CODE
    })
}

fn passes(patient: &PatientRecord, date: Day, label: Label, config: &CohortConfig) -> bool {
    let Some(first) = first_encounter(patient) else {
        return false;
    };
    if date.days_since(first) < config.history_min_days {
        return false;
    }
    match label {
        Label::Positive => match patient.death_date {
            Some(death) => {
                let lead = death.days_since(date);
                config.lead_min_days <= lead && lead <= config.lead_max_days
            }
            None => false,
        },
        Label::Negative => match last_encounter(patient) {
            Some(last) => last.days_since(date) >= config.followup_min_days,
            None => false,
        },
    }
}

/// Re-derive the prediction point for one patient, or `None` when the
/// patient is excluded.
pub fn reference_point(
    patient: &PatientRecord,
    config: &CohortConfig,
) -> Option<(Day, bool, Label)> {
    let label = if patient.death_date.is_some() {
        Label::Positive
    } else {
        Label::Negative
    };

    let mut candidates: Vec<Day> = Vec::new();
    for e in &patient.events {
        if e.category == CodeCategory::Encounter
            && passes(patient, e.date, label, config)
            && !candidates.contains(&e.date)
        {
            candidates.push(e.date);
        }
    }
    let inpatient_dates: Vec<Day> = candidates
        .iter()
        .copied()
        .filter(|d| is_inpatient_date(patient, *d))
        .collect();
    let pool = if inpatient_dates.is_empty() {
        candidates
    } else {
        inpatient_dates
    };
    let chosen = match label {
        Label::Positive => pool.into_iter().min()?,
        Label::Negative => pool.into_iter().max()?,
    };

    if is_inpatient_date(patient, chosen) {
        let shifted = chosen + 1;
        if passes(patient, shifted, label, config) {
            Some((shifted, true, label))
        } else {
            None
        }
    } else {
        Some((chosen, false, label))
    }
}

/// Check an emitted point against the full constraint list. Returns a
/// description of the first violated constraint.
pub fn check_point(
    patient: &PatientRecord,
    point: &PredictionPoint,
    config: &CohortConfig,
) -> Result<(), String> {
    let pd = point.prediction_date;
    match point.label {
        Label::Positive if patient.death_date.is_none() => {
            return Err("positive label without death date".into());
        }
        Label::Negative if patient.death_date.is_some() => {
            return Err("negative label with death date".into());
        }
        _ => {}
    }
    if !passes(patient, pd, point.label, config) {
        return Err(format!("interval constraints violated at {pd}"));
    }
    if point.admitted {
        if !is_inpatient_date(patient, pd - 1) {
            return Err("admitted flag without inpatient admission the day before".into());
        }
    } else {
        if is_inpatient_date(patient, pd) {
            return Err("prediction date on an admission but not flagged admitted".into());
        }
        let is_encounter_date = patient
            .events
            .iter()
            .any(|e| e.category == CodeCategory::Encounter && e.date == pd);
        if !is_encounter_date {
            return Err("prediction date is not an encounter date".into());
        }
    }
    Ok(())
}
