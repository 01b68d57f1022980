//! Longitudinal coded event-log data model.
//!
//! A [`Snapshot`] is an immutable extraction of an event warehouse: one
//! [`PatientRecord`] per patient, each holding demographics, an optional
//! death date, and a date-sorted list of coded events. Snapshots come from
//! delimited text files ([`io`]) or the synthetic generator ([`synth`]).

pub mod io;
pub mod synth;

use crate::dates::Day;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use synth::{generate_synthetic, generate_synthetic_with_summary, SynthConfig, SynthSummary};

/// Coding system category of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CodeCategory {
    Diagnosis,
    Procedure,
    Medication,
    Encounter,
}

impl CodeCategory {
    pub const ALL: [CodeCategory; 4] = [
        CodeCategory::Diagnosis,
        CodeCategory::Procedure,
        CodeCategory::Medication,
        CodeCategory::Encounter,
    ];

    /// Short file token (`DX`, `PX`, `RX`, `ENC`).
    pub fn token(self) -> &'static str {
        match self {
            CodeCategory::Diagnosis => "DX",
            CodeCategory::Procedure => "PX",
            CodeCategory::Medication => "RX",
            CodeCategory::Encounter => "ENC",
        }
    }
}

impl FromStr for CodeCategory {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "DX" => Ok(CodeCategory::Diagnosis),
            "PX" => Ok(CodeCategory::Procedure),
            "RX" => Ok(CodeCategory::Medication),
            "ENC" => Ok(CodeCategory::Encounter),
            _ => Err(()),
        }
    }
}

impl fmt::Display for CodeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// The encounter-type code marking an in-patient admission.
pub const INPATIENT_CODE: &str = "Inpatient";

/// One coded clinical event. The owning patient is implied by the
/// [`PatientRecord`] the event is stored under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub date: Day,
    pub category: CodeCategory,
    /// Code token: an ICD-9-style diagnosis code, CPT procedure code,
    /// RxNorm numeral, or for encounters the encounter type
    /// (e.g. `Inpatient`, `Outpatient`, `Hx Scan`).
    pub code: String,
}

/// Patient gender as recorded in the log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn token(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }

    pub fn opposite(self) -> Gender {
        match self {
            Gender::Female => Gender::Male,
            Gender::Male => Gender::Female,
        }
    }
}

impl FromStr for Gender {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "female" => Ok(Gender::Female),
            "male" => Ok(Gender::Male),
            _ => Err(()),
        }
    }
}

/// A patient's demographics, optional death date, and event history.
///
/// Events are kept sorted ascending by date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatientRecord {
    pub patient_id: String,
    pub birth_date: Day,
    pub gender: Gender,
    pub race: String,
    pub ethnicity: String,
    pub death_date: Option<Day>,
    pub events: Vec<EventRecord>,
}

impl PatientRecord {
    /// Earliest date over encounter-category events, if any. Encounters
    /// define the patient timeline; other categories do not.
    pub fn first_encounter(&self) -> Option<Day> {
        self.encounter_dates().min()
    }

    /// Latest date over encounter-category events, if any.
    pub fn last_encounter(&self) -> Option<Day> {
        self.encounter_dates().max()
    }

    fn encounter_dates(&self) -> impl Iterator<Item = Day> + '_ {
        self.events
            .iter()
            .filter(|e| e.category == CodeCategory::Encounter)
            .map(|e| e.date)
    }

    /// Whether the patient has an `Inpatient` encounter on `date`.
    pub fn has_inpatient_admission_on(&self, date: Day) -> bool {
        self.events.iter().any(|e| {
            e.category == CodeCategory::Encounter && e.date == date && e.code == INPATIENT_CODE
        })
    }

    /// Latest date the patient is known alive: death date if present,
    /// otherwise the latest event date.
    pub fn last_known_alive(&self) -> Option<Day> {
        self.death_date
            .or_else(|| self.events.iter().map(|e| e.date).max())
    }

    fn sort_events(&mut self) {
        self.events.sort_by(|a, b| a.date.cmp(&b.date));
    }
}

/// Violation of a snapshot invariant, reported with patient context.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SnapshotError {
    #[error("patient {patient_id}: event code is empty")]
    EmptyCode { patient_id: String },
    #[error("patient {patient_id}: event on {date} is after death date {death_date}")]
    EventAfterDeath {
        patient_id: String,
        date: Day,
        death_date: Day,
    },
    #[error("patient {patient_id}: event on {date} is after snapshot date {snapshot_date}")]
    EventAfterSnapshot {
        patient_id: String,
        date: Day,
        snapshot_date: Day,
    },
    #[error("patient {patient_id}: death date {death_date} is after snapshot date {snapshot_date}")]
    DeathAfterSnapshot {
        patient_id: String,
        death_date: Day,
        snapshot_date: Day,
    },
    #[error("patient {patient_id}: events are not sorted by date")]
    EventsUnsorted { patient_id: String },
    #[error("patient {patient_id}: birth date {birth_date} is after first event date {first_event}")]
    BirthAfterFirstEvent {
        patient_id: String,
        birth_date: Day,
        first_event: Day,
    },
}

/// An immutable extraction of the event warehouse at a point in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    /// Date of data extraction; no event may be dated after it.
    pub snapshot_date: Day,
    /// Patients keyed by id. `BTreeMap` so iteration order is deterministic.
    pub patients: BTreeMap<String, PatientRecord>,
}

impl Snapshot {
    /// Assemble and validate a snapshot from patient records.
    pub fn new(
        snapshot_date: Day,
        records: impl IntoIterator<Item = PatientRecord>,
    ) -> Result<Snapshot, SnapshotError> {
        let mut patients = BTreeMap::new();
        for mut record in records {
            record.sort_events();
            patients.insert(record.patient_id.clone(), record);
        }
        let snapshot = Snapshot {
            snapshot_date,
            patients,
        };
        snapshot.validate()?;
        Ok(snapshot)
    }

    /// Check every snapshot invariant, returning the first violation.
    pub fn validate(&self) -> Result<(), SnapshotError> {
        for (id, p) in &self.patients {
            if let Some(death) = p.death_date {
                if death > self.snapshot_date {
                    return Err(SnapshotError::DeathAfterSnapshot {
                        patient_id: id.clone(),
                        death_date: death,
                        snapshot_date: self.snapshot_date,
                    });
                }
            }
            let mut prev: Option<Day> = None;
            for e in &p.events {
                if e.code.is_empty() {
                    return Err(SnapshotError::EmptyCode {
                        patient_id: id.clone(),
                    });
                }
                if let Some(prev) = prev {
                    if e.date < prev {
                        return Err(SnapshotError::EventsUnsorted {
                            patient_id: id.clone(),
                        });
                    }
                }
                prev = Some(e.date);
                if let Some(death) = p.death_date {
                    if e.date > death {
                        return Err(SnapshotError::EventAfterDeath {
                            patient_id: id.clone(),
                            date: e.date,
                            death_date: death,
                        });
                    }
                }
                if e.date > self.snapshot_date {
                    return Err(SnapshotError::EventAfterSnapshot {
                        patient_id: id.clone(),
                        date: e.date,
                        snapshot_date: self.snapshot_date,
                    });
                }
            }
            if let Some(first) = p.events.first() {
                if p.birth_date > first.date {
                    return Err(SnapshotError::BirthAfterFirstEvent {
                        patient_id: id.clone(),
                        birth_date: p.birth_date,
                        first_event: first.date,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n_patients(&self) -> usize {
        self.patients.len()
    }

    pub fn n_events(&self) -> usize {
        self.patients.values().map(|p| p.events.len()).sum()
    }

    /// Fraction of patients with a recorded death date.
    pub fn death_prevalence(&self) -> f64 {
        if self.patients.is_empty() {
            return 0.0;
        }
        let deaths = self
            .patients
            .values()
            .filter(|p| p.death_date.is_some())
            .count();
        deaths as f64 / self.patients.len() as f64
    }
}
