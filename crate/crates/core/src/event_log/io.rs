//! Snapshot file ingestion and emission.
//!
//! Both files are UTF-8, tab-separated, one record per line, with a
//! required header line:
//!
//! * patients file: `patient_id  birth_date  gender  race  ethnicity  death_date`
//!   (ISO-8601 dates, `death_date` empty for living patients)
//! * events file: `patient_id  date  category  code` with category tokens
//!   `DX`, `PX`, `RX`, `ENC`

use super::{CodeCategory, EventRecord, Gender, PatientRecord, Snapshot, SnapshotError};
use crate::dates::Day;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const PATIENTS_HEADER: &str = "patient_id\tbirth_date\tgender\trace\tethnicity\tdeath_date";
pub const EVENTS_HEADER: &str = "patient_id\tdate\tcategory\tcode";

/// Error while loading or writing snapshot files.
#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed line: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}:1: missing or wrong header (expected {expected:?})")]
    BadHeader { path: PathBuf, expected: String },
    #[error("{path}:{line}: duplicate patient id {patient_id}")]
    DuplicatePatient {
        path: PathBuf,
        line: usize,
        patient_id: String,
    },
    #[error("{path}:{line}: event references unknown patient {patient_id}")]
    UnknownPatient {
        path: PathBuf,
        line: usize,
        patient_id: String,
    },
    #[error("{path}:{line}: patient {patient_id}: event on {date} is after death date {death_date}")]
    EventAfterDeath {
        path: PathBuf,
        line: usize,
        patient_id: String,
        date: Day,
        death_date: Day,
    },
    #[error(transparent)]
    Invalid(#[from] SnapshotError),
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> LoadError + '_ {
    move |source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> LoadError {
    LoadError::Malformed {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Load and validate a snapshot from a patients file and an events file.
///
/// Events are grouped per patient and sorted ascending by date; events with
/// equal dates keep file order. The snapshot date is taken as the latest
/// date observed in either file (the files do not carry it).
pub fn load_snapshot(patients_path: &Path, events_path: &Path) -> Result<Snapshot, LoadError> {
    let mut patients = read_patients(patients_path)?;
    let max_event_date = read_events_into(events_path, &mut patients)?;

    let snapshot_date = patients
        .values()
        .filter_map(|p| p.death_date)
        .chain(max_event_date)
        .max()
        .unwrap_or(Day(0));

    let mut snapshot = Snapshot {
        snapshot_date,
        patients,
    };
    for p in snapshot.patients.values_mut() {
        p.events.sort_by(|a, b| a.date.cmp(&b.date));
    }
    snapshot.validate()?;
    Ok(snapshot)
}

fn read_patients(path: &Path) -> Result<BTreeMap<String, PatientRecord>, LoadError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    match lines.next() {
        Some((_, Ok(header))) if header == PATIENTS_HEADER => {}
        Some((_, Err(e))) => return Err(io_err(path)(e)),
        _ => {
            return Err(LoadError::BadHeader {
                path: path.to_path_buf(),
                expected: PATIENTS_HEADER.to_string(),
            })
        }
    }

    let mut patients = BTreeMap::new();
    for (idx, line) in lines {
        let line = line.map_err(io_err(path))?;
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(malformed(
                path,
                lineno,
                format!("expected 6 tab-separated fields, got {}", fields.len()),
            ));
        }
        let patient_id = fields[0].to_string();
        if patient_id.is_empty() {
            return Err(malformed(path, lineno, "empty patient_id"));
        }
        let birth_date = Day::parse_iso(fields[1])
            .map_err(|e| malformed(path, lineno, e.to_string()))?;
        let gender: Gender = fields[2]
            .parse()
            .map_err(|_| malformed(path, lineno, format!("unknown gender {:?}", fields[2])))?;
        let death_date = if fields[5].is_empty() {
            None
        } else {
            Some(Day::parse_iso(fields[5]).map_err(|e| malformed(path, lineno, e.to_string()))?)
        };
        let record = PatientRecord {
            patient_id: patient_id.clone(),
            birth_date,
            gender,
            race: fields[3].to_string(),
            ethnicity: fields[4].to_string(),
            death_date,
            events: Vec::new(),
        };
        if patients.insert(patient_id.clone(), record).is_some() {
            return Err(LoadError::DuplicatePatient {
                path: path.to_path_buf(),
                line: lineno,
                patient_id,
            });
        }
    }
    Ok(patients)
}

fn read_events_into(
    path: &Path,
    patients: &mut BTreeMap<String, PatientRecord>,
) -> Result<Option<Day>, LoadError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    match lines.next() {
        Some((_, Ok(header))) if header == EVENTS_HEADER => {}
        Some((_, Err(e))) => return Err(io_err(path)(e)),
        _ => {
            return Err(LoadError::BadHeader {
                path: path.to_path_buf(),
                expected: EVENTS_HEADER.to_string(),
            })
        }
    }

    let mut max_date: Option<Day> = None;
    for (idx, line) in lines {
        let line = line.map_err(io_err(path))?;
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(malformed(
                path,
                lineno,
                format!("expected 4 tab-separated fields, got {}", fields.len()),
            ));
        }
        let date =
            Day::parse_iso(fields[1]).map_err(|e| malformed(path, lineno, e.to_string()))?;
        let category: CodeCategory = fields[2]
            .parse()
            .map_err(|_| malformed(path, lineno, format!("unknown category {:?}", fields[2])))?;
        let code = fields[3].to_string();
        if code.is_empty() {
            return Err(malformed(path, lineno, "empty code"));
        }
        let patient = patients.get_mut(fields[0]).ok_or_else(|| {
            LoadError::UnknownPatient {
                path: path.to_path_buf(),
                line: lineno,
                patient_id: fields[0].to_string(),
            }
        })?;
        if let Some(death) = patient.death_date {
            if date > death {
                return Err(LoadError::EventAfterDeath {
                    path: path.to_path_buf(),
                    line: lineno,
                    patient_id: patient.patient_id.clone(),
                    date,
                    death_date: death,
                });
            }
        }
        max_date = Some(max_date.map_or(date, |m| m.max(date)));
        patient.events.push(EventRecord {
            date,
            category,
            code,
        });
    }
    Ok(max_date)
}

/// Write a snapshot as a patients file and an events file.
///
/// Patients are written in id order and events in stored (date) order, so
/// output bytes are deterministic for a given snapshot.
pub fn write_snapshot(
    snapshot: &Snapshot,
    patients_path: &Path,
    events_path: &Path,
) -> Result<(), LoadError> {
    let mut pw = BufWriter::new(File::create(patients_path).map_err(io_err(patients_path))?);
    writeln!(pw, "{PATIENTS_HEADER}").map_err(io_err(patients_path))?;
    for p in snapshot.patients.values() {
        let death = p.death_date.map_or(String::new(), |d| d.to_iso());
        writeln!(
            pw,
            "{}\t{}\t{}\t{}\t{}\t{}",
            p.patient_id,
            p.birth_date.to_iso(),
            p.gender.token(),
            p.race,
            p.ethnicity,
            death
        )
        .map_err(io_err(patients_path))?;
    }
    pw.flush().map_err(io_err(patients_path))?;

    let mut ew = BufWriter::new(File::create(events_path).map_err(io_err(events_path))?);
    writeln!(ew, "{EVENTS_HEADER}").map_err(io_err(events_path))?;
    for p in snapshot.patients.values() {
        for e in &p.events {
            writeln!(
                ew,
                "{}\t{}\t{}\t{}",
                p.patient_id,
                e.date.to_iso(),
                e.category.token(),
                e.code
            )
            .map_err(io_err(events_path))?;
        }
    }
    ew.flush().map_err(io_err(events_path))?;
    Ok(())
}
