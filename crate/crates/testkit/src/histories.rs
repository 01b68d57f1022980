//! Randomized patient timelines for property and constraint tests.
//!
//! Unlike the shipped synthetic generator, these histories are adversarial:
//! death dates may sit anywhere relative to the encounter timeline, gaps and
//! pile-ups are common, and some patients have no encounters at all. That is
//! the point: cohort selection must hold up on degenerate timelines, not
//! just on well-formed ones.

use palscreen::event_log::{CodeCategory, EventRecord, Gender, PatientRecord};
use palscreen::Day;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CODES: [&str; 8] = ["A", "B", "C", "D:1", "D:2", "E", "F", "G"];
const ENCOUNTERS: [&str; 4] = ["Inpatient", "Outpatient", "Office Visit", "Hx Scan"];

/// One random patient with 0..=60 events over a ~4 year window, a death date
/// on roughly a third of draws (sometimes before the last event is even
/// possible to keep, so callers should clamp), and mixed categories.
pub fn random_patient(rng: &mut ChaCha8Rng, id: usize) -> PatientRecord {
    let n_events = rng.gen_range(0..=60);
    let horizon = rng.gen_range(400..1500);
    let mut events = Vec::with_capacity(n_events);
    for _ in 0..n_events {
        let date = Day(rng.gen_range(0..=horizon));
        let category = match rng.gen_range(0..4) {
            0 => CodeCategory::Diagnosis,
            1 => CodeCategory::Procedure,
            2 => CodeCategory::Medication,
            _ => CodeCategory::Encounter,
        };
        let code = match category {
            CodeCategory::Encounter => ENCOUNTERS[rng.gen_range(0..ENCOUNTERS.len())],
            _ => CODES[rng.gen_range(0..CODES.len())],
        };
        events.push(EventRecord {
            date,
            category,
            code: code.to_string(),
        });
    }
    events.sort_by(|a, b| (a.date, a.category, &a.code).cmp(&(b.date, b.category, &b.code)));

    let last_event = events.last().map_or(0, |e| e.date.0);
    let death_date = if rng.gen_bool(0.35) {
        Some(Day(rng.gen_range(last_event..=last_event + 800)))
    } else {
        None
    };

    PatientRecord {
        patient_id: format!("T{id:05}"),
        birth_date: Day(-rng.gen_range(7_000..30_000)),
        gender: if rng.gen_bool(0.5) {
            Gender::Female
        } else {
            Gender::Male
        },
        race: "other".to_string(),
        ethnicity: "unknown".to_string(),
        death_date,
        events,
    }
}

/// A fresh deterministic stream of random patients.
pub fn patient_stream(seed: u64) -> impl Iterator<Item = PatientRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..).map(move |id| random_patient(&mut rng, id))
}
