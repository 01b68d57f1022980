//! Naive dense featurization reference.
//!
//! Walks the vocabulary descriptor by descriptor and recomputes each value
//! with direct scans over the event list, rather than assembling maps the
//! way the shipped path does. Quadratic in (vocabulary x events); fine at
//! test sizes.

use palscreen::event_log::{CodeCategory, PatientRecord};
use palscreen::features::{Demographic, FeatureDescriptor, FeatureVocabulary, Stat};
use palscreen::Day;

fn slice_bounds(slice: u8) -> (i32, i32) {
    match slice {
        1 => (0, 29),
        2 => (30, 89),
        3 => (90, 179),
        4 => (180, 365),
        _ => panic!("bad slice {slice}"),
    }
}

fn in_window(patient: &PatientRecord, pd: Day, category: CodeCategory) -> Vec<(Day, String)> {
    patient
        .events
        .iter()
        .filter(|e| e.category == category)
        .filter(|e| {
            let age = pd.days_since(e.date);
            (0..=365).contains(&age)
        })
        .map(|e| (e.date, e.code.clone()))
        .collect()
}

fn stat_value(patient: &PatientRecord, pd: Day, category: CodeCategory, stat: Stat) -> f64 {
    let events = in_window(patient, pd, category);
    if events.is_empty() {
        return 0.0;
    }
    let mut days: Vec<Day> = events.iter().map(|(d, _)| *d).collect();
    days.sort();
    days.dedup();
    let day_count = |day: Day| events.iter().filter(|(d, _)| *d == day).count() as f64;

    match stat {
        Stat::UniqueCodes => {
            let mut codes: Vec<&String> = events.iter().map(|(_, c)| c).collect();
            codes.sort();
            codes.dedup();
            codes.len() as f64
        }
        Stat::TotalCodes => events.len() as f64,
        Stat::MaxPerDay => days.iter().map(|d| day_count(*d)).fold(f64::MIN, f64::max),
        Stat::MinPerDay => days.iter().map(|d| day_count(*d)).fold(f64::MAX, f64::min),
        Stat::RangePerDay => {
            stat_value(patient, pd, category, Stat::MaxPerDay)
                - stat_value(patient, pd, category, Stat::MinPerDay)
        }
        Stat::MeanPerDay => events.len() as f64 / days.len() as f64,
        Stat::VariancePerDay => {
            let mean = events.len() as f64 / days.len() as f64;
            days.iter()
                .map(|d| {
                    let c = day_count(*d);
                    (c - mean) * (c - mean)
                })
                .sum::<f64>()
                / days.len() as f64
        }
    }
}

/// Recompute the full dense feature vector for one patient.
pub fn dense_reference(
    patient: &PatientRecord,
    pd: Day,
    vocab: &FeatureVocabulary,
) -> Vec<f64> {
    let mut dense = vec![0.0; vocab.len()];
    for (index, descriptor) in vocab.iter() {
        dense[index as usize] = match descriptor {
            FeatureDescriptor::SliceCount {
                category,
                slice,
                code,
            } => {
                let (lo, hi) = slice_bounds(*slice);
                patient
                    .events
                    .iter()
                    .filter(|e| e.category == *category && e.code == *code)
                    .filter(|e| {
                        let age = pd.days_since(e.date);
                        lo <= age && age <= hi
                    })
                    .count() as f64
            }
            FeatureDescriptor::CategoryStat { category, stat } => {
                stat_value(patient, pd, *category, *stat)
            }
            FeatureDescriptor::Demographic(Demographic::Age) => {
                (pd.days_since(patient.birth_date).max(0) as f64 / 365.25).floor()
            }
            FeatureDescriptor::Demographic(Demographic::Gender(g)) => {
                if patient.gender == *g {
                    1.0
                } else {
                    0.0
                }
            }
            FeatureDescriptor::Demographic(Demographic::Race(r)) => {
                if patient.race == *r {
                    1.0
                } else {
                    0.0
                }
            }
            FeatureDescriptor::Demographic(Demographic::Ethnicity(e)) => {
                if patient.ethnicity == *e {
                    1.0
                } else {
                    0.0
                }
            }
        };
    }
    dense
}
