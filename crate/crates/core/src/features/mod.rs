//! Featurization of a censored patient record at a prediction date.
//!
//! The observation window is the 365 days ending at the prediction date,
//! cut into four slices of widths 30, 60, 90, and 185 days (recent history
//! at finer grain). Three feature families are concatenated:
//!
//! * per-slice occurrence counts of every (category, code) pair,
//! * seven per-category summary statistics over the whole window,
//! * demographics (age, gender indicators, race and ethnicity one-hots).
//!
//! Slice-count descriptors seen by too few training patients are pruned
//! from the vocabulary; statistics and demographics are always kept. All
//! emitted values are non-negative, which the ablation explainer relies on.

pub mod io;
pub mod sparse;

pub use sparse::{SparseMatrix, SparseVector};

use crate::cohort::PredictionPoint;
use crate::event_log::{CodeCategory, Gender, PatientRecord, Snapshot};
use crate::Day;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// Observation window length in days, ending at the prediction date.
pub const WINDOW_DAYS: i32 = 365;

/// Number of observation slices.
pub const N_SLICES: u8 = 4;

/// Slice for an event `age_days` before the prediction date, or `None`
/// when the event is outside the window (future events included).
pub fn slice_of_age(age_days: i32) -> Option<u8> {
    match age_days {
        a if a < 0 => None,
        a if a < 30 => Some(1),
        a if a < 90 => Some(2),
        a if a < 180 => Some(3),
        a if a <= WINDOW_DAYS => Some(4),
        _ => None,
    }
}

/// Per-category summary statistics, computed over active days (days with
/// at least one event of the category) in the observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stat {
    UniqueCodes,
    TotalCodes,
    MaxPerDay,
    MinPerDay,
    RangePerDay,
    MeanPerDay,
    VariancePerDay,
}

impl Stat {
    pub const ALL: [Stat; 7] = [
        Stat::UniqueCodes,
        Stat::TotalCodes,
        Stat::MaxPerDay,
        Stat::MinPerDay,
        Stat::RangePerDay,
        Stat::MeanPerDay,
        Stat::VariancePerDay,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Stat::UniqueCodes => "unique_codes",
            Stat::TotalCodes => "total_codes",
            Stat::MaxPerDay => "max_per_day",
            Stat::MinPerDay => "min_per_day",
            Stat::RangePerDay => "range_per_day",
            Stat::MeanPerDay => "mean_per_day",
            Stat::VariancePerDay => "variance_per_day",
        }
    }

    fn from_token(s: &str) -> Option<Stat> {
        Stat::ALL.into_iter().find(|stat| stat.token() == s)
    }
}

/// Demographic feature identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Demographic {
    Age,
    Gender(Gender),
    Race(String),
    Ethnicity(String),
}

/// Identity of one feature column. The derived ordering is the vocabulary
/// ordering: slice counts by (category, slice, code), then statistics by
/// (category, stat), then demographics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureDescriptor {
    SliceCount {
        category: CodeCategory,
        slice: u8,
        code: String,
    },
    CategoryStat {
        category: CodeCategory,
        stat: Stat,
    },
    Demographic(Demographic),
}

impl FeatureDescriptor {
    /// Token grammar: `slice{k}:{CAT}:{code}`, `stat:{CAT}:{stat_name}`,
    /// `demo:age`, `demo:gender:{female|male}`, `demo:race:{token}`,
    /// `demo:ethnicity:{token}`. Codes may themselves contain colons; the
    /// leading two fields never do.
    pub fn token(&self) -> String {
        match self {
            FeatureDescriptor::SliceCount {
                category,
                slice,
                code,
            } => format!("slice{slice}:{}:{code}", category.token()),
            FeatureDescriptor::CategoryStat { category, stat } => {
                format!("stat:{}:{}", category.token(), stat.token())
            }
            FeatureDescriptor::Demographic(Demographic::Age) => "demo:age".to_string(),
            FeatureDescriptor::Demographic(Demographic::Gender(g)) => {
                format!("demo:gender:{}", g.token())
            }
            FeatureDescriptor::Demographic(Demographic::Race(r)) => format!("demo:race:{r}"),
            FeatureDescriptor::Demographic(Demographic::Ethnicity(e)) => {
                format!("demo:ethnicity:{e}")
            }
        }
    }

    pub fn parse_token(token: &str) -> Option<FeatureDescriptor> {
        let mut parts = token.splitn(3, ':');
        let head = parts.next()?;
        match head {
            "demo" => match parts.next()? {
                "age" => Some(FeatureDescriptor::Demographic(Demographic::Age)),
                "gender" => {
                    let g = match parts.next()? {
                        "female" => Gender::Female,
                        "male" => Gender::Male,
                        _ => return None,
                    };
                    Some(FeatureDescriptor::Demographic(Demographic::Gender(g)))
                }
                "race" => Some(FeatureDescriptor::Demographic(Demographic::Race(
                    parts.next()?.to_string(),
                ))),
                "ethnicity" => Some(FeatureDescriptor::Demographic(Demographic::Ethnicity(
                    parts.next()?.to_string(),
                ))),
                _ => None,
            },
            "stat" => {
                let category: CodeCategory = parts.next()?.parse().ok()?;
                let stat = Stat::from_token(parts.next()?)?;
                Some(FeatureDescriptor::CategoryStat { category, stat })
            }
            _ => {
                let slice = head.strip_prefix("slice")?.parse::<u8>().ok()?;
                if !(1..=N_SLICES).contains(&slice) {
                    return None;
                }
                let category: CodeCategory = parts.next()?.parse().ok()?;
                let code = parts.next()?.to_string();
                Some(FeatureDescriptor::SliceCount {
                    category,
                    slice,
                    code,
                })
            }
        }
    }
}

impl fmt::Display for FeatureDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

/// Immutable index <-> descriptor bijection.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVocabulary {
    descriptors: Vec<FeatureDescriptor>,
    index: HashMap<FeatureDescriptor, u32>,
    /// Pruning threshold the vocabulary was built with: slice-count
    /// descriptors were kept iff seen in strictly more training patients.
    pub min_patient_count: u32,
}

/// Vocabulary construction failure.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabularyError {
    #[error("vocabulary requires a non-empty training set")]
    EmptyTrainingSet,
    #[error("prediction point references unknown patient {0:?}")]
    UnknownPatient(String),
    #[error("duplicate descriptor {0:?}")]
    DuplicateDescriptor(String),
}

impl FeatureVocabulary {
    pub fn from_descriptors(
        descriptors: Vec<FeatureDescriptor>,
        min_patient_count: u32,
    ) -> Result<FeatureVocabulary, VocabularyError> {
        let mut index = HashMap::with_capacity(descriptors.len());
        for (i, d) in descriptors.iter().enumerate() {
            if index.insert(d.clone(), i as u32).is_some() {
                return Err(VocabularyError::DuplicateDescriptor(d.token()));
            }
        }
        Ok(FeatureVocabulary {
            descriptors,
            index,
            min_patient_count,
        })
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn descriptor(&self, index: u32) -> &FeatureDescriptor {
        &self.descriptors[index as usize]
    }

    pub fn index_of(&self, descriptor: &FeatureDescriptor) -> Option<u32> {
        self.index.get(descriptor).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &FeatureDescriptor)> {
        self.descriptors
            .iter()
            .enumerate()
            .map(|(i, d)| (i as u32, d))
    }
}

/// Occurrence counts keyed by (category, slice, code), window-filtered.
/// The key order equals the vocabulary order of slice-count descriptors.
pub fn slice_counts<'a>(
    patient: &'a PatientRecord,
    prediction_date: Day,
) -> BTreeMap<(CodeCategory, u8, &'a str), u32> {
    let mut counts = BTreeMap::new();
    for event in &patient.events {
        let age = prediction_date.days_since(event.date);
        if let Some(slice) = slice_of_age(age) {
            *counts
                .entry((event.category, slice, event.code.as_str()))
                .or_insert(0) += 1;
        }
    }
    counts
}

/// The seven summary statistics for one category over the window, in
/// [`Stat::ALL`] order. All zero when the category has no in-window events.
pub fn category_stats(
    patient: &PatientRecord,
    prediction_date: Day,
    category: CodeCategory,
) -> [f64; 7] {
    let mut per_day: BTreeMap<Day, u32> = BTreeMap::new();
    let mut unique: BTreeSet<&str> = BTreeSet::new();
    for event in &patient.events {
        if event.category != category {
            continue;
        }
        let age = prediction_date.days_since(event.date);
        if !(0..=WINDOW_DAYS).contains(&age) {
            continue;
        }
        *per_day.entry(event.date).or_insert(0) += 1;
        unique.insert(&event.code);
    }
    if per_day.is_empty() {
        return [0.0; 7];
    }
    let counts: Vec<f64> = per_day.values().map(|c| *c as f64).collect();
    let total: f64 = counts.iter().sum();
    let max = counts.iter().copied().fold(f64::MIN, f64::max);
    let min = counts.iter().copied().fold(f64::MAX, f64::min);
    let mean = total / counts.len() as f64;
    let variance =
        counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / counts.len() as f64;
    [
        unique.len() as f64,
        total,
        max,
        min,
        max - min,
        mean,
        variance,
    ]
}

/// Demographic feature inputs at the prediction date.
#[derive(Debug, Clone, PartialEq)]
pub struct DemographicFeatures {
    pub age_years: i32,
    pub gender: Gender,
    pub race: String,
    pub ethnicity: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DemographicsError {
    #[error("prediction date precedes birth date")]
    BeforeBirth,
}

/// Age in whole years (floor over mean year length) plus the categorical
/// fields as recorded.
pub fn demographics(
    patient: &PatientRecord,
    prediction_date: Day,
) -> Result<DemographicFeatures, DemographicsError> {
    let days = prediction_date.days_since(patient.birth_date);
    if days < 0 {
        return Err(DemographicsError::BeforeBirth);
    }
    Ok(DemographicFeatures {
        age_years: (days as f64 / 365.25).floor() as i32,
        gender: patient.gender,
        race: patient.race.clone(),
        ethnicity: patient.ethnicity.clone(),
    })
}

/// Build the vocabulary from training points. A slice-count descriptor is
/// kept iff strictly more than `min_patient_count` distinct training
/// patients have a non-zero count for it; statistics and demographics are
/// exempt. Callers pass the training split only, so pruning and the one-hot
/// token sets never see validation or test patients.
pub fn build_vocabulary(
    points: &[PredictionPoint],
    snapshot: &Snapshot,
    min_patient_count: u32,
) -> Result<FeatureVocabulary, VocabularyError> {
    if points.is_empty() {
        return Err(VocabularyError::EmptyTrainingSet);
    }
    let mut patient_counts: BTreeMap<(CodeCategory, u8, String), u32> = BTreeMap::new();
    let mut races: BTreeSet<String> = BTreeSet::new();
    let mut ethnicities: BTreeSet<String> = BTreeSet::new();
    for point in points {
        let patient = snapshot
            .patients
            .get(&point.patient_id)
            .ok_or_else(|| VocabularyError::UnknownPatient(point.patient_id.clone()))?;
        for (category, slice, code) in slice_counts(patient, point.prediction_date).keys() {
            *patient_counts
                .entry((*category, *slice, code.to_string()))
                .or_insert(0) += 1;
        }
        races.insert(patient.race.clone());
        ethnicities.insert(patient.ethnicity.clone());
    }

    let mut descriptors = Vec::new();
    for ((category, slice, code), n_patients) in patient_counts {
        if n_patients > min_patient_count {
            descriptors.push(FeatureDescriptor::SliceCount {
                category,
                slice,
                code,
            });
        }
    }
    for category in CodeCategory::ALL {
        for stat in Stat::ALL {
            descriptors.push(FeatureDescriptor::CategoryStat { category, stat });
        }
    }
    descriptors.push(FeatureDescriptor::Demographic(Demographic::Age));
    descriptors.push(FeatureDescriptor::Demographic(Demographic::Gender(
        Gender::Female,
    )));
    descriptors.push(FeatureDescriptor::Demographic(Demographic::Gender(
        Gender::Male,
    )));
    for race in races {
        descriptors.push(FeatureDescriptor::Demographic(Demographic::Race(race)));
    }
    for ethnicity in ethnicities {
        descriptors.push(FeatureDescriptor::Demographic(Demographic::Ethnicity(
            ethnicity,
        )));
    }
    FeatureVocabulary::from_descriptors(descriptors, min_patient_count)
}

/// Assemble the sparse feature vector for one patient at a prediction
/// date. Descriptors absent from the vocabulary (pruned or unseen in
/// training) are silently dropped. Events after the prediction date never
/// contribute, so featurizing an uncensored record is safe.
pub fn featurize(
    patient: &PatientRecord,
    prediction_date: Day,
    vocab: &FeatureVocabulary,
) -> SparseVector {
    let mut entries: Vec<(u32, f64)> = Vec::new();
    let mut push = |descriptor: FeatureDescriptor, value: f64| {
        if value != 0.0 {
            if let Some(index) = vocab.index_of(&descriptor) {
                entries.push((index, value));
            }
        }
    };

    for ((category, slice, code), count) in slice_counts(patient, prediction_date) {
        push(
            FeatureDescriptor::SliceCount {
                category,
                slice,
                code: code.to_string(),
            },
            count as f64,
        );
    }
    for category in CodeCategory::ALL {
        let stats = category_stats(patient, prediction_date, category);
        for (stat, value) in Stat::ALL.into_iter().zip(stats) {
            push(FeatureDescriptor::CategoryStat { category, stat }, value);
        }
    }
    // Invalid birth dates cannot reach here through cohort construction;
    // clamp rather than fail so featurize stays total.
    let age = prediction_date
        .days_since(patient.birth_date)
        .max(0) as f64;
    push(
        FeatureDescriptor::Demographic(Demographic::Age),
        (age / 365.25).floor(),
    );
    push(
        FeatureDescriptor::Demographic(Demographic::Gender(patient.gender)),
        1.0,
    );
    push(
        FeatureDescriptor::Demographic(Demographic::Race(patient.race.clone())),
        1.0,
    );
    push(
        FeatureDescriptor::Demographic(Demographic::Ethnicity(patient.ethnicity.clone())),
        1.0,
    );
    SparseVector::from_entries(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{Label, Split};
    use crate::event_log::EventRecord;

    fn event(day: i32, category: CodeCategory, code: &str) -> EventRecord {
        EventRecord {
            date: Day(day),
            category,
            code: code.to_string(),
        }
    }

    fn patient(events: Vec<EventRecord>) -> PatientRecord {
        PatientRecord {
            patient_id: "X".to_string(),
            birth_date: Day(-20_000),
            gender: Gender::Female,
            race: "white".to_string(),
            ethnicity: "non_hispanic".to_string(),
            death_date: None,
            events,
        }
    }

    #[test]
    fn slice_boundaries() {
        assert_eq!(slice_of_age(0), Some(1));
        assert_eq!(slice_of_age(29), Some(1));
        assert_eq!(slice_of_age(30), Some(2));
        assert_eq!(slice_of_age(89), Some(2));
        assert_eq!(slice_of_age(90), Some(3));
        assert_eq!(slice_of_age(179), Some(3));
        assert_eq!(slice_of_age(180), Some(4));
        assert_eq!(slice_of_age(365), Some(4));
        assert_eq!(slice_of_age(366), None);
        assert_eq!(slice_of_age(-1), None);
    }

    #[test]
    fn slice_counts_same_bin_additivity() {
        let pd = Day(1000);
        let p = patient(vec![
            event(990, CodeCategory::Diagnosis, "A"),
            event(971, CodeCategory::Diagnosis, "A"),
        ]);
        let counts = slice_counts(&p, pd);
        assert_eq!(counts.len(), 1);
        assert_eq!(counts[&(CodeCategory::Diagnosis, 1, "A")], 2);
    }

    #[test]
    fn slice_counts_empty_window() {
        let pd = Day(1000);
        let p = patient(vec![event(100, CodeCategory::Diagnosis, "A")]);
        assert!(slice_counts(&p, pd).is_empty());
    }

    #[test]
    fn stats_over_two_active_days() {
        let pd = Day(400);
        let p = patient(vec![
            event(390, CodeCategory::Medication, "R1"),
            event(390, CodeCategory::Medication, "R2"),
            event(390, CodeCategory::Medication, "R3"),
            event(200, CodeCategory::Medication, "R4"),
        ]);
        let s = category_stats(&p, pd, CodeCategory::Medication);
        assert_eq!(s, [4.0, 4.0, 3.0, 1.0, 2.0, 2.0, 1.0]);
    }

    #[test]
    fn stats_single_event() {
        let pd = Day(400);
        let p = patient(vec![event(390, CodeCategory::Procedure, "P1")]);
        let s = category_stats(&p, pd, CodeCategory::Procedure);
        assert_eq!(s, [1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn stats_empty_category() {
        let pd = Day(400);
        let p = patient(vec![event(390, CodeCategory::Procedure, "P1")]);
        assert_eq!(category_stats(&p, pd, CodeCategory::Diagnosis), [0.0; 7]);
    }

    #[test]
    fn stats_repeated_code_counts_unique_once() {
        let pd = Day(400);
        let p = patient(vec![
            event(390, CodeCategory::Diagnosis, "A"),
            event(380, CodeCategory::Diagnosis, "A"),
        ]);
        let s = category_stats(&p, pd, CodeCategory::Diagnosis);
        assert_eq!(s[0], 1.0);
        assert_eq!(s[1], 2.0);
    }

    #[test]
    fn age_floor_rule() {
        let mut p = patient(vec![]);
        p.birth_date = Day::parse_iso("1936-05-10").unwrap();
        let pd = Day::parse_iso("2017-06-01").unwrap();
        assert_eq!(demographics(&p, pd).unwrap().age_years, 81);

        p.birth_date = Day(1000);
        assert_eq!(demographics(&p, Day(1000)).unwrap().age_years, 0);
        assert_eq!(demographics(&p, Day(1365)).unwrap().age_years, 0);
        assert_eq!(demographics(&p, Day(1366)).unwrap().age_years, 1);
        assert_eq!(
            demographics(&p, Day(999)),
            Err(DemographicsError::BeforeBirth)
        );
    }

    #[test]
    fn descriptor_tokens_round_trip() {
        let cases = [
            FeatureDescriptor::SliceCount {
                category: CodeCategory::Diagnosis,
                slice: 3,
                code: "E11:9".to_string(),
            },
            FeatureDescriptor::CategoryStat {
                category: CodeCategory::Encounter,
                stat: Stat::VariancePerDay,
            },
            FeatureDescriptor::Demographic(Demographic::Age),
            FeatureDescriptor::Demographic(Demographic::Gender(Gender::Male)),
            FeatureDescriptor::Demographic(Demographic::Race("pacific_islander".to_string())),
            FeatureDescriptor::Demographic(Demographic::Ethnicity("unknown".to_string())),
        ];
        for d in cases {
            assert_eq!(FeatureDescriptor::parse_token(&d.token()), Some(d));
        }
        assert_eq!(FeatureDescriptor::parse_token("slice9:DX:A"), None);
        assert_eq!(FeatureDescriptor::parse_token("stat:DX:bogus"), None);
        assert_eq!(FeatureDescriptor::parse_token("junk"), None);
    }

    fn one_point_cohort(id: &str) -> PredictionPoint {
        PredictionPoint {
            patient_id: id.to_string(),
            prediction_date: Day(400),
            label: Label::Negative,
            admitted: false,
            split: Split::Train,
        }
    }

    fn tiny_snapshot(n_with_code: usize, n_total: usize) -> (Snapshot, Vec<PredictionPoint>) {
        let mut records = Vec::new();
        let mut points = Vec::new();
        for i in 0..n_total {
            let id = format!("P{i:04}");
            let mut events = vec![
                event(0, CodeCategory::Encounter, "Office Visit"),
                event(400, CodeCategory::Encounter, "Office Visit"),
                event(800, CodeCategory::Encounter, "Office Visit"),
            ];
            if i < n_with_code {
                events.push(event(395, CodeCategory::Diagnosis, "X"));
            }
            records.push(PatientRecord {
                patient_id: id.clone(),
                birth_date: Day(-10_000),
                gender: Gender::Female,
                race: "white".to_string(),
                ethnicity: "non_hispanic".to_string(),
                death_date: None,
                events,
            });
            points.push(one_point_cohort(&id));
        }
        (Snapshot::new(Day(900), records).unwrap(), points)
    }

    #[test]
    fn pruning_threshold_is_strict() {
        let descriptor = FeatureDescriptor::SliceCount {
            category: CodeCategory::Diagnosis,
            slice: 1,
            code: "X".to_string(),
        };
        let (snapshot, points) = tiny_snapshot(100, 120);
        let vocab = build_vocabulary(&points, &snapshot, 100).unwrap();
        assert_eq!(vocab.index_of(&descriptor), None);

        let (snapshot, points) = tiny_snapshot(101, 120);
        let vocab = build_vocabulary(&points, &snapshot, 100).unwrap();
        assert!(vocab.index_of(&descriptor).is_some());
    }

    #[test]
    fn zero_threshold_keeps_everything_observed() {
        let (snapshot, points) = tiny_snapshot(1, 3);
        let vocab = build_vocabulary(&points, &snapshot, 0).unwrap();
        assert!(vocab
            .index_of(&FeatureDescriptor::SliceCount {
                category: CodeCategory::Diagnosis,
                slice: 1,
                code: "X".to_string(),
            })
            .is_some());
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let (snapshot, _) = tiny_snapshot(1, 2);
        assert_eq!(
            build_vocabulary(&[], &snapshot, 0),
            Err(VocabularyError::EmptyTrainingSet)
        );
    }

    #[test]
    fn vocabulary_ordering_is_slices_then_stats_then_demographics() {
        let (snapshot, points) = tiny_snapshot(2, 3);
        let vocab = build_vocabulary(&points, &snapshot, 0).unwrap();
        let tokens: Vec<String> = vocab.iter().map(|(_, d)| d.token()).collect();
        // Slice counts first (diagnosis before encounter by category order),
        // then 28 stats, then demographics.
        assert_eq!(tokens[0], "slice1:DX:X");
        assert!(tokens[1].starts_with("slice1:ENC:"));
        let stat_start = tokens.iter().position(|t| t.starts_with("stat:")).unwrap();
        assert_eq!(tokens[stat_start], "stat:DX:unique_codes");
        assert_eq!(tokens[stat_start + 27], "stat:ENC:variance_per_day");
        assert_eq!(
            &tokens[stat_start + 28..],
            &[
                "demo:age",
                "demo:gender:female",
                "demo:gender:male",
                "demo:race:white",
                "demo:ethnicity:non_hispanic",
            ]
        );
    }

    #[test]
    fn featurize_hand_fixture() {
        let (snapshot, points) = tiny_snapshot(2, 3);
        let vocab = build_vocabulary(&points, &snapshot, 0).unwrap();
        let p = &snapshot.patients["P0000"];
        let v = featurize(p, Day(400), &vocab);

        let expect = |d: &FeatureDescriptor| vocab.index_of(d).unwrap();
        let dx_count = expect(&FeatureDescriptor::SliceCount {
            category: CodeCategory::Diagnosis,
            slice: 1,
            code: "X".to_string(),
        });
        assert_eq!(v.get(dx_count), 1.0);
        let enc_total = expect(&FeatureDescriptor::CategoryStat {
            category: CodeCategory::Encounter,
            stat: Stat::TotalCodes,
        });
        // Encounters at days 0 (too old), 400, 800 (future): one in window.
        assert_eq!(v.get(enc_total), 1.0);
        let age = expect(&FeatureDescriptor::Demographic(Demographic::Age));
        assert_eq!(v.get(age), ((10_400f64) / 365.25).floor());
        let female = expect(&FeatureDescriptor::Demographic(Demographic::Gender(
            Gender::Female,
        )));
        assert_eq!(v.get(female), 1.0);
        let male = expect(&FeatureDescriptor::Demographic(Demographic::Gender(
            Gender::Male,
        )));
        assert_eq!(v.get(male), 0.0);
        assert!(v.iter().all(|(_, value)| value >= 0.0));
    }

    #[test]
    fn featurize_ignores_unknown_codes_and_future_events() {
        let (snapshot, points) = tiny_snapshot(2, 3);
        let vocab = build_vocabulary(&points, &snapshot, 0).unwrap();
        let base = featurize(&snapshot.patients["P0000"], Day(400), &vocab);

        // An unseen code gets no column of its own; it only moves the
        // diagnosis statistics (total goes from 1 to 2 on one active day).
        let mut p = snapshot.patients["P0000"].clone();
        p.events.push(event(399, CodeCategory::Diagnosis, "NEVER_SEEN"));
        let with_unknown = featurize(&p, Day(400), &vocab);
        assert_eq!(
            FeatureDescriptor::parse_token("slice1:DX:NEVER_SEEN")
                .and_then(|d| vocab.index_of(&d)),
            None
        );
        assert!(with_unknown.min_dim() <= vocab.len());
        let dx_total = vocab
            .index_of(&FeatureDescriptor::CategoryStat {
                category: CodeCategory::Diagnosis,
                stat: Stat::TotalCodes,
            })
            .unwrap();
        assert_eq!(base.get(dx_total), 1.0);
        assert_eq!(with_unknown.get(dx_total), 2.0);

        // Events strictly after the prediction date never contribute.
        let mut future = snapshot.patients["P0000"].clone();
        future.events.push(event(401, CodeCategory::Diagnosis, "X"));
        assert_eq!(featurize(&future, Day(400), &vocab), base);
    }
}
