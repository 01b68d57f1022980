//! Per-patient prediction explanations by code ablation.
//!
//! For every distinct code in the patient's observation window, remove all
//! of its occurrences, re-featurize from scratch (slice counts and summary
//! statistics both move), and re-score. The probability drop is the code's
//! influence. Demographics are probed by zeroing the age and swapping the
//! gender. Reports keep the five largest positive influences per category;
//! ablations that raise the probability are computed but not reported.

pub mod io;

use crate::event_log::{CodeCategory, Gender, PatientRecord};
use crate::features::{featurize, slice_counts, FeatureVocabulary};
use crate::model::{forward, MLPParams};
use crate::Day;
use std::collections::BTreeMap;

/// Report rows per category.
pub const MAX_PER_CATEGORY: usize = 5;

/// What was ablated or perturbed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InfluenceTarget {
    Code { category: CodeCategory, code: String },
    Age,
    Gender,
}

impl InfluenceTarget {
    /// Label used in report rows and for deterministic tie-breaks.
    pub fn label(&self) -> &str {
        match self {
            InfluenceTarget::Code { code, .. } => code,
            InfluenceTarget::Age => "age",
            InfluenceTarget::Gender => "gender",
        }
    }
}

/// Probability drop attributed to one target.
#[derive(Debug, Clone, PartialEq)]
pub struct Influence {
    pub target: InfluenceTarget,
    /// The patient's featurized value: total in-window occurrences for a
    /// code, age in years, 1 for the active gender indicator.
    pub original_value: f64,
    /// p_original - p_ablated; negative when removal raises the score.
    pub influence: f64,
}

/// Explanation for one patient at one prediction date. Each category list
/// is sorted by influence descending (ties by label), holds only strictly
/// positive influences, and is capped at [`MAX_PER_CATEGORY`].
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub patient_id: String,
    pub probability: f64,
    pub diagnoses: Vec<Influence>,
    pub procedures: Vec<Influence>,
    pub medications: Vec<Influence>,
    pub encounters: Vec<Influence>,
    pub demographics: Vec<Influence>,
}

impl Explanation {
    /// Category sections in report order.
    pub fn sections(&self) -> [(&'static str, &[Influence]); 5] {
        [
            ("diagnosis", &self.diagnoses),
            ("procedure", &self.procedures),
            ("medication", &self.medications),
            ("encounter", &self.encounters),
            ("demographic", &self.demographics),
        ]
    }
}

/// Copy of the patient without any event matching (category, code).
pub fn ablate_code(patient: &PatientRecord, category: CodeCategory, code: &str) -> PatientRecord {
    let mut out = patient.clone();
    out.events
        .retain(|e| !(e.category == category && e.code == code));
    out
}

fn score(params: &MLPParams, vocab: &FeatureVocabulary, patient: &PatientRecord, date: Day) -> f64 {
    forward(params, &featurize(patient, date, vocab))
}

/// Total in-window occurrences of (category, code).
fn windowed_total(patient: &PatientRecord, date: Day, category: CodeCategory, code: &str) -> u32 {
    slice_counts(patient, date)
        .iter()
        .filter(|((c, _, k), _)| *c == category && *k == code)
        .map(|(_, n)| *n)
        .sum()
}

/// Influence of removing every occurrence of one code.
pub fn code_influence(
    params: &MLPParams,
    vocab: &FeatureVocabulary,
    patient: &PatientRecord,
    prediction_date: Day,
    category: CodeCategory,
    code: &str,
) -> Influence {
    let p_original = score(params, vocab, patient, prediction_date);
    code_influence_at(params, vocab, patient, prediction_date, p_original, category, code)
}

fn code_influence_at(
    params: &MLPParams,
    vocab: &FeatureVocabulary,
    patient: &PatientRecord,
    prediction_date: Day,
    p_original: f64,
    category: CodeCategory,
    code: &str,
) -> Influence {
    let ablated = ablate_code(patient, category, code);
    let p_ablated = score(params, vocab, &ablated, prediction_date);
    Influence {
        target: InfluenceTarget::Code {
            category,
            code: code.to_string(),
        },
        original_value: f64::from(windowed_total(patient, prediction_date, category, code)),
        influence: p_original - p_ablated,
    }
}

/// Age and gender probes: age set to 0, gender swapped to the opposite.
/// Race and ethnicity are left untouched.
pub fn demographic_influence(
    params: &MLPParams,
    vocab: &FeatureVocabulary,
    patient: &PatientRecord,
    prediction_date: Day,
) -> Vec<Influence> {
    let p_original = score(params, vocab, patient, prediction_date);
    demographic_influence_at(params, vocab, patient, prediction_date, p_original)
}

fn demographic_influence_at(
    params: &MLPParams,
    vocab: &FeatureVocabulary,
    patient: &PatientRecord,
    prediction_date: Day,
    p_original: f64,
) -> Vec<Influence> {
    let age_years = prediction_date
        .days_since(patient.birth_date)
        .max(0) as f64
        / 365.25;
    let mut age_zeroed = patient.clone();
    age_zeroed.birth_date = prediction_date;
    let age = Influence {
        target: InfluenceTarget::Age,
        original_value: age_years.floor(),
        influence: p_original - score(params, vocab, &age_zeroed, prediction_date),
    };

    let mut swapped = patient.clone();
    swapped.gender = match patient.gender {
        Gender::Female => Gender::Male,
        Gender::Male => Gender::Female,
    };
    let gender = Influence {
        target: InfluenceTarget::Gender,
        original_value: 1.0,
        influence: p_original - score(params, vocab, &swapped, prediction_date),
    };
    vec![age, gender]
}

fn top_positive(mut influences: Vec<Influence>) -> Vec<Influence> {
    influences.retain(|i| i.influence > 0.0);
    influences.sort_by(|a, b| {
        b.influence
            .total_cmp(&a.influence)
            .then_with(|| a.target.label().cmp(b.target.label()))
    });
    influences.truncate(MAX_PER_CATEGORY);
    influences
}

/// Full explanation: every distinct in-window code is ablated once, plus
/// the two demographic probes. Deterministic for identical inputs.
pub fn explain(
    params: &MLPParams,
    vocab: &FeatureVocabulary,
    patient: &PatientRecord,
    prediction_date: Day,
) -> Explanation {
    let p_original = score(params, vocab, patient, prediction_date);

    let mut totals: BTreeMap<(CodeCategory, String), u32> = BTreeMap::new();
    for ((category, _, code), n) in slice_counts(patient, prediction_date) {
        *totals.entry((category, code.to_string())).or_insert(0) += n;
    }

    let mut groups: BTreeMap<CodeCategory, Vec<Influence>> = BTreeMap::new();
    for ((category, code), total) in totals {
        let ablated = ablate_code(patient, category, &code);
        let p_ablated = score(params, vocab, &ablated, prediction_date);
        groups.entry(category).or_default().push(Influence {
            target: InfluenceTarget::Code {
                category,
                code,
            },
            original_value: f64::from(total),
            influence: p_original - p_ablated,
        });
    }

    let demographics =
        demographic_influence_at(params, vocab, patient, prediction_date, p_original);

    Explanation {
        patient_id: patient.patient_id.clone(),
        probability: p_original,
        diagnoses: top_positive(groups.remove(&CodeCategory::Diagnosis).unwrap_or_default()),
        procedures: top_positive(groups.remove(&CodeCategory::Procedure).unwrap_or_default()),
        medications: top_positive(groups.remove(&CodeCategory::Medication).unwrap_or_default()),
        encounters: top_positive(groups.remove(&CodeCategory::Encounter).unwrap_or_default()),
        demographics: top_positive(demographics),
    }
}
