//! Synthetic population generator.
//!
//! Each patient draws a latent illness-severity scalar from a two-component
//! mixture (healthy baseline vs elevated). Severity raises per-category
//! event rates, tilts code choice toward a designated risk subset, and
//! raises the death hazard, so code counts genuinely predict mortality.
//! Death probabilities are rescaled so the expected death prevalence equals
//! the configured target exactly.

use super::{CodeCategory, EventRecord, Gender, PatientRecord, Snapshot};
use crate::dates::Day;
use crate::seeding::mix64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Encounter types emitted by the generator.
pub const ENCOUNTER_TYPES: [&str; 4] = ["Inpatient", "Outpatient", "Office Visit", "Hx Scan"];

const RACES: [(&str, f64); 6] = [
    ("white", 0.45),
    ("asian", 0.20),
    ("black", 0.10),
    ("pacific_islander", 0.05),
    ("other", 0.15),
    ("unknown", 0.05),
];

const ETHNICITIES: [(&str, f64); 3] = [
    ("hispanic", 0.15),
    ("non_hispanic", 0.80),
    ("unknown", 0.05),
];

// Deaths are drawn at least this many days after the first encounter so a
// deceased patient can hold both a year of history and a 3-12 month lead.
const MIN_DAYS_TO_DEATH: i32 = 480;

/// Generator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_patients: usize,
    /// Target fraction of patients with a recorded death date.
    pub target_prevalence: f64,
    pub n_diagnosis_codes: usize,
    pub n_procedure_codes: usize,
    pub n_medication_codes: usize,
    /// Length of the generated timeline in days; the snapshot date is the
    /// last day. Must be at least 730 so cohort constraints are satisfiable.
    pub history_span_days: i32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_patients: 1000,
            target_prevalence: 0.07,
            n_diagnosis_codes: 300,
            n_procedure_codes: 200,
            n_medication_codes: 200,
            history_span_days: 1460,
            seed: 42,
        }
    }
}

/// Invalid generator configuration.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthConfigError {
    #[error("n_patients must be positive")]
    NoPatients,
    #[error("target_prevalence must be strictly between 0 and 1")]
    BadPrevalence,
    #[error("history_span_days must be at least 730")]
    SpanTooShort,
    #[error("code universe sizes must be positive")]
    EmptyCodeUniverse,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthConfigError> {
        if self.n_patients == 0 {
            return Err(SynthConfigError::NoPatients);
        }
        if !(self.target_prevalence > 0.0 && self.target_prevalence < 1.0) {
            return Err(SynthConfigError::BadPrevalence);
        }
        if self.history_span_days < 730 {
            return Err(SynthConfigError::SpanTooShort);
        }
        if self.n_diagnosis_codes == 0 || self.n_procedure_codes == 0 || self.n_medication_codes == 0
        {
            return Err(SynthConfigError::EmptyCodeUniverse);
        }
        Ok(())
    }
}

/// Per-patient generator internals, for population-level checks and the
/// realized-prevalence printout.
#[derive(Debug, Clone)]
pub struct SynthSummary {
    /// Latent severity per patient, in patient-id order.
    pub severities: Vec<f64>,
    /// Death indicator per patient, same order.
    pub died: Vec<bool>,
    pub realized_prevalence: f64,
}

/// Generate a synthetic snapshot. Deterministic given the seed.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Snapshot, SynthConfigError> {
    generate_synthetic_with_summary(config).map(|(snapshot, _)| snapshot)
}

/// As [`generate_synthetic`], also returning the latent per-patient state.
pub fn generate_synthetic_with_summary(
    config: &SynthConfig,
) -> Result<(Snapshot, SynthSummary), SynthConfigError> {
    config.validate()?;

    let severities: Vec<f64> = (0..config.n_patients)
        .map(|idx| draw_severity(&mut patient_rng(config.seed, idx)))
        .collect();
    let hazard_scale = calibrate_hazard_scale(&severities, config.target_prevalence);

    let mut records = Vec::with_capacity(config.n_patients);
    let mut died = Vec::with_capacity(config.n_patients);
    for idx in 0..config.n_patients {
        let record = generate_patient(config, idx, hazard_scale);
        died.push(record.death_date.is_some());
        records.push(record);
    }

    let realized_prevalence =
        died.iter().filter(|d| **d).count() as f64 / config.n_patients as f64;
    let snapshot = Snapshot::new(Day(config.history_span_days), records)
        .expect("generated snapshot satisfies snapshot invariants");
    let summary = SynthSummary {
        severities,
        died,
        realized_prevalence,
    };
    Ok((snapshot, summary))
}

fn patient_rng(seed: u64, idx: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(idx as u64 + 1)))
}

// Severity mixture: 85% healthy baseline, 15% elevated. The first draws on
// the patient stream, so the calibration pass and the generation pass see
// identical values.
fn draw_severity(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen::<f64>() < 0.15 {
        rng.gen_range(0.45..1.0)
    } else {
        rng.gen_range(0.0..0.35)
    }
}

// Death probability is min(1, scale * severity^4): a sharply convex hazard
// concentrates deaths on the elevated component, which keeps the mortality
// signal recoverable from event counts. Bisect the scale so the mean death
// probability over the drawn severities equals the target prevalence.
fn death_probability(severity: f64, scale: f64) -> f64 {
    (scale * severity.powi(4)).min(1.0)
}

fn calibrate_hazard_scale(severities: &[f64], target: f64) -> f64 {
    let mean_q = |scale: f64| -> f64 {
        severities
            .iter()
            .map(|s| death_probability(*s, scale))
            .sum::<f64>()
            / severities.len() as f64
    };
    let mut hi = 1.0;
    while mean_q(hi) < target && hi < 1e12 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mean_q(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn weighted_choice<'a>(rng: &mut ChaCha8Rng, table: &[(&'a str, f64)]) -> &'a str {
    let total: f64 = table.iter().map(|(_, w)| w).sum();
    let mut u = rng.gen::<f64>() * total;
    for (token, w) in table {
        u -= w;
        if u <= 0.0 {
            return token;
        }
    }
    table.last().unwrap().0
}

fn generate_patient(config: &SynthConfig, idx: usize, hazard_scale: f64) -> PatientRecord {
    let mut rng = patient_rng(config.seed, idx);
    let severity = draw_severity(&mut rng);
    let span = config.history_span_days;

    // First encounter day; capped so the death window below is non-empty.
    let t0_max = (span - MIN_DAYS_TO_DEATH - 20).min(365);
    let t0 = rng.gen_range(0..=t0_max);

    let age_years = rng.gen_range(18.0..90.0);
    let birth = Day(t0 - (age_years * 365.25) as i32);
    let gender = if rng.gen::<f64>() < 0.5 {
        Gender::Female
    } else {
        Gender::Male
    };
    let race = weighted_choice(&mut rng, &RACES).to_string();
    let ethnicity = weighted_choice(&mut rng, &ETHNICITIES).to_string();

    let dies = rng.gen::<f64>() < death_probability(severity, hazard_scale);
    let death_date = if dies {
        Some(Day(rng.gen_range(t0 + MIN_DAYS_TO_DEATH..=span)))
    } else {
        None
    };
    let end = death_date.map_or(span, |d| d.0);

    let mut events = vec![EventRecord {
        date: Day(t0),
        category: CodeCategory::Encounter,
        code: "Office Visit".to_string(),
    }];
    for category in CodeCategory::ALL {
        emit_category_events(
            &mut rng,
            config,
            category,
            severity,
            t0,
            end,
            &mut events,
        );
    }
    events.sort_by(|a, b| (a.date, a.category, &a.code).cmp(&(b.date, b.category, &b.code)));

    PatientRecord {
        patient_id: format!("P{:06}", idx + 1),
        birth_date: birth,
        gender,
        race,
        ethnicity,
        death_date,
        events,
    }
}

fn daily_rate(category: CodeCategory, severity: f64) -> f64 {
    match category {
        CodeCategory::Diagnosis => 0.022 * (1.0 + 3.5 * severity),
        CodeCategory::Procedure => 0.010 * (1.0 + 3.5 * severity),
        CodeCategory::Medication => 0.016 * (1.0 + 3.5 * severity),
        CodeCategory::Encounter => 0.018 * (1.0 + 2.5 * severity),
    }
}

fn emit_category_events(
    rng: &mut ChaCha8Rng,
    config: &SynthConfig,
    category: CodeCategory,
    severity: f64,
    t0: i32,
    end: i32,
    events: &mut Vec<EventRecord>,
) {
    let days = (end - t0 + 1) as f64;
    let lambda = daily_rate(category, severity) * days;
    let n = Poisson::new(lambda).expect("positive rate").sample(rng) as usize;
    for _ in 0..n {
        let date = Day(rng.gen_range(t0..=end));
        let code = match category {
            CodeCategory::Encounter => draw_encounter_type(rng, severity).to_string(),
            _ => draw_code(rng, category, config, severity),
        };
        events.push(EventRecord {
            date,
            category,
            code,
        });
    }
}

fn draw_encounter_type(rng: &mut ChaCha8Rng, severity: f64) -> &'static str {
    let p_inpatient = 0.02 + 0.15 * severity;
    let p_scan = 0.04 + 0.18 * severity;
    let u = rng.gen::<f64>();
    if u < p_inpatient {
        "Inpatient"
    } else if u < p_inpatient + p_scan {
        "Hx Scan"
    } else if u < p_inpatient + p_scan + (1.0 - p_inpatient - p_scan) * 0.55 {
        "Office Visit"
    } else {
        "Outpatient"
    }
}

// The first fifth of each code universe is the risk subset; severity tilts
// code choice toward it.
fn draw_code(
    rng: &mut ChaCha8Rng,
    category: CodeCategory,
    config: &SynthConfig,
    severity: f64,
) -> String {
    let (prefix, universe) = match category {
        CodeCategory::Diagnosis => ("D", config.n_diagnosis_codes),
        CodeCategory::Procedure => ("P", config.n_procedure_codes),
        CodeCategory::Medication => ("R", config.n_medication_codes),
        CodeCategory::Encounter => unreachable!("encounter codes drawn separately"),
    };
    let n_risk = (universe / 5).max(1);
    let risk_weight = 0.10 + 0.65 * severity;
    let idx = if rng.gen::<f64>() < risk_weight {
        rng.gen_range(0..n_risk)
    } else if n_risk < universe {
        rng.gen_range(n_risk..universe)
    } else {
        0
    };
    format!("{prefix}{idx:03}")
}
