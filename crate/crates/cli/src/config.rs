//! Pipeline configuration: flat `key = value` text with dotted prefixes.
//!
//! Every key has a default, so an empty (or absent) file is a valid
//! configuration. `#` starts a comment; blank lines are ignored; unknown
//! keys are errors rather than silent typo sinks. The `--seed`, `--out`,
//! and `--data` flags override their keys after the file is read.
//!
//! Keys and defaults:
//!
//! ```text
//! paths.data_dir              data      directory for patients/events files
//! paths.out_dir               out       directory for stage artifacts
//! seed                        42        global seed; stage seeds derive from it
//! synth.n_patients            1000
//! synth.target_prevalence     0.07
//! synth.n_diagnosis_codes     300
//! synth.n_procedure_codes     200
//! synth.n_medication_codes    200
//! synth.history_span_days     1460
//! cohort.lead_min_days        90
//! cohort.lead_max_days        365
//! cohort.history_min_days     365
//! cohort.followup_min_days    365
//! cohort.split_train          0.8
//! cohort.split_validation     0.1
//! cohort.split_test           0.1
//! features.min_patient_count  100
//! model.hidden_dims           64,64,64,64
//! model.activation            selu      one of selu, relu, tanh
//! train.batch_size            128
//! train.snapshot_every        250
//! train.max_iterations        3000
//! train.learning_rate         0.001
//! eval.n_bins                 10
//! eval.precision_target       0.9
//! ```

use crate::error::CliError;
use palscreen::cohort::CohortConfig;
use palscreen::event_log::SynthConfig;
use palscreen::model::{Activation, TrainConfig};
use palscreen::{hash_str, mix64};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub synth: SynthConfig,
    pub cohort: CohortConfig,
    pub min_patient_count: u32,
    pub hidden_dims: Vec<usize>,
    pub activation: Activation,
    pub train: TrainConfig,
    pub n_bins: usize,
    pub precision_target: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            seed: 42,
            synth: SynthConfig::default(),
            cohort: CohortConfig::default(),
            min_patient_count: 100,
            hidden_dims: vec![64, 64, 64, 64],
            activation: Activation::Selu,
            train: TrainConfig::default(),
            n_bins: 10,
            precision_target: 0.9,
        }
    }
}

impl PipelineConfig {
    /// Defaults, then the file (if given), then flag overrides.
    pub fn load(
        file: Option<&Path>,
        seed: Option<u64>,
        out: Option<&Path>,
        data: Option<&Path>,
    ) -> Result<PipelineConfig, CliError> {
        let mut config = PipelineConfig::default();
        if let Some(path) = file {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            config.apply_text(&text, path)?;
        }
        if let Some(seed) = seed {
            config.seed = seed;
        }
        if let Some(out) = out {
            config.out_dir = out.to_path_buf();
        }
        if let Some(data) = data {
            config.data_dir = data.to_path_buf();
        }
        Ok(config)
    }

    fn apply_text(&mut self, text: &str, path: &Path) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{}: expected `key = value`, got {raw:?}",
                    path.display(),
                    i + 1
                ))
            })?;
            self.set(key.trim(), value.trim()).map_err(|message| {
                CliError::Config(format!("{}:{}: {message}", path.display(), i + 1))
            })?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| format!("bad value for {key}: {e}"))
        }

        match key {
            "paths.data_dir" => self.data_dir = PathBuf::from(value),
            "paths.out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "synth.n_patients" => self.synth.n_patients = parse(key, value)?,
            "synth.target_prevalence" => self.synth.target_prevalence = parse(key, value)?,
            "synth.n_diagnosis_codes" => self.synth.n_diagnosis_codes = parse(key, value)?,
            "synth.n_procedure_codes" => self.synth.n_procedure_codes = parse(key, value)?,
            "synth.n_medication_codes" => self.synth.n_medication_codes = parse(key, value)?,
            "synth.history_span_days" => self.synth.history_span_days = parse(key, value)?,
            "cohort.lead_min_days" => self.cohort.lead_min_days = parse(key, value)?,
            "cohort.lead_max_days" => self.cohort.lead_max_days = parse(key, value)?,
            "cohort.history_min_days" => self.cohort.history_min_days = parse(key, value)?,
            "cohort.followup_min_days" => self.cohort.followup_min_days = parse(key, value)?,
            "cohort.split_train" => self.cohort.split_ratios[0] = parse(key, value)?,
            "cohort.split_validation" => self.cohort.split_ratios[1] = parse(key, value)?,
            "cohort.split_test" => self.cohort.split_ratios[2] = parse(key, value)?,
            "features.min_patient_count" => self.min_patient_count = parse(key, value)?,
            "model.hidden_dims" => {
                let dims: Result<Vec<usize>, _> =
                    value.split(',').map(|d| d.trim().parse()).collect();
                self.hidden_dims =
                    dims.map_err(|e| format!("bad value for {key}: {e}"))?;
            }
            "model.activation" => self.activation = parse(key, value)?,
            "train.batch_size" => self.train.batch_size = parse(key, value)?,
            "train.snapshot_every" => self.train.snapshot_every = parse(key, value)?,
            "train.max_iterations" => self.train.max_iterations = parse(key, value)?,
            "train.learning_rate" => self.train.learning_rate = parse(key, value)?,
            "eval.n_bins" => self.n_bins = parse(key, value)?,
            "eval.precision_target" => self.precision_target = parse(key, value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Deterministic per-stage seed derived from the global seed, so stages
    /// do not share random streams.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        mix64(self.seed ^ hash_str(stage))
    }

    /// Synthetic generator config with its derived seed.
    pub fn synth_effective(&self) -> SynthConfig {
        SynthConfig {
            seed: self.stage_seed("synth"),
            ..self.synth.clone()
        }
    }

    /// Cohort config with its derived split seed.
    pub fn cohort_effective(&self) -> CohortConfig {
        CohortConfig {
            seed: self.stage_seed("cohort"),
            ..self.cohort.clone()
        }
    }

    /// Train config with its derived shuffle seed.
    pub fn train_effective(&self) -> TrainConfig {
        TrainConfig {
            seed: self.stage_seed("train"),
            ..self.train.clone()
        }
    }

    /// Every effective key as `(key, value)` text, in documentation order,
    /// for manifest echoes.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut dims = String::new();
        for (i, d) in self.hidden_dims.iter().enumerate() {
            if i > 0 {
                dims.push(',');
            }
            let _ = write!(dims, "{d}");
        }
        let pairs: Vec<(&str, String)> = vec![
            ("paths.data_dir", self.data_dir.display().to_string()),
            ("paths.out_dir", self.out_dir.display().to_string()),
            ("seed", self.seed.to_string()),
            ("synth.n_patients", self.synth.n_patients.to_string()),
            (
                "synth.target_prevalence",
                self.synth.target_prevalence.to_string(),
            ),
            (
                "synth.n_diagnosis_codes",
                self.synth.n_diagnosis_codes.to_string(),
            ),
            (
                "synth.n_procedure_codes",
                self.synth.n_procedure_codes.to_string(),
            ),
            (
                "synth.n_medication_codes",
                self.synth.n_medication_codes.to_string(),
            ),
            (
                "synth.history_span_days",
                self.synth.history_span_days.to_string(),
            ),
            ("cohort.lead_min_days", self.cohort.lead_min_days.to_string()),
            ("cohort.lead_max_days", self.cohort.lead_max_days.to_string()),
            (
                "cohort.history_min_days",
                self.cohort.history_min_days.to_string(),
            ),
            (
                "cohort.followup_min_days",
                self.cohort.followup_min_days.to_string(),
            ),
            ("cohort.split_train", self.cohort.split_ratios[0].to_string()),
            (
                "cohort.split_validation",
                self.cohort.split_ratios[1].to_string(),
            ),
            ("cohort.split_test", self.cohort.split_ratios[2].to_string()),
            (
                "features.min_patient_count",
                self.min_patient_count.to_string(),
            ),
            ("model.hidden_dims", dims),
            ("model.activation", self.activation.to_string()),
            ("train.batch_size", self.train.batch_size.to_string()),
            ("train.snapshot_every", self.train.snapshot_every.to_string()),
            ("train.max_iterations", self.train.max_iterations.to_string()),
            ("train.learning_rate", self.train.learning_rate.to_string()),
            ("eval.n_bins", self.n_bins.to_string()),
            ("eval.precision_target", self.precision_target.to_string()),
        ];
        pairs
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_keeps_defaults() {
        let mut config = PipelineConfig::default();
        config
            .apply_text("# nothing here\n\n", Path::new("test.conf"))
            .unwrap();
        assert_eq!(config, PipelineConfig::default());
    }

    #[test]
    fn keys_override_defaults() {
        let mut config = PipelineConfig::default();
        config
            .apply_text(
                "synth.n_patients = 500\nmodel.hidden_dims = 32,16\n\
                 cohort.split_train = 0.6 # more eval data\nmodel.activation = tanh\n",
                Path::new("test.conf"),
            )
            .unwrap();
        assert_eq!(config.synth.n_patients, 500);
        assert_eq!(config.hidden_dims, vec![32, 16]);
        assert_eq!(config.cohort.split_ratios[0], 0.6);
        assert_eq!(config.activation, Activation::Tanh);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let mut config = PipelineConfig::default();
        let err = config
            .apply_text("synth.n_patiens = 5\n", Path::new("test.conf"))
            .unwrap_err();
        assert!(err.to_string().contains("unknown key"));
        let err = config
            .apply_text("train.batch_size = many\n", Path::new("test.conf"))
            .unwrap_err();
        assert!(err.to_string().contains("bad value"));
        let err = config
            .apply_text("just a line\n", Path::new("test.conf"))
            .unwrap_err();
        assert!(err.to_string().contains("key = value"));
    }

    #[test]
    fn stage_seeds_differ_by_stage_and_follow_the_global_seed() {
        let config = PipelineConfig::default();
        assert_ne!(config.stage_seed("synth"), config.stage_seed("train"));
        let reseeded = PipelineConfig {
            seed: 7,
            ..PipelineConfig::default()
        };
        assert_ne!(config.stage_seed("synth"), reseeded.stage_seed("synth"));
    }

    #[test]
    fn echo_lists_every_documented_key() {
        let echo = PipelineConfig::default().echo();
        assert_eq!(echo.len(), 25);
        assert!(echo.iter().any(|(k, v)| k == "seed" && v == "42"));
        assert!(echo
            .iter()
            .any(|(k, v)| k == "model.hidden_dims" && v == "64,64,64,64"));
        // Round trip: every echoed key is settable with its echoed value.
        let mut config = PipelineConfig::default();
        for (key, value) in &echo {
            config.set(key, value).unwrap();
        }
        assert_eq!(config, PipelineConfig::default());
    }
}
