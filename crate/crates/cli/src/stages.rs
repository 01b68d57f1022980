//! The six pipeline stages.
//!
//! Each stage reads its upstream artifacts (default locations under the
//! data/output directories, overridable per flag), writes its own artifacts
//! plus a manifest, and prints a short summary to stdout. Artifacts are
//! deterministic functions of inputs, config, and seed; nothing before the
//! eval stage consumes test-split labels.

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::manifest::{hex, sha256_file, write_manifest};
use palscreen::cohort::{self, io as cohort_io, km, Label, PredictionPoint, Split};
use palscreen::eval::{self, io as eval_io, ScoredExample};
use palscreen::event_log::{self, io as event_io, PatientRecord, Snapshot};
use palscreen::explain::{self, io as explain_io};
use palscreen::features::{self, io as feature_io, SparseMatrix};
use palscreen::model::{self, forward, io as model_io, MLPParams, ModelConfig};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const PATIENTS_FILE: &str = "patients.tsv";
pub const EVENTS_FILE: &str = "events.tsv";
pub const COHORT_FILE: &str = "cohort.tsv";
pub const COHORT_STATS_FILE: &str = "cohort_stats.tsv";
pub const KM_POSITIVE_FILE: &str = "km_positive.tsv";
pub const KM_NEGATIVE_FILE: &str = "km_negative.tsv";
pub const VOCAB_FILE: &str = "vocabulary.tsv";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const TRAIN_LOG_FILE: &str = "train_log.tsv";
pub const REPORT_FILE: &str = "report.tsv";
pub const SCORES_FILE: &str = "scores_test.tsv";

pub fn matrix_file(split: Split) -> String {
    format!("features_{}.tsv", split.token())
}

pub fn labels_file(split: Split) -> String {
    format!("labels_{}.tsv", split.token())
}

pub fn explanation_file(patient_id: &str) -> String {
    format!("explanation_{patient_id}.tsv")
}

/// Default input location with optional flag override; missing files are
/// stage-order errors naming the producing subcommand.
fn resolve(
    override_path: Option<PathBuf>,
    dir: &Path,
    name: &str,
    produced_by: &'static str,
) -> Result<PathBuf, CliError> {
    let path = override_path.unwrap_or_else(|| dir.join(name));
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::StageOrder {
            missing: path,
            produced_by,
        })
    }
}

fn map_load(e: event_io::LoadError) -> CliError {
    match e {
        event_io::LoadError::Io { path, source } => CliError::io(path, source),
        other => CliError::Format(other.to_string()),
    }
}

fn map_cohort_load(path: &Path, e: cohort_io::CohortLoadError) -> CliError {
    match e {
        cohort_io::CohortLoadError::Io(io) => CliError::io(path, io),
        other => CliError::Format(other.to_string()),
    }
}

fn map_feature_load(path: &Path, e: feature_io::FeatureFileError) -> CliError {
    match e {
        feature_io::FeatureFileError::Io(io) => CliError::io(path, io),
        other => CliError::Format(other.to_string()),
    }
}

fn map_checkpoint(path: &Path, e: model_io::CheckpointError) -> CliError {
    match e {
        model_io::CheckpointError::Io(io) => CliError::io(path, io),
        other => CliError::Format(format!("{}: {other}", path.display())),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn load_snapshot_inputs(
    config: &PipelineConfig,
    patients: Option<PathBuf>,
    events: Option<PathBuf>,
) -> Result<(Snapshot, PathBuf, PathBuf), CliError> {
    let patients = resolve(patients, &config.data_dir, PATIENTS_FILE, "synth")?;
    let events = resolve(events, &config.data_dir, EVENTS_FILE, "synth")?;
    let snapshot = event_io::load_snapshot(&patients, &events).map_err(map_load)?;
    Ok((snapshot, patients, events))
}

pub fn cmd_synth(config: &PipelineConfig) -> Result<(), CliError> {
    let synth_config = config.synth_effective();
    let (snapshot, summary) = event_log::synth::generate_synthetic_with_summary(&synth_config)
        .map_err(|e| CliError::Config(e.to_string()))?;
    log::info!("generated {} patients", snapshot.patients.len());
    ensure_dir(&config.data_dir)?;
    let patients = config.data_dir.join(PATIENTS_FILE);
    let events = config.data_dir.join(EVENTS_FILE);
    event_io::write_snapshot(&snapshot, &patients, &events).map_err(map_load)?;
    write_manifest(&config.data_dir, "synth", config, &[])?;
    println!("patients\t{}", snapshot.patients.len());
    println!("realized_prevalence\t{}", summary.realized_prevalence);
    Ok(())
}

pub fn cmd_cohort(
    config: &PipelineConfig,
    patients: Option<PathBuf>,
    events: Option<PathBuf>,
) -> Result<(), CliError> {
    let (snapshot, patients, events) = load_snapshot_inputs(config, patients, events)?;
    let cohort_config = config.cohort_effective();
    log::info!("selecting from {} patients", snapshot.patients.len());
    let (points, stats) = cohort::build_cohort(&snapshot, &cohort_config)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let curves = km::km_censor_curve(&points, &snapshot)
        .map_err(|e| CliError::Internal(e.to_string()))?;

    ensure_dir(&config.out_dir)?;
    let out = |name: &str| config.out_dir.join(name);
    cohort_io::write_cohort(&out(COHORT_FILE), &points)
        .map_err(|e| CliError::io(out(COHORT_FILE), e))?;
    cohort_io::write_stats(&out(COHORT_STATS_FILE), &stats)
        .map_err(|e| CliError::io(out(COHORT_STATS_FILE), e))?;
    cohort_io::write_km_curve(&out(KM_POSITIVE_FILE), &curves.positive)
        .map_err(|e| CliError::io(out(KM_POSITIVE_FILE), e))?;
    cohort_io::write_km_curve(&out(KM_NEGATIVE_FILE), &curves.negative)
        .map_err(|e| CliError::io(out(KM_NEGATIVE_FILE), e))?;
    write_manifest(
        &config.out_dir,
        "cohort",
        config,
        &[("patients", &patients), ("events", &events)],
    )?;

    let positives = points.iter().filter(|p| p.label == Label::Positive).count();
    println!("selected\t{}", points.len());
    println!("positives\t{positives}");
    println!("admitted\t{}", stats.total().admitted);
    Ok(())
}

fn split_points(points: &[PredictionPoint], split: Split) -> Vec<&PredictionPoint> {
    points.iter().filter(|p| p.split == split).collect()
}

fn patient_of<'s>(
    snapshot: &'s Snapshot,
    point: &PredictionPoint,
) -> Result<&'s PatientRecord, CliError> {
    snapshot
        .patients
        .get(&point.patient_id)
        .ok_or_else(|| CliError::UnknownPatient(point.patient_id.clone()))
}

pub fn cmd_featurize(
    config: &PipelineConfig,
    patients: Option<PathBuf>,
    events: Option<PathBuf>,
    cohort_path: Option<PathBuf>,
) -> Result<(), CliError> {
    let (snapshot, patients, events) = load_snapshot_inputs(config, patients, events)?;
    let cohort_path = resolve(cohort_path, &config.out_dir, COHORT_FILE, "cohort")?;
    let points = cohort_io::load_cohort(&cohort_path).map_err(|e| map_cohort_load(&cohort_path, e))?;

    let train_points: Vec<PredictionPoint> = points
        .iter()
        .filter(|p| p.split == Split::Train)
        .cloned()
        .collect();
    let vocab =
        features::build_vocabulary(&train_points, &snapshot, config.min_patient_count)
            .map_err(|e| CliError::Format(e.to_string()))?;
    log::info!(
        "vocabulary: {} features from {} training points",
        vocab.len(),
        train_points.len()
    );

    ensure_dir(&config.out_dir)?;
    let vocab_path = config.out_dir.join(VOCAB_FILE);
    feature_io::write_vocabulary(&vocab_path, &vocab)
        .map_err(|e| CliError::io(&vocab_path, e))?;

    for split in Split::ALL {
        let mut matrix = SparseMatrix::new(vocab.len());
        let selected = split_points(&points, split);
        for point in &selected {
            let patient = patient_of(&snapshot, point)?;
            matrix.push_row(features::featurize(patient, point.prediction_date, &vocab));
        }
        let matrix_path = config.out_dir.join(matrix_file(split));
        feature_io::write_matrix(&matrix_path, &matrix)
            .map_err(|e| CliError::io(&matrix_path, e))?;

        // Only the eval stage may consume test labels; it reads them from
        // the cohort file itself.
        if split != Split::Test {
            let labels_path = config.out_dir.join(labels_file(split));
            write_labels(&labels_path, &selected)?;
        }
        println!("{}\t{} rows", matrix_file(split), selected.len());
    }
    write_manifest(
        &config.out_dir,
        "featurize",
        config,
        &[
            ("patients", &patients),
            ("events", &events),
            ("cohort", &cohort_path),
        ],
    )?;
    println!("vocabulary\t{} features", vocab.len());
    Ok(())
}

fn write_labels(path: &Path, points: &[&PredictionPoint]) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut emit = |line: String| -> Result<(), CliError> {
        writeln!(w, "{line}").map_err(|e| CliError::io(path, e))
    };
    emit("patient_id\tlabel".to_string())?;
    for p in points {
        emit(format!("{}\t{}", p.patient_id, p.label))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn load_labels(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("patient_id\tlabel") {
        return Err(CliError::Format(format!(
            "{}: expected header patient_id\\tlabel",
            path.display()
        )));
    }
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        let label = line
            .split('\t')
            .nth(1)
            .and_then(|t| t.parse::<Label>().ok())
            .ok_or_else(|| {
                CliError::Format(format!("{}:{}: malformed label line", path.display(), i + 2))
            })?;
        labels.push(if label.is_positive() { 1.0 } else { 0.0 });
    }
    Ok(labels)
}

pub struct TrainInputs {
    pub train_matrix: Option<PathBuf>,
    pub val_matrix: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub val_labels: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
}

pub fn cmd_train(config: &PipelineConfig, inputs: TrainInputs) -> Result<(), CliError> {
    let out = &config.out_dir;
    let train_matrix_path = resolve(
        inputs.train_matrix,
        out,
        &matrix_file(Split::Train),
        "featurize",
    )?;
    let val_matrix_path = resolve(
        inputs.val_matrix,
        out,
        &matrix_file(Split::Validation),
        "featurize",
    )?;
    let train_labels_path = resolve(
        inputs.train_labels,
        out,
        &labels_file(Split::Train),
        "featurize",
    )?;
    let val_labels_path = resolve(
        inputs.val_labels,
        out,
        &labels_file(Split::Validation),
        "featurize",
    )?;
    let vocab_path = resolve(inputs.vocab, out, VOCAB_FILE, "featurize")?;

    let train_x = feature_io::load_matrix(&train_matrix_path).map_err(|e| map_feature_load(&train_matrix_path, e))?;
    let val_x = feature_io::load_matrix(&val_matrix_path).map_err(|e| map_feature_load(&val_matrix_path, e))?;
    let train_y = load_labels(&train_labels_path)?;
    let val_y = load_labels(&val_labels_path)?;

    let model_config = ModelConfig {
        input_dim: train_x.n_cols,
        hidden_dims: config.hidden_dims.clone(),
        activation: config.activation,
        seed: config.stage_seed("model"),
    };
    log::info!(
        "training on {} examples with {} features",
        train_x.n_rows(),
        train_x.n_cols
    );
    let outcome = model::train(
        &train_x,
        &train_y,
        &val_x,
        &val_y,
        &model_config,
        &config.train_effective(),
    )
    .map_err(|e| match e {
        model::TrainError::BadModelConfig(_) | model::TrainError::BadTrainConfig(_) => {
            CliError::Config(e.to_string())
        }
        model::TrainError::BadData(_) => CliError::Format(e.to_string()),
        _ => CliError::Train(e.to_string()),
    })?;

    let vocab_hash = sha256_file(&vocab_path)?;
    let checkpoint_path = out.join(CHECKPOINT_FILE);
    model_io::save_checkpoint(&checkpoint_path, &outcome.params, &vocab_hash)
        .map_err(|e| map_checkpoint(&checkpoint_path, e))?;
    let log_path = out.join(TRAIN_LOG_FILE);
    model_io::write_train_log(&log_path, &outcome.log).map_err(|e| CliError::io(&log_path, e))?;
    write_manifest(
        out,
        "train",
        config,
        &[
            ("train_matrix", &train_matrix_path),
            ("val_matrix", &val_matrix_path),
            ("train_labels", &train_labels_path),
            ("val_labels", &val_labels_path),
            ("vocabulary", &vocab_path),
        ],
    )?;
    println!("best_iteration\t{}", outcome.best_iteration);
    println!("best_val_ap\t{}", outcome.best_val_metric);
    Ok(())
}

/// Load checkpoint and verify it was trained against this exact vocabulary
/// file.
fn load_verified_checkpoint(
    checkpoint_path: &Path,
    vocab_path: &Path,
) -> Result<MLPParams, CliError> {
    let (params, embedded) = model_io::load_checkpoint(checkpoint_path)
        .map_err(|e| map_checkpoint(checkpoint_path, e))?;
    let actual = sha256_file(vocab_path)?;
    if actual != embedded {
        return Err(CliError::ChecksumMismatch {
            path: vocab_path.to_path_buf(),
            expected: hex(&embedded),
            actual: hex(&actual),
        });
    }
    Ok(params)
}

pub struct EvalInputs {
    pub test_matrix: Option<PathBuf>,
    pub cohort: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

pub fn cmd_eval(config: &PipelineConfig, inputs: EvalInputs) -> Result<(), CliError> {
    let out = &config.out_dir;
    let test_matrix_path = resolve(
        inputs.test_matrix,
        out,
        &matrix_file(Split::Test),
        "featurize",
    )?;
    let cohort_path = resolve(inputs.cohort, out, COHORT_FILE, "cohort")?;
    let vocab_path = resolve(inputs.vocab, out, VOCAB_FILE, "featurize")?;
    let checkpoint_path = resolve(inputs.checkpoint, out, CHECKPOINT_FILE, "train")?;

    let params = load_verified_checkpoint(&checkpoint_path, &vocab_path)?;
    let matrix = feature_io::load_matrix(&test_matrix_path).map_err(|e| map_feature_load(&test_matrix_path, e))?;
    let points = cohort_io::load_cohort(&cohort_path).map_err(|e| map_cohort_load(&cohort_path, e))?;
    let test_points = split_points(&points, Split::Test);
    if matrix.n_rows() != test_points.len() {
        return Err(CliError::Format(format!(
            "{} has {} rows but the cohort has {} test points",
            test_matrix_path.display(),
            matrix.n_rows(),
            test_points.len()
        )));
    }
    if matrix.n_cols != params.input_dim() {
        return Err(CliError::Format(format!(
            "feature matrix has {} columns but the model expects {}",
            matrix.n_cols,
            params.input_dim()
        )));
    }

    log::info!("scoring {} test examples", matrix.n_rows());
    let examples: Vec<ScoredExample> = matrix
        .rows
        .iter()
        .zip(&test_points)
        .map(|(row, point)| ScoredExample {
            score: forward(&params, row),
            label: point.label.is_positive(),
            admitted: point.admitted,
        })
        .collect();
    let report = eval::evaluate_all(&examples, config.n_bins, config.precision_target)
        .map_err(|e| CliError::Format(e.to_string()))?;

    let report_path = out.join(REPORT_FILE);
    eval_io::write_report(&report_path, &report).map_err(|e| CliError::io(&report_path, e))?;
    let curves = [
        ("pr_curve.tsv", &report.overall.pr_curve),
        ("roc_curve.tsv", &report.overall.roc_curve),
        ("reliability.tsv", &report.overall.reliability),
    ];
    for (name, curve) in curves {
        let path = out.join(name);
        eval_io::write_curve(&path, curve).map_err(|e| CliError::io(&path, e))?;
    }
    if let Some(admitted) = &report.admitted {
        let curves = [
            ("pr_curve_admitted.tsv", &admitted.pr_curve),
            ("roc_curve_admitted.tsv", &admitted.roc_curve),
            ("reliability_admitted.tsv", &admitted.reliability),
        ];
        for (name, curve) in curves {
            let path = out.join(name);
            eval_io::write_curve(&path, curve).map_err(|e| CliError::io(&path, e))?;
        }
    }
    write_scores(&out.join(SCORES_FILE), &test_points, &examples)?;
    write_manifest(
        out,
        "eval",
        config,
        &[
            ("test_matrix", &test_matrix_path),
            ("cohort", &cohort_path),
            ("vocabulary", &vocab_path),
            ("checkpoint", &checkpoint_path),
        ],
    )?;
    println!("average_precision\t{}", report.overall.average_precision);
    println!("auroc\t{}", report.overall.auroc);
    println!("brier\t{}", report.overall.brier);
    println!(
        "recall_at_target_precision\t{}",
        report.overall.recall_at_target
    );
    Ok(())
}

fn write_scores(
    path: &Path,
    points: &[&PredictionPoint],
    examples: &[ScoredExample],
) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut emit = |line: String| -> Result<(), CliError> {
        writeln!(w, "{line}").map_err(|e| CliError::io(path, e))
    };
    emit("patient_id\tscore\tlabel\tadmitted".to_string())?;
    for (point, example) in points.iter().zip(examples) {
        emit(format!(
            "{}\t{}\t{}\t{}",
            point.patient_id, example.score, point.label, point.admitted
        ))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub struct ExplainInputs {
    pub patient: Option<String>,
    pub top: usize,
    pub patients: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub cohort: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub descriptions: Option<PathBuf>,
}

pub fn cmd_explain(config: &PipelineConfig, inputs: ExplainInputs) -> Result<(), CliError> {
    let out = &config.out_dir;
    let (snapshot, patients_path, events_path) =
        load_snapshot_inputs(config, inputs.patients, inputs.events)?;
    let cohort_path = resolve(inputs.cohort, out, COHORT_FILE, "cohort")?;
    let vocab_path = resolve(inputs.vocab, out, VOCAB_FILE, "featurize")?;
    let checkpoint_path = resolve(inputs.checkpoint, out, CHECKPOINT_FILE, "train")?;

    let params = load_verified_checkpoint(&checkpoint_path, &vocab_path)?;
    let vocab = feature_io::load_vocabulary(&vocab_path).map_err(|e| map_feature_load(&vocab_path, e))?;
    let points = cohort_io::load_cohort(&cohort_path).map_err(|e| map_cohort_load(&cohort_path, e))?;

    let selected: Vec<&PredictionPoint> = match &inputs.patient {
        Some(id) => {
            let point = points
                .iter()
                .find(|p| &p.patient_id == id)
                .ok_or_else(|| CliError::UnknownPatient(id.clone()))?;
            vec![point]
        }
        None => {
            // Top scorers of the test split; scores only, labels unread.
            let mut scored: Vec<(f64, &PredictionPoint)> = split_points(&points, Split::Test)
                .into_iter()
                .map(|point| {
                    let patient = patient_of(&snapshot, point)?;
                    let x = features::featurize(patient, point.prediction_date, &vocab);
                    Ok((forward(&params, &x), point))
                })
                .collect::<Result<_, CliError>>()?;
            scored.sort_by(|a, b| {
                b.0.total_cmp(&a.0)
                    .then_with(|| a.1.patient_id.cmp(&b.1.patient_id))
            });
            scored.truncate(inputs.top);
            scored.into_iter().map(|(_, p)| p).collect()
        }
    };

    let descriptions = match &inputs.descriptions {
        Some(path) => Some(explain_io::load_code_descriptions(path).map_err(|e| match e {
            explain_io::DescriptionFileError::Io(io) => CliError::io(path, io),
            other => CliError::Format(other.to_string()),
        })?),
        None => None,
    };

    log::info!("explaining {} patients", selected.len());
    ensure_dir(out)?;
    for point in &selected {
        let patient = patient_of(&snapshot, point)?;
        let censored = cohort::censor(patient, point.prediction_date);
        let explanation = explain::explain(&params, &vocab, &censored, point.prediction_date);
        let path = out.join(explanation_file(&point.patient_id));
        explain_io::write_explanation(&path, &explanation, descriptions.as_ref())
            .map_err(|e| CliError::io(&path, e))?;
        println!(
            "{}\tprobability {:.4}\t{}",
            point.patient_id,
            explanation.probability,
            path.display()
        );
    }

    let mut manifest_inputs: Vec<(&str, &Path)> = vec![
        ("patients", &patients_path),
        ("events", &events_path),
        ("cohort", &cohort_path),
        ("vocabulary", &vocab_path),
        ("checkpoint", &checkpoint_path),
    ];
    if let Some(path) = &inputs.descriptions {
        manifest_inputs.push(("descriptions", path));
    }
    write_manifest(out, "explain", config, &manifest_inputs)?;
    Ok(())
}
