//! Release gate: every check here must pass before the pipeline ships.
//!
//! Correctness is checked against independent brute-force oracles, the
//! statistical floors run on synthetic data through the compiled binary,
//! and every tolerance is pinned here rather than in helper code.

use palscreen::cohort::{self, build_cohort, km::km, CohortConfig};
use palscreen::eval::{
    average_precision, brier, reliability_curve, roc_and_auroc, DEFAULT_N_BINS,
};
use palscreen::event_log::{CodeCategory, Gender, PatientRecord, Snapshot};
use palscreen::explain::{ablate_code, code_influence, explain};
use palscreen::features::{
    featurize, slice_counts, Demographic, FeatureDescriptor, FeatureVocabulary, Stat,
};
use palscreen::model::{forward, Activation, MLPParams, ModelConfig};
use palscreen::Day;
use palscreen_testkit::{cohort_check, dense_features, grad_check, histories, metrics_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

// Analytic gradients agree with central finite differences for every
// activation and for shallow through deep stacks, within the pinned
// tolerance, and the whole matrix stays inside its time budget. Batches
// that put a pre-activation within a kink margin of 0 are re-drawn, since
// central differences are meaningless across a relu or selu bend.
#[test]
fn gradients_match_finite_differences_across_activations_and_depths() {
    const STEP: f64 = 1e-5;
    const MAX_RELATIVE_ERROR: f64 = 1e-4;
    const KINK_MARGIN: f64 = 1e-3;
    const BUDGET: Duration = Duration::from_secs(30);

    let depths: [&[usize]; 3] = [&[12], &[10, 8, 6], &[10, 9, 8, 7, 6, 5, 4, 3]];
    let started = Instant::now();
    let mut seed = 0x9d0f;
    for activation in Activation::ALL {
        for hidden_dims in depths {
            seed += 1;
            let mut params = MLPParams::init(&ModelConfig {
                input_dim: 10,
                hidden_dims: hidden_dims.to_vec(),
                activation,
                seed,
            })
            .expect("valid model config");
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb47c);
            grad_check::randomize_biases(&mut params, &mut rng);
            let owned = std::iter::repeat_with(|| grad_check::random_sparse_batch(&mut rng, 10, 6))
                .take(200)
                .find(|owned| {
                    let batch: Vec<_> = owned.iter().map(|(x, y)| (x, *y)).collect();
                    grad_check::min_preactivation_magnitude(&params, &batch) > KINK_MARGIN
                })
                .unwrap_or_else(|| panic!("no clean batch for {activation} x {hidden_dims:?}"));
            let batch: Vec<_> = owned.iter().map(|(x, y)| (x, *y)).collect();
            let err = grad_check::max_relative_gradient_error(&params, &batch, STEP);
            assert!(
                err < MAX_RELATIVE_ERROR,
                "{activation} x {hidden_dims:?}: relative error {err}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < BUDGET, "gradient matrix took {elapsed:?}");
}

fn all_labelings(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u32..1 << n).map(move |mask| (0..n).map(|i| mask >> i & 1 == 1).collect())
}

// Sweep-based AP and AUROC equal brute-force threshold enumeration bit for
// bit on every labeling of up to 10 examples, across tie patterns; AUROC
// also matches the rank statistic within 1e-9 on 1,000 random instances.
#[test]
fn sweep_metrics_match_brute_force_enumeration() {
    const RANK_TOLERANCE: f64 = 1e-9;
    const RANDOM_INSTANCES: usize = 1_000;

    for n in 1..=10usize {
        let distinct: Vec<f64> = (1..=n).map(|i| i as f64 / 10.0).collect();
        let paired: Vec<f64> = (0..n).map(|i| (i / 2 + 1) as f64 / 10.0).collect();
        let tied = vec![0.5; n];
        for scores in [&distinct, &paired, &tied] {
            for labels in all_labelings(n) {
                assert_eq!(
                    average_precision(scores, &labels),
                    metrics_oracle::average_precision(scores, &labels),
                    "ap mismatch on scores {scores:?} labels {labels:?}"
                );
                match metrics_oracle::auroc_trapezoid(scores, &labels) {
                    Some(want) => {
                        let (_, got) = roc_and_auroc(scores, &labels)
                            .expect("both classes present, auroc defined");
                        assert_eq!(
                            got, want,
                            "auroc mismatch on scores {scores:?} labels {labels:?}"
                        );
                        let rank =
                            metrics_oracle::auroc_rank_statistic(scores, &labels).unwrap();
                        assert!((got - rank).abs() < RANK_TOLERANCE);
                    }
                    None => assert!(roc_and_auroc(scores, &labels).is_err()),
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xa0c);
    let mut done = 0;
    while done < RANDOM_INSTANCES {
        let n = rng.gen_range(2..=80);
        let grid = rng.gen_bool(0.5);
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if grid {
                    rng.gen_range(0..8) as f64 / 7.0
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        if labels.iter().all(|l| *l) || labels.iter().all(|l| !*l) {
            continue;
        }
        let (_, got) = roc_and_auroc(&scores, &labels).unwrap();
        let rank = metrics_oracle::auroc_rank_statistic(&scores, &labels).unwrap();
        assert!(
            (got - rank).abs() < RANK_TOLERANCE,
            "auroc {got} vs rank statistic {rank} on n={n}"
        );
        done += 1;
    }
}

// Every point the cohort builder emits passes the literal constraint
// validator, and every patient it skips genuinely has no valid candidate.
#[test]
fn cohort_selection_satisfies_every_constraint_on_random_histories() {
    const N_HISTORIES: usize = 10_000;

    let patients: Vec<PatientRecord> = histories::patient_stream(0xc004).take(N_HISTORIES).collect();
    let horizon = patients
        .iter()
        .flat_map(|p| {
            p.events
                .iter()
                .map(|e| e.date)
                .chain(p.death_date)
                .chain([p.birth_date])
        })
        .max()
        .unwrap();
    let snapshot = Snapshot::new(horizon + 1, patients).expect("valid snapshot");
    let config = CohortConfig::default();
    let (points, stats) = build_cohort(&snapshot, &config).expect("valid config");
    assert_eq!(stats.total().selected, points.len());

    let mut by_id = BTreeMap::new();
    for point in &points {
        let prior = by_id.insert(point.patient_id.as_str(), point);
        assert!(prior.is_none(), "duplicate point for {}", point.patient_id);
    }

    let mut violations = Vec::new();
    for patient in snapshot.patients.values() {
        match by_id.get(patient.patient_id.as_str()) {
            Some(point) => {
                if let Err(reason) = cohort_check::check_point(patient, point, &config) {
                    violations.push(format!("{}: {reason}", patient.patient_id));
                }
            }
            None => {
                if let Some(candidate) = cohort_check::reference_point(patient, &config) {
                    violations.push(format!(
                        "{}: excluded despite valid candidate {candidate:?}",
                        patient.patient_id
                    ));
                }
            }
        }
    }
    assert!(
        violations.is_empty(),
        "{} violations, first: {}",
        violations.len(),
        violations[0]
    );
}

// Vocabulary spanning everything the random histories can emit.
fn full_vocabulary() -> FeatureVocabulary {
    let mut descriptors = Vec::new();
    for category in CodeCategory::ALL {
        let codes: &[&str] = if category == CodeCategory::Encounter {
            &["Inpatient", "Outpatient", "Office Visit", "Hx Scan"]
        } else {
            &["A", "B", "C", "D:1", "D:2", "E", "F", "G"]
        };
        for slice in 1..=4u8 {
            for code in codes {
                descriptors.push(FeatureDescriptor::SliceCount {
                    category,
                    slice,
                    code: (*code).to_string(),
                });
            }
        }
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
    descriptors.sort();
    FeatureVocabulary::from_descriptors(descriptors, 0).expect("well-formed vocabulary")
}

// Feature vectors equal a naive dense recomputation, ignore events after
// the prediction date, keep slice counts summing to the window count, and
// never go negative; 1,000 random fixtures.
#[test]
fn featurization_matches_the_dense_reference() {
    const FIXTURES: usize = 1_000;

    let vocab = full_vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(0xfea);
    for patient in histories::patient_stream(0xfea).take(FIXTURES) {
        let pd = Day(rng.gen_range(100..1500));
        let x = featurize(&patient, pd, &vocab);
        let dense = x.to_dense(vocab.len());
        let reference = dense_features::dense_reference(&patient, pd, &vocab);
        assert_eq!(dense, reference, "dense mismatch for {}", patient.patient_id);
        assert!(dense.iter().all(|v| *v >= 0.0));

        let censored = cohort::censor(&patient, pd);
        assert_eq!(
            x,
            featurize(&censored, pd, &vocab),
            "events after the prediction date moved the vector"
        );

        let in_window: BTreeSet<(CodeCategory, &str)> = slice_counts(&patient, pd)
            .keys()
            .map(|(category, _, code)| (*category, *code))
            .collect();
        for (category, code) in in_window {
            let from_slices: f64 = (1..=4u8)
                .map(|slice| {
                    let descriptor = FeatureDescriptor::SliceCount {
                        category,
                        slice,
                        code: code.to_string(),
                    };
                    vocab.index_of(&descriptor).map_or(0.0, |i| x.get(i))
                })
                .sum();
            let direct = patient
                .events
                .iter()
                .filter(|e| e.category == category && e.code == code)
                .filter(|e| (0..=365).contains(&pd.days_since(e.date)))
                .count();
            assert_eq!(from_slices, direct as f64, "{category:?} {code}");
        }
    }
}

// Ablating a code scores identically to never having recorded it, codes a
// patient lacks have exactly zero influence, and reports are deterministic;
// at least 1,000 (patient, code) pairs.
#[test]
fn ablation_influence_is_exact_and_deterministic() {
    const PAIRS: usize = 1_000;

    let vocab = full_vocabulary();
    let params = MLPParams::init(&ModelConfig {
        input_dim: vocab.len(),
        hidden_dims: vec![10, 8],
        activation: Activation::Selu,
        seed: 0xab1,
    })
    .unwrap();

    let mut pairs = 0;
    for patient in histories::patient_stream(0xab1) {
        let Some(pd) = patient.events.last().map(|e| e.date) else {
            continue;
        };
        let p_with = forward(&params, &featurize(&patient, pd, &vocab));
        let codes: BTreeSet<(CodeCategory, String)> = slice_counts(&patient, pd)
            .keys()
            .map(|(category, _, code)| (*category, (*code).to_string()))
            .collect();
        for (category, code) in &codes {
            let ablated = ablate_code(&patient, *category, code);
            let rebuilt = PatientRecord {
                events: patient
                    .events
                    .iter()
                    .filter(|e| !(e.category == *category && e.code == *code))
                    .cloned()
                    .collect(),
                ..patient.clone()
            };
            let p_ablated = forward(&params, &featurize(&ablated, pd, &vocab));
            let p_rebuilt = forward(&params, &featurize(&rebuilt, pd, &vocab));
            assert_eq!(p_ablated, p_rebuilt, "two-path mismatch on {code}");
            let influence = code_influence(&params, &vocab, &patient, pd, *category, code);
            assert_eq!(influence.influence, p_with - p_ablated);
            pairs += 1;
        }

        // Codes with no in-window occurrence must not move the score.
        for (category, foreign) in [
            (CodeCategory::Diagnosis, "ZZ:9"),
            (CodeCategory::Medication, "ZZ:9"),
        ] {
            let influence = code_influence(&params, &vocab, &patient, pd, category, foreign);
            assert_eq!(influence.influence, 0.0);
            assert_eq!(influence.original_value, 0.0);
        }
        if let Some((category, absent)) = absent_palette_code(&codes) {
            let influence = code_influence(&params, &vocab, &patient, pd, category, &absent);
            assert_eq!(influence.influence, 0.0, "{category:?} {absent}");
        }

        let report = explain(&params, &vocab, &patient, pd);
        assert_eq!(report, explain(&params, &vocab, &patient, pd));

        if pairs >= PAIRS {
            break;
        }
    }
    assert!(pairs >= PAIRS, "only {pairs} pairs exercised");
}

fn absent_palette_code(present: &BTreeSet<(CodeCategory, String)>) -> Option<(CodeCategory, String)> {
    for code in ["A", "B", "C", "D:1", "D:2", "E", "F", "G"] {
        if !present.contains(&(CodeCategory::Diagnosis, code.to_string())) {
            return Some((CodeCategory::Diagnosis, code.to_string()));
        }
    }
    None
}

#[test]
fn selu_constants_are_pinned() {
    assert!((Activation::Selu.apply(1.0) - 1.0507009873554805).abs() < 1e-12);
    assert!((Activation::Selu.apply(-50.0) - -1.7580993408473766).abs() < 1e-6);
}

// Scores drawn as true Bernoulli probabilities must sit on the reliability
// diagonal and match the analytic Brier expectation of 1/6.
#[test]
fn calibration_holds_on_bernoulli_scores() {
    const SAMPLES: usize = 100_000;
    const MAX_BIN_DEVIATION: f64 = 0.05;
    const BRIER_TOLERANCE: f64 = 0.01;

    let mut rng = ChaCha8Rng::seed_from_u64(0xca1);
    let scores: Vec<f64> = (0..SAMPLES).map(|_| rng.gen()).collect();
    let labels: Vec<bool> = scores.iter().map(|p| rng.gen_bool(*p)).collect();

    let curve = reliability_curve(&scores, &labels, DEFAULT_N_BINS);
    assert!(!curve.points.is_empty());
    for (mean_score, positive_fraction) in &curve.points {
        assert!(
            (mean_score - positive_fraction).abs() < MAX_BIN_DEVIATION,
            "bin at {mean_score} observed {positive_fraction}"
        );
    }
    let b = brier(&scores, &labels).unwrap();
    assert!(
        (b - 1.0 / 6.0).abs() < BRIER_TOLERANCE,
        "brier {b} vs expected 1/6"
    );
}

// Hand-computed product-limit fixture, plus the survival endpoints that the
// label definitions force on every valid cohort.
#[test]
fn km_matches_hand_computed_fixture_and_forced_endpoints() {
    let curve = km(&[5, 10], &[true, false]);
    assert_eq!(curve.points, vec![(0, 1.0), (5, 0.5)]);
    assert_eq!(curve.survival_at(4), 1.0);
    assert_eq!(curve.survival_at(5), 0.5);
    assert_eq!(curve.survival_at(10), 0.5);

    let config = palscreen::event_log::synth::SynthConfig {
        n_patients: 2_000,
        ..Default::default()
    };
    let snapshot = palscreen::event_log::synth::generate_synthetic(&config).unwrap();
    let (points, _) = build_cohort(&snapshot, &CohortConfig::default()).unwrap();
    let curves = cohort::km::km_censor_curve(&points, &snapshot).unwrap();
    assert_eq!(curves.positive.survival_at(365), 0.0);
    assert_eq!(curves.negative.survival_at(365), 1.0);
    assert!(curves.negative.points.iter().all(|(_, s)| *s == 1.0));
}

fn run_stage(config: &Path, data: &Path, out: &Path, args: &[&str]) -> String {
    let output = Command::new(env!("CARGO_BIN_EXE_palscreen"))
        .arg("--config")
        .arg(config)
        .arg("--data")
        .arg(data)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary should spawn");
    assert!(
        output.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn report_field(report: &str, name: &str) -> f64 {
    report
        .lines()
        .find_map(|line| {
            let (key, value) = line.split_once('\t')?;
            (key == name).then(|| value.parse().expect("numeric report field"))
        })
        .unwrap_or_else(|| panic!("report is missing {name}"))
}

// Full pipeline through the compiled binary at the documented operating
// point: 20,000 patients at 7% target prevalence, 8:1:1 split, a 4x64
// network, batch 128, snapshots every 250 iterations. The learned model
// must clear the metric floors and the whole run must fit the time budget.
// These floors check that real signal survives the pipeline; they are not
// external benchmark numbers.
#[test]
fn synthetic_end_to_end_clears_the_metric_floor() {
    const MIN_AUROC: f64 = 0.85;
    const MIN_AP_OVER_PREVALENCE: f64 = 3.0;
    const BUDGET: Duration = Duration::from_secs(600);

    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.txt");
    fs::write(
        &config,
        "synth.n_patients = 20000\n\
         synth.target_prevalence = 0.07\n\
         cohort.split_train = 0.8\n\
         cohort.split_validation = 0.1\n\
         cohort.split_test = 0.1\n\
         model.hidden_dims = 64,64,64,64\n\
         train.batch_size = 128\n\
         train.snapshot_every = 250\n",
    )
    .unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");

    let started = Instant::now();
    for args in [
        vec!["synth"],
        vec!["cohort"],
        vec!["featurize"],
        vec!["train"],
        vec!["eval"],
        vec!["explain", "--top", "1"],
    ] {
        run_stage(&config, &data, &out, &args);
    }
    let elapsed = started.elapsed();

    let report = fs::read_to_string(out.join("report.tsv")).unwrap();
    let auroc = report_field(&report, "auroc");
    let ap = report_field(&report, "average_precision");
    let prevalence = report_field(&report, "prevalence");
    assert!(auroc >= MIN_AUROC, "test auroc {auroc}");
    assert!(
        ap >= MIN_AP_OVER_PREVALENCE * prevalence,
        "test ap {ap} vs prevalence {prevalence}"
    );
    assert!(elapsed < BUDGET, "pipeline took {elapsed:?}");
}

fn artifact_state(dirs: &[&Path]) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut state = BTreeMap::new();
    for dir in dirs {
        for entry in fs::read_dir(dir).expect("artifact dir") {
            let path = entry.unwrap().path();
            if path.is_file() {
                let bytes = fs::read(&path).unwrap();
                state.insert(path, bytes);
            }
        }
    }
    state
}

// Rerunning any stage over unchanged inputs must reproduce every artifact
// byte for byte, manifests included.
#[test]
fn stage_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.txt");
    fs::write(
        &config,
        "synth.n_patients = 1500\n\
         features.min_patient_count = 10\n\
         model.hidden_dims = 24,24\n\
         train.max_iterations = 200\n\
         train.snapshot_every = 50\n",
    )
    .unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");

    let stages: [&[&str]; 6] = [
        &["synth"],
        &["cohort"],
        &["featurize"],
        &["train"],
        &["eval"],
        &["explain", "--top", "1"],
    ];
    for args in stages {
        run_stage(&config, &data, &out, args);
    }
    let baseline = artifact_state(&[&data, &out]);
    assert!(baseline.len() > 10, "expected a full artifact set");

    for args in stages {
        run_stage(&config, &data, &out, args);
        let now = artifact_state(&[&data, &out]);
        assert_eq!(
            baseline.keys().collect::<Vec<_>>(),
            now.keys().collect::<Vec<_>>(),
            "rerunning {args:?} changed the artifact set"
        );
        for (path, bytes) in &now {
            assert_eq!(
                bytes, &baseline[path],
                "rerunning {args:?} changed {}",
                path.display()
            );
        }
    }
}
