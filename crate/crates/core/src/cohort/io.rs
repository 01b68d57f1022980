//! Cohort artifacts on disk: point list, funnel counts, KM curves.
//!
//! All files are tab-separated text with a header line, written in a
//! deterministic order so repeated runs produce identical bytes.

use super::km::KMCurve;
use super::{CohortStats, Label, PredictionPoint, Split};
use crate::Day;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

pub const COHORT_HEADER: &str = "patient_id\tprediction_date\tlabel\tadmitted\tsplit";

/// Failure reading a cohort file.
#[derive(Debug, thiserror::Error)]
pub enum CohortLoadError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: expected header {expected:?}")]
    BadHeader { path: String, expected: &'static str },
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
}

pub fn write_cohort(path: &Path, points: &[PredictionPoint]) -> std::io::Result<()> {
    let mut out = String::with_capacity(points.len() * 48 + COHORT_HEADER.len() + 1);
    out.push_str(COHORT_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            p.patient_id,
            p.prediction_date.to_iso(),
            p.label,
            p.admitted,
            p.split
        ));
    }
    fs::write(path, out)
}

pub fn load_cohort(path: &Path) -> Result<Vec<PredictionPoint>, CohortLoadError> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == COHORT_HEADER => {}
        _ => {
            return Err(CohortLoadError::BadHeader {
                path: display,
                expected: COHORT_HEADER,
            })
        }
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        let malformed = |reason: String| CohortLoadError::Malformed {
            path: display.clone(),
            line: idx + 1,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(malformed(format!("expected 5 fields, got {}", fields.len())));
        }
        let prediction_date =
            Day::parse_iso(fields[1]).map_err(|e| malformed(e.to_string()))?;
        let label = Label::from_str(fields[2]).map_err(malformed)?;
        let admitted = match fields[3] {
            "true" => true,
            "false" => false,
            other => return Err(malformed(format!("bad admitted flag {other:?}"))),
        };
        let split = Split::from_str(fields[4]).map_err(malformed)?;
        points.push(PredictionPoint {
            patient_id: fields[0].to_string(),
            prediction_date,
            label,
            admitted,
            split,
        });
    }
    Ok(points)
}

pub fn write_stats(path: &Path, stats: &CohortStats) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "group\tin_ehr\tselected\tadmitted")?;
    for (name, g) in [
        ("deceased", stats.deceased),
        ("alive", stats.alive),
        ("total", stats.total()),
    ] {
        writeln!(f, "{name}\t{}\t{}\t{}", g.in_ehr, g.selected, g.admitted)?;
    }
    Ok(())
}

pub fn write_km_curve(path: &Path, curve: &KMCurve) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "time_days\tsurvival")?;
    for (time, survival) in &curve.points {
        writeln!(f, "{time}\t{survival}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_points() -> Vec<PredictionPoint> {
        vec![
            PredictionPoint {
                patient_id: "P1".into(),
                prediction_date: Day(100),
                label: Label::Positive,
                admitted: true,
                split: Split::Train,
            },
            PredictionPoint {
                patient_id: "P2".into(),
                prediction_date: Day(250),
                label: Label::Negative,
                admitted: false,
                split: Split::Test,
            },
        ]
    }

    #[test]
    fn cohort_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cohort.tsv");
        let points = sample_points();
        write_cohort(&path, &points).unwrap();
        assert_eq!(load_cohort(&path).unwrap(), points);
    }

    #[test]
    fn load_rejects_bad_header_and_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cohort.tsv");
        fs::write(&path, "nope\n").unwrap();
        assert!(matches!(
            load_cohort(&path),
            Err(CohortLoadError::BadHeader { .. })
        ));
        fs::write(
            &path,
            format!("{COHORT_HEADER}\nP1\t1970-04-11\tpositive\tmaybe\ttrain\n"),
        )
        .unwrap();
        match load_cohort(&path) {
            Err(CohortLoadError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed row, got {other:?}"),
        }
    }

    #[test]
    fn stats_table_layout() {
        use crate::cohort::GroupCounts;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.tsv");
        let stats = CohortStats {
            deceased: GroupCounts {
                in_ehr: 10,
                selected: 4,
                admitted: 1,
            },
            alive: GroupCounts {
                in_ehr: 90,
                selected: 40,
                admitted: 2,
            },
        };
        write_stats(&path, &stats).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "group\tin_ehr\tselected\tadmitted\ndeceased\t10\t4\t1\nalive\t90\t40\t2\ntotal\t100\t44\t3\n"
        );
    }
}
