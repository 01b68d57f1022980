//! Vocabulary and feature-matrix files.
//!
//! Vocabulary: a pruning-threshold comment, a header, then one
//! `index<TAB>descriptor` row per feature in index order. Feature matrix:
//! a `rows cols nnz` header pair, then `row col value` triplets in row
//! order; row order matches the cohort file the matrix was built from.

use super::sparse::{SparseMatrix, SparseVector};
use super::{FeatureDescriptor, FeatureVocabulary, VocabularyError};
use std::fs;
use std::io::Write;
use std::path::Path;

pub const VOCAB_HEADER: &str = "index\tdescriptor";
pub const MATRIX_HEADER: &str = "rows\tcols\tnnz";

/// Failure reading a feature artifact.
#[derive(Debug, thiserror::Error)]
pub enum FeatureFileError {
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
    #[error("{0}")]
    Vocabulary(#[from] VocabularyError),
}

pub fn write_vocabulary(path: &Path, vocab: &FeatureVocabulary) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# min_patient_count={}", vocab.min_patient_count)?;
    writeln!(f, "{VOCAB_HEADER}")?;
    for (index, descriptor) in vocab.iter() {
        writeln!(f, "{index}\t{}", descriptor.token())?;
    }
    Ok(())
}

pub fn load_vocabulary(path: &Path) -> Result<FeatureVocabulary, FeatureFileError> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();

    let min_patient_count = match lines.next() {
        Some((_, first)) if first.starts_with("# min_patient_count=") => first
            ["# min_patient_count=".len()..]
            .parse::<u32>()
            .map_err(|e| FeatureFileError::Malformed {
                path: display.clone(),
                line: 1,
                reason: format!("bad pruning threshold: {e}"),
            })?,
        _ => {
            return Err(FeatureFileError::BadHeader {
                path: display,
                expected: "# min_patient_count=N",
            })
        }
    };
    match lines.next() {
        Some((_, header)) if header == VOCAB_HEADER => {}
        _ => {
            return Err(FeatureFileError::BadHeader {
                path: display,
                expected: VOCAB_HEADER,
            })
        }
    }

    let mut descriptors = Vec::new();
    for (idx, line) in lines {
        let malformed = |reason: String| FeatureFileError::Malformed {
            path: display.clone(),
            line: idx + 1,
            reason,
        };
        let (index_str, token) = line
            .split_once('\t')
            .ok_or_else(|| malformed("expected index<TAB>descriptor".to_string()))?;
        let index: usize = index_str
            .parse()
            .map_err(|e| malformed(format!("bad index: {e}")))?;
        if index != descriptors.len() {
            return Err(malformed(format!(
                "index {index} out of order, expected {}",
                descriptors.len()
            )));
        }
        let descriptor = FeatureDescriptor::parse_token(token)
            .ok_or_else(|| malformed(format!("unrecognized descriptor {token:?}")))?;
        descriptors.push(descriptor);
    }
    Ok(FeatureVocabulary::from_descriptors(
        descriptors,
        min_patient_count,
    )?)
}

pub fn write_matrix(path: &Path, matrix: &SparseMatrix) -> std::io::Result<()> {
    let mut out = String::with_capacity(matrix.nnz() * 12 + 64);
    out.push_str(MATRIX_HEADER);
    out.push('\n');
    out.push_str(&format!(
        "{}\t{}\t{}\n",
        matrix.n_rows(),
        matrix.n_cols,
        matrix.nnz()
    ));
    for (row, vector) in matrix.rows.iter().enumerate() {
        for (col, value) in vector.iter() {
            out.push_str(&format!("{row}\t{col}\t{value}\n"));
        }
    }
    fs::write(path, out)
}

pub fn load_matrix(path: &Path) -> Result<SparseMatrix, FeatureFileError> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == MATRIX_HEADER => {}
        _ => {
            return Err(FeatureFileError::BadHeader {
                path: display,
                expected: MATRIX_HEADER,
            })
        }
    }
    let malformed_at = |line: usize, reason: String| FeatureFileError::Malformed {
        path: display.clone(),
        line,
        reason,
    };
    let (n_rows, n_cols, nnz) = match lines.next() {
        Some((idx, dims)) => {
            let parts: Vec<&str> = dims.split('\t').collect();
            if parts.len() != 3 {
                return Err(malformed_at(idx + 1, "expected rows<TAB>cols<TAB>nnz".into()));
            }
            let parse = |s: &str| -> Result<usize, FeatureFileError> {
                s.parse()
                    .map_err(|e| malformed_at(idx + 1, format!("bad dimension: {e}")))
            };
            (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?)
        }
        None => return Err(malformed_at(2, "missing dimension line".into())),
    };

    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_rows];
    let mut seen = 0usize;
    for (idx, line) in lines {
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 3 {
            return Err(malformed_at(idx + 1, "expected row<TAB>col<TAB>value".into()));
        }
        let row: usize = parts[0]
            .parse()
            .map_err(|e| malformed_at(idx + 1, format!("bad row: {e}")))?;
        let col: u32 = parts[1]
            .parse()
            .map_err(|e| malformed_at(idx + 1, format!("bad col: {e}")))?;
        let value: f64 = parts[2]
            .parse()
            .map_err(|e| malformed_at(idx + 1, format!("bad value: {e}")))?;
        if row >= n_rows {
            return Err(malformed_at(idx + 1, format!("row {row} out of range")));
        }
        if col as usize >= n_cols {
            return Err(malformed_at(idx + 1, format!("col {col} out of range")));
        }
        rows[row].push((col, value));
        seen += 1;
    }
    if seen != nnz {
        return Err(malformed_at(
            2,
            format!("header claims {nnz} entries, file has {seen}"),
        ));
    }
    let mut matrix = SparseMatrix::new(n_cols);
    for entries in rows {
        matrix.push_row(SparseVector::from_entries(entries));
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::CodeCategory;
    use crate::features::{Demographic, Stat};

    fn sample_vocab() -> FeatureVocabulary {
        FeatureVocabulary::from_descriptors(
            vec![
                FeatureDescriptor::SliceCount {
                    category: CodeCategory::Diagnosis,
                    slice: 1,
                    code: "E11:9".to_string(),
                },
                FeatureDescriptor::CategoryStat {
                    category: CodeCategory::Medication,
                    stat: Stat::MeanPerDay,
                },
                FeatureDescriptor::Demographic(Demographic::Age),
            ],
            100,
        )
        .unwrap()
    }

    #[test]
    fn vocabulary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocabulary.tsv");
        let vocab = sample_vocab();
        write_vocabulary(&path, &vocab).unwrap();
        let loaded = load_vocabulary(&path).unwrap();
        assert_eq!(loaded, vocab);
        assert_eq!(loaded.min_patient_count, 100);
    }

    #[test]
    fn vocabulary_load_rejects_gaps_and_junk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocabulary.tsv");
        fs::write(
            &path,
            "# min_patient_count=0\nindex\tdescriptor\n1\tdemo:age\n",
        )
        .unwrap();
        assert!(matches!(
            load_vocabulary(&path),
            Err(FeatureFileError::Malformed { line: 3, .. })
        ));
        fs::write(
            &path,
            "# min_patient_count=0\nindex\tdescriptor\n0\tslice5:DX:A\n",
        )
        .unwrap();
        assert!(matches!(
            load_vocabulary(&path),
            Err(FeatureFileError::Malformed { line: 3, .. })
        ));
    }

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.tsv");
        let mut matrix = SparseMatrix::new(5);
        matrix.push_row(SparseVector::from_entries(vec![(0, 1.0), (4, 2.5)]));
        matrix.push_row(SparseVector::from_entries(vec![]));
        matrix.push_row(SparseVector::from_entries(vec![(2, 0.125)]));
        write_matrix(&path, &matrix).unwrap();
        assert_eq!(load_matrix(&path).unwrap(), matrix);
    }

    #[test]
    fn matrix_load_checks_nnz_and_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.tsv");
        fs::write(&path, "rows\tcols\tnnz\n1\t2\t2\n0\t0\t1\n").unwrap();
        assert!(matches!(
            load_matrix(&path),
            Err(FeatureFileError::Malformed { .. })
        ));
        fs::write(&path, "rows\tcols\tnnz\n1\t2\t1\n0\t7\t1\n").unwrap();
        assert!(matches!(
            load_matrix(&path),
            Err(FeatureFileError::Malformed { .. })
        ));
    }
}
