//! Explanation report rendering.
//!
//! Tab-separated text: a two-line header (patient id, probability), a
//! column header, then one row per reported influence. Influences print
//! with four decimal places; values print as plain numbers. An optional
//! code-description table (tab-separated `code<TAB>text`) fills the
//! description column; unknown codes leave it empty.

use super::{Explanation, InfluenceTarget};
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum DescriptionFileError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("{path} line {line}: expected code<TAB>description")]
    Malformed { path: String, line: usize },
}

/// Load a code-description table. Later duplicates win; blank lines are
/// skipped.
pub fn load_code_descriptions(
    path: &Path,
) -> Result<BTreeMap<String, String>, DescriptionFileError> {
    let text = fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (code, description) =
            line.split_once('\t')
                .ok_or_else(|| DescriptionFileError::Malformed {
                    path: path.display().to_string(),
                    line: i + 1,
                })?;
        out.insert(code.to_string(), description.to_string());
    }
    Ok(out)
}

fn description_for(
    target: &InfluenceTarget,
    descriptions: Option<&BTreeMap<String, String>>,
) -> String {
    match target {
        InfluenceTarget::Code { code, .. } => descriptions
            .and_then(|d| d.get(code))
            .cloned()
            .unwrap_or_default(),
        InfluenceTarget::Age => "age in years, zeroed for the probe".to_string(),
        InfluenceTarget::Gender => "gender swapped for the probe".to_string(),
    }
}

pub fn render_explanation(
    explanation: &Explanation,
    descriptions: Option<&BTreeMap<String, String>>,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("patient\t{}\n", explanation.patient_id));
    out.push_str(&format!("probability\t{:.4}\n", explanation.probability));
    out.push_str("category\tcode\tvalue\tinfluence\tdescription\n");
    for (name, rows) in explanation.sections() {
        for row in rows {
            out.push_str(&format!(
                "{name}\t{}\t{}\t{:.4}\t{}\n",
                row.target.label(),
                row.original_value,
                row.influence,
                description_for(&row.target, descriptions),
            ));
        }
    }
    out
}

pub fn write_explanation(
    path: &Path,
    explanation: &Explanation,
    descriptions: Option<&BTreeMap<String, String>>,
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(render_explanation(explanation, descriptions).as_bytes())?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::CodeCategory;
    use crate::explain::Influence;

    fn sample() -> Explanation {
        Explanation {
            patient_id: "P000042".to_string(),
            probability: 0.87129,
            diagnoses: vec![Influence {
                target: InfluenceTarget::Code {
                    category: CodeCategory::Diagnosis,
                    code: "D197".to_string(),
                },
                original_value: 16.0,
                influence: 0.12991,
            }],
            procedures: vec![],
            medications: vec![],
            encounters: vec![],
            demographics: vec![Influence {
                target: InfluenceTarget::Age,
                original_value: 81.0,
                influence: 0.001,
            }],
        }
    }

    #[test]
    fn renders_expected_rows() {
        let mut descriptions = BTreeMap::new();
        descriptions.insert(
            "D197".to_string(),
            "secondary malignant neoplasm".to_string(),
        );
        let text = render_explanation(&sample(), Some(&descriptions));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "patient\tP000042");
        assert_eq!(lines[1], "probability\t0.8713");
        assert_eq!(lines[2], "category\tcode\tvalue\tinfluence\tdescription");
        assert_eq!(
            lines[3],
            "diagnosis\tD197\t16\t0.1299\tsecondary malignant neoplasm"
        );
        assert_eq!(
            lines[4],
            "demographic\tage\t81\t0.0010\tage in years, zeroed for the probe"
        );
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn missing_descriptions_leave_the_column_empty() {
        let text = render_explanation(&sample(), None);
        assert!(text.contains("diagnosis\tD197\t16\t0.1299\t\n"));
    }

    #[test]
    fn description_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("codes.tsv");
        fs::write(&path, "D197\tsecondary malignant neoplasm\nR001\taspirin\n").unwrap();
        let map = load_code_descriptions(&path).unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map["R001"], "aspirin");

        fs::write(&path, "not a pair\n").unwrap();
        assert!(matches!(
            load_code_descriptions(&path),
            Err(DescriptionFileError::Malformed { line: 1, .. })
        ));
    }
}
