//! Text output for curves and the evaluation report.
//!
//! Curves are two-column tab-separated files with an axis-name header.
//! The report is a flat list of name/value pairs, one per line, so other
//! tools can grep single metrics. Floats use Rust's shortest round-trip
//! formatting; identical inputs produce identical bytes.

use super::{CurvePoints, EvaluationReport, MetricBundle};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub fn write_curve(path: &Path, curve: &CurvePoints) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let (x, y) = curve.kind.axis_names();
    writeln!(w, "{x}\t{y}")?;
    for (x, y) in &curve.points {
        writeln!(w, "{x}\t{y}")?;
    }
    w.flush()
}

fn write_bundle(w: &mut impl Write, prefix: &str, bundle: &MetricBundle) -> io::Result<()> {
    writeln!(w, "{prefix}n_examples\t{}", bundle.n_examples)?;
    writeln!(w, "{prefix}n_positive\t{}", bundle.n_positive)?;
    writeln!(w, "{prefix}prevalence\t{}", bundle.prevalence())?;
    writeln!(w, "{prefix}average_precision\t{}", bundle.average_precision)?;
    writeln!(w, "{prefix}auroc\t{}", bundle.auroc)?;
    writeln!(w, "{prefix}brier\t{}", bundle.brier)?;
    writeln!(w, "{prefix}recall_at_target_precision\t{}", bundle.recall_at_target)?;
    Ok(())
}

pub fn write_report(path: &Path, report: &EvaluationReport) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "precision_target\t{}", report.precision_target)?;
    writeln!(w, "reliability_bins\t{}", report.n_bins)?;
    write_bundle(&mut w, "", &report.overall)?;
    match &report.admitted {
        Some(bundle) => write_bundle(&mut w, "admitted_", bundle)?,
        None => writeln!(w, "admitted_metrics\tunavailable")?,
    }
    w.flush()
}
