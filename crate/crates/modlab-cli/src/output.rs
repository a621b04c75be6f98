//! Report rendering: a fixed-schema CSV table and a JSON mirror.
//!
//! Every report row has the same ten columns —
//! `experiment,d,j,metric,estimate,se,analytic,bound_rhs,pass,seed` — with
//! floats printed as `{:.16e}` (17 significant digits) and absent values left
//! empty (CSV) or `null` (JSON). Metadata (experiment name, library version,
//! config hash, root seed, worker count) rides in `#`-prefixed comment lines
//! before the CSV header and as top-level JSON fields.
//!
//! Both emitters are hand-rolled so output is byte-deterministic: rendering
//! the same rows twice yields identical bytes, which the reproducibility
//! checks compare directly. No field may contain a comma, quote, or newline —
//! metric labels use `;` and `[]` for structure — and the emitters reject
//! rather than quote, keeping the grammar trivial for downstream parsers.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::OutputFormat;

/// Column header; the one fixed schema for every experiment kind.
pub const CSV_HEADER: &str = "experiment,d,j,metric,estimate,se,analytic,bound_rhs,pass,seed";

/// Errors from report rendering and writing.
#[derive(Debug, Error)]
pub enum OutputError {
    /// No rows were produced; reports are never written empty.
    #[error("report `{0}` produced no rows; refusing to write an empty report")]
    EmptyReport(String),
    /// A text field contains a character the grammar forbids.
    #[error("field `{field}` contains a character forbidden in reports: {value:?}")]
    ForbiddenCharacter {
        /// Which field.
        field: &'static str,
        /// Offending value.
        value: String,
    },
    /// A numeric cell is NaN or infinite.
    #[error("metric `{metric}` produced a non-finite {field}: {value}")]
    NonFinite {
        /// Metric label of the row.
        metric: String,
        /// Which numeric column.
        field: &'static str,
        /// The value.
        value: f64,
    },
    /// Filesystem failure, with the path that failed.
    #[error("cannot write report to {path}: {source}")]
    Io {
        /// Target path.
        path: PathBuf,
        /// Underlying error.
        #[source]
        source: io::Error,
    },
}

/// One report row in the fixed schema.
#[derive(Debug, Clone, PartialEq)]
pub struct OutRow {
    /// Experiment name (the config's `name`).
    pub experiment: String,
    /// Ambient dimension, when the metric has one.
    pub d: Option<usize>,
    /// Power/order, when the metric has one.
    pub j: Option<u32>,
    /// Metric label; uses `[` `]` `;` `=` for structure, never a comma.
    pub metric: String,
    /// Point estimate.
    pub estimate: Option<f64>,
    /// Standard error.
    pub se: Option<f64>,
    /// Analytic/limit value, when one exists.
    pub analytic: Option<f64>,
    /// Bound right-hand side, when the row asserts a bound.
    pub bound_rhs: Option<f64>,
    /// Verdict, when the row carries an assertion.
    pub pass: Option<bool>,
    /// Root seed of the run.
    pub seed: u64,
}

/// Report-level metadata embedded in every output file.
#[derive(Debug, Clone, Copy)]
pub struct ReportMeta<'a> {
    /// Experiment name.
    pub experiment: &'a str,
    /// Version of this crate.
    pub version: &'a str,
    /// FNV-1a 64 hash of the canonical config serialization.
    pub config_hash: u64,
    /// Root seed.
    pub seed: u64,
    /// Worker count.
    pub workers: usize,
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any f64.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_text(field: &'static str, value: &str) -> Result<(), OutputError> {
    if value.chars().any(|c| c == ',' || c == '"' || c == '\n' || c == '\r') {
        return Err(OutputError::ForbiddenCharacter { field, value: value.into() });
    }
    Ok(())
}

fn check_row(row: &OutRow) -> Result<(), OutputError> {
    check_text("experiment", &row.experiment)?;
    check_text("metric", &row.metric)?;
    for (field, value) in [
        ("estimate", row.estimate),
        ("se", row.se),
        ("analytic", row.analytic),
        ("bound_rhs", row.bound_rhs),
    ] {
        if let Some(v) = value {
            if !v.is_finite() {
                return Err(OutputError::NonFinite { metric: row.metric.clone(), field, value: v });
            }
        }
    }
    Ok(())
}

/// Renders the CSV report (metadata comments, header, one line per row).
pub fn render_csv(meta: &ReportMeta<'_>, rows: &[OutRow]) -> Result<String, OutputError> {
    if rows.is_empty() {
        return Err(OutputError::EmptyReport(meta.experiment.into()));
    }
    check_text("experiment", meta.experiment)?;
    let mut out = String::new();
    writeln!(out, "# experiment = {}", meta.experiment).unwrap();
    writeln!(out, "# version = {}", meta.version).unwrap();
    writeln!(out, "# config_hash = fnv1a64:{:016x}", meta.config_hash).unwrap();
    writeln!(out, "# seed = {}", meta.seed).unwrap();
    writeln!(out, "# workers = {}", meta.workers).unwrap();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        check_row(row)?;
        let cells = [
            row.experiment.clone(),
            row.d.map(|v| v.to_string()).unwrap_or_default(),
            row.j.map(|v| v.to_string()).unwrap_or_default(),
            row.metric.clone(),
            row.estimate.map(fmt_float).unwrap_or_default(),
            row.se.map(fmt_float).unwrap_or_default(),
            row.analytic.map(fmt_float).unwrap_or_default(),
            row.bound_rhs.map(fmt_float).unwrap_or_default(),
            row.pass.map(|p| p.to_string()).unwrap_or_default(),
            row.seed.to_string(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                write!(out, "\\u{:04x}", c as u32).unwrap();
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn json_opt_float(v: Option<f64>) -> String {
    match v {
        Some(x) => fmt_float(x),
        None => "null".into(),
    }
}

/// Renders the JSON report mirroring the CSV columns as named fields.
pub fn render_json(meta: &ReportMeta<'_>, rows: &[OutRow]) -> Result<String, OutputError> {
    if rows.is_empty() {
        return Err(OutputError::EmptyReport(meta.experiment.into()));
    }
    let mut out = String::new();
    out.push_str("{\n");
    writeln!(out, "  \"experiment\": {},", json_string(meta.experiment)).unwrap();
    writeln!(out, "  \"version\": {},", json_string(meta.version)).unwrap();
    writeln!(out, "  \"config_hash\": \"fnv1a64:{:016x}\",", meta.config_hash).unwrap();
    writeln!(out, "  \"seed\": {},", meta.seed).unwrap();
    writeln!(out, "  \"workers\": {},", meta.workers).unwrap();
    out.push_str("  \"rows\": [\n");
    for (i, row) in rows.iter().enumerate() {
        check_row(row)?;
        out.push_str("    {");
        write!(out, "\"experiment\": {}, ", json_string(&row.experiment)).unwrap();
        write!(
            out,
            "\"d\": {}, ",
            row.d.map(|v| v.to_string()).unwrap_or_else(|| "null".into())
        )
        .unwrap();
        write!(
            out,
            "\"j\": {}, ",
            row.j.map(|v| v.to_string()).unwrap_or_else(|| "null".into())
        )
        .unwrap();
        write!(out, "\"metric\": {}, ", json_string(&row.metric)).unwrap();
        write!(out, "\"estimate\": {}, ", json_opt_float(row.estimate)).unwrap();
        write!(out, "\"se\": {}, ", json_opt_float(row.se)).unwrap();
        write!(out, "\"analytic\": {}, ", json_opt_float(row.analytic)).unwrap();
        write!(out, "\"bound_rhs\": {}, ", json_opt_float(row.bound_rhs)).unwrap();
        write!(
            out,
            "\"pass\": {}, ",
            row.pass.map(|p| p.to_string()).unwrap_or_else(|| "null".into())
        )
        .unwrap();
        write!(out, "\"seed\": {}", row.seed).unwrap();
        out.push('}');
        out.push_str(if i + 1 < rows.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    Ok(out)
}

/// Renders and writes the report to `<dir>/<name>.<ext>`, creating `dir` if
/// needed. Nothing is written when rendering fails (e.g. empty row set).
pub fn write_report(
    dir: &Path,
    name: &str,
    format: OutputFormat,
    meta: &ReportMeta<'_>,
    rows: &[OutRow],
) -> Result<PathBuf, OutputError> {
    let text = match format {
        OutputFormat::Csv => render_csv(meta, rows)?,
        OutputFormat::Json => render_json(meta, rows)?,
    };
    fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.into(), source })?;
    let path = dir.join(format!("{name}.{}", format.extension()));
    fs::write(&path, text).map_err(|source| OutputError::Io { path: path.clone(), source })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ReportMeta<'static> {
        ReportMeta { experiment: "demo", version: "0.1.0", config_hash: 0xabc, seed: 7, workers: 4 }
    }

    fn row() -> OutRow {
        OutRow {
            experiment: "demo".into(),
            d: Some(64),
            j: Some(2),
            metric: "sup_gap".into(),
            estimate: Some(0.125),
            se: Some(0.5e-3),
            analytic: None,
            bound_rhs: Some(0.4253),
            pass: Some(true),
            seed: 7,
        }
    }

    #[test]
    fn csv_layout_is_exact() {
        let text = render_csv(&meta(), &[row()]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# experiment = demo");
        assert_eq!(lines[2], "# config_hash = fnv1a64:0000000000000abc");
        assert_eq!(lines[3], "# seed = 7");
        assert_eq!(lines[4], "# workers = 4");
        assert_eq!(lines[5], CSV_HEADER);
        assert_eq!(
            lines[6],
            "demo,64,2,sup_gap,1.2500000000000000e-1,5.0000000000000001e-4,,\
             4.2530000000000001e-1,true,7"
        );
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_float(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_float(-2.5e-17), "-2.4999999999999999e-17");
        // Round trip: the printed token parses back to the same bits.
        for &x in &[std::f64::consts::PI, 0.1, 2.0_f64.powi(-40), 1e300] {
            let reparsed: f64 = fmt_float(x).parse().unwrap();
            assert_eq!(reparsed.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn json_mirrors_columns_and_is_valid() {
        let text = render_json(&meta(), &[row()]).unwrap();
        assert!(text.contains("\"config_hash\": \"fnv1a64:0000000000000abc\""));
        assert!(text.contains("\"analytic\": null"));
        assert!(text.contains("\"estimate\": 1.2500000000000000e-1"));
        assert!(text.contains("\"pass\": true"));
        // Structural sanity: balanced braces/brackets, no trailing comma.
        assert_eq!(text.matches('{').count(), text.matches('}').count());
        assert_eq!(text.matches('[').count(), text.matches(']').count());
        assert!(!text.contains(",\n  ]"));
    }

    #[test]
    fn empty_reports_are_rejected() {
        assert!(matches!(render_csv(&meta(), &[]), Err(OutputError::EmptyReport(_))));
        assert!(matches!(render_json(&meta(), &[]), Err(OutputError::EmptyReport(_))));
    }

    #[test]
    fn forbidden_characters_and_nonfinite_values_are_rejected() {
        let mut bad = row();
        bad.metric = "a,b".into();
        assert!(matches!(
            render_csv(&meta(), &[bad]),
            Err(OutputError::ForbiddenCharacter { field: "metric", .. })
        ));
        let mut nan = row();
        nan.estimate = Some(f64::NAN);
        assert!(matches!(
            render_json(&meta(), &[nan]),
            Err(OutputError::NonFinite { field: "estimate", .. })
        ));
    }

    #[test]
    fn rendering_is_deterministic() {
        let rows = vec![row(), row()];
        assert_eq!(render_csv(&meta(), &rows).unwrap(), render_csv(&meta(), &rows).unwrap());
        assert_eq!(render_json(&meta(), &rows).unwrap(), render_json(&meta(), &rows).unwrap());
    }
}
