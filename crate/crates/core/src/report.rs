//! Deterministic report files: JSON with sorted keys, or CSV for tabular
//! reports, with every float written as `%.12e`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::experiments::{ExponentialCheck, MillsReport, RateStudyResult};
use crate::framework::BoundReport;
use crate::polya::RegressionCheck;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    RateStudy,
    BoundSuite,
    RegressionCheck,
    MillsCheck,
    ExpCheck,
}

impl ReportKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::RateStudy => "rate_study",
            ReportKind::BoundSuite => "bound_suite",
            ReportKind::RegressionCheck => "regression_check",
            ReportKind::MillsCheck => "mills_check",
            ReportKind::ExpCheck => "exp_check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// `.csv` selects CSV; anything else is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

/// A report ready for serialization. CSV output writes the `rows` array of
/// the payload with the given column order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportArtifact {
    pub kind: ReportKind,
    pub payload: Value,
    pub format: ReportFormat,
    pub columns: Vec<String>,
}

fn to_value(v: impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::InvalidParameter(format!("unserializable report: {e}")))
}

impl ReportArtifact {
    pub fn new(kind: ReportKind, payload: impl Serialize, format: ReportFormat) -> Result<Self> {
        Ok(Self {
            kind,
            payload: to_value(payload)?,
            format,
            columns: Vec::new(),
        })
    }

    pub fn with_columns(mut self, columns: &[&str]) -> Self {
        self.columns = columns.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn rate_study(r: &RateStudyResult, format: ReportFormat) -> Result<Self> {
        let rows: Vec<Value> = r
            .rows()
            .zip(&r.degenerate)
            .map(|((n, d, b), deg)| {
                serde_json::json!({ "n": n, "distance": d, "bound": b, "degenerate": deg })
            })
            .collect();
        let payload = serde_json::json!({
            "a": r.a,
            "b": r.b,
            "h": r.h,
            "rows": rows,
            "loglog_slope": r.loglog_slope,
            "slope_stderr": r.slope_stderr,
            "fit_points": r.fit_points,
            "norm_h1": r.norm_h1,
            "norm_h2": r.norm_h2,
            "advisory": r.advisory,
            "within_bounds": r.within_bounds(),
        });
        Ok(Self::new(ReportKind::RateStudy, payload, format)?.with_columns(&["n", "distance", "bound"]))
    }

    pub fn bound_suite(
        a: f64,
        b: f64,
        h: &str,
        reports: &[BoundReport],
        format: ReportFormat,
    ) -> Result<Self> {
        let payload = serde_json::json!({ "a": a, "b": b, "h": h, "rows": reports });
        Ok(Self::new(ReportKind::BoundSuite, payload, format)?.with_columns(&[
            "label", "bound", "estimate", "argmax", "gap", "passed", "advisory",
        ]))
    }

    pub fn regression_check(checks: &[RegressionCheck], format: ReportFormat) -> Result<Self> {
        let payload = serde_json::json!({ "rows": checks });
        Ok(Self::new(ReportKind::RegressionCheck, payload, format)?.with_columns(&[
            "a",
            "b",
            "n",
            "max_first_error",
            "max_second_error",
            "max_remainder_error",
        ]))
    }

    pub fn mills_check(r: &MillsReport, format: ReportFormat) -> Result<Self> {
        Ok(Self::new(ReportKind::MillsCheck, r, format)?.with_columns(&["level", "node", "ratio", "density"]))
    }

    pub fn exp_check(r: &ExponentialCheck, format: ReportFormat) -> Result<Self> {
        let payload = serde_json::json!({
            "alpha": r.alpha,
            "h": r.h,
            "rows": r.reports,
            "lift_l1": r.lift_l1,
            "warnings": r.warnings,
        });
        Ok(Self::new(ReportKind::ExpCheck, payload, format)?.with_columns(&[
            "label", "bound", "estimate", "argmax", "passed",
        ]))
    }

    /// The serialized report. JSON output wraps the payload as
    /// `{"kind": ..., "payload": ...}`.
    pub fn render(&self) -> Result<String> {
        match self.format {
            ReportFormat::Json => {
                let mut root = Map::new();
                root.insert("kind".into(), Value::String(self.kind.as_str().into()));
                root.insert("payload".into(), self.payload.clone());
                let mut out = String::new();
                write_json(&mut out, &Value::Object(root), 0);
                out.push('\n');
                Ok(out)
            }
            ReportFormat::Csv => self.render_csv(),
        }
    }

    fn render_csv(&self) -> Result<String> {
        let rows = self
            .payload
            .get("rows")
            .and_then(Value::as_array)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("{} report has no rows for CSV output", self.kind.as_str()))
            })?;
        let columns: Vec<String> = if self.columns.is_empty() {
            rows.first()
                .and_then(Value::as_object)
                .map(|o| o.keys().cloned().collect())
                .unwrap_or_default()
        } else {
            self.columns.clone()
        };
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let fail = |e: csv::Error| Error::InvalidParameter(format!("CSV encoding failed: {e}"));
        w.write_record(&columns).map_err(fail)?;
        for row in rows {
            let record: Vec<String> = columns
                .iter()
                .map(|c| row.get(c).map_or_else(String::new, scalar_text))
                .collect();
            w.write_record(&record).map_err(fail)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidParameter(format!("CSV encoding failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}

/// Writes the artifact to `path`.
pub fn emit_report(artifact: &ReportArtifact, path: &Path) -> Result<()> {
    let text = artifact.render().map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// C `printf("%.12e")`: twelve fraction digits, signed exponent with at
/// least two digits.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn number_text(n: &serde_json::Number) -> String {
    if let Some(i) = n.as_i64() {
        i.to_string()
    } else if let Some(u) = n.as_u64() {
        u.to_string()
    } else {
        format_float(n.as_f64().unwrap_or(f64::NAN))
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => number_text(n),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_json(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&number_text(n)),
        Value::String(s) => {
            let _ = write!(out, "{}", Value::String(s.clone()));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_json(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, depth + 1);
                let _ = write!(out, "{}: ", Value::String((*k).clone()));
                write_json(out, &map[*k], depth + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{mills_counterexample, rate_study};
    use crate::fixtures;
    use crate::special::BetaParams;

    #[test]
    fn c_style_floats() {
        assert_eq!(format_float(1.0), "1.000000000000e+00");
        assert_eq!(format_float(-0.00123), "-1.230000000000e-03");
        assert_eq!(format_float(6.02e123), "6.020000000000e+123");
        assert_eq!(format_float(0.0), "0.000000000000e+00");
    }

    fn study() -> RateStudyResult {
        rate_study(BetaParams::new(2.0, 3.0).unwrap(), &fixtures::square(0.0, 1.0), &[10, 20, 50]).unwrap()
    }

    #[test]
    fn rate_study_csv() {
        let text = ReportArtifact::rate_study(&study(), ReportFormat::Csv)
            .unwrap()
            .render()
            .unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,distance,bound"));
        assert!(lines.next().unwrap().starts_with("10,"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn json_is_sorted_and_stable() {
        let art = ReportArtifact::rate_study(&study(), ReportFormat::Json).unwrap();
        let first = art.render().unwrap();
        assert_eq!(first, art.render().unwrap());
        let a = first.find("\"a\"").unwrap();
        let b = first.find("\"advisory\"").unwrap();
        assert!(a < b);
        // rendering the parsed output again gives the same bytes
        let parsed: Value = serde_json::from_str(&first).unwrap();
        let again = ReportArtifact {
            payload: parsed["payload"].clone(),
            ..art
        };
        assert_eq!(again.render().unwrap(), first);
    }

    #[test]
    fn emit_and_bad_path() {
        let dir = tempfile::tempdir().unwrap();
        let art = ReportArtifact::mills_check(&mills_counterexample(5).unwrap(), ReportFormat::Json).unwrap();
        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        emit_report(&art, &p1).unwrap();
        emit_report(&art, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        let bad = dir.path().join("missing").join("x.json");
        let err = emit_report(&art, &bad).unwrap_err().to_string();
        assert!(err.contains("missing"), "{err}");
    }
}
