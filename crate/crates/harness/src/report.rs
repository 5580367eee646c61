//! Experiment reports and their bit-stable JSON and CSV forms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::HarnessError;

pub const REPORT_SCHEMA: &str = "sht-report/1";

/// One sweep point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub index: usize,
    /// Weight family parameter.
    pub param: f64,
    pub ap: f64,
    pub ainf: f64,
    pub sigma_ainf: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
    /// Error text when the point could not be evaluated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl Record {
    pub fn failed(index: usize, param: f64, message: String) -> Self {
        Self {
            index,
            param,
            failure: Some(message),
            ..Self::default()
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }
}

/// Log-log least-squares fit of one column against another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub target: f64,
    pub lo: f64,
    pub hi: f64,
    /// A verdict is only issued with at least 6 points and `R² ≥ 0.9`.
    pub issued: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    /// How `measured` is compared with `threshold`.
    pub rule: String,
    pub tolerance: f64,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Verdict {
    /// `measured ≤ threshold · (1 + tolerance)`.
    pub fn at_most(name: &str, measured: f64, threshold: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            rule: "measured <= threshold * (1 + tolerance)".into(),
            tolerance,
            measured,
            threshold,
            passed: measured <= threshold * (1.0 + tolerance),
        }
    }

    /// `measured ≥ threshold · (1 - tolerance)`.
    pub fn at_least(name: &str, measured: f64, threshold: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            rule: "measured >= threshold * (1 - tolerance)".into(),
            tolerance,
            measured,
            threshold,
            passed: measured >= threshold * (1.0 - tolerance),
        }
    }

    /// Finite measured constant.
    pub fn finite(name: &str, measured: f64) -> Self {
        Self {
            name: name.into(),
            rule: "measured is finite".into(),
            tolerance: 0.0,
            measured,
            threshold: f64::MAX,
            passed: measured.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub kind: String,
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
    pub fits: Vec<Fit>,
    pub verdicts: Vec<Verdict>,
    /// The sweep-wide constant the experiment measures.
    pub measured_c: f64,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            kind: config.kind.clone(),
            config: config.clone(),
            records: Vec::new(),
            fits: Vec::new(),
            verdicts: Vec::new(),
            measured_c: 0.0,
            notes: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed) && self.fits.iter().all(|f| !f.issued || f.passed)
    }

    pub fn to_json(&self) -> String {
        to_stable_json(self)
    }

    /// One row per record; columns are the fixed fields, then `extra.<key>`
    /// for every key used by any record, then `failure`.
    pub fn to_csv(&self) -> String {
        let keys: BTreeSet<&String> = self.records.iter().flat_map(|r| r.extra.keys()).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = RECORD_COLUMNS.iter().map(|s| s.to_string()).collect();
        header.extend(keys.iter().map(|k| format!("extra.{k}")));
        header.push("failure".into());
        w.write_record(&header).expect("in-memory write");
        for r in &self.records {
            let mut row = vec![
                r.index.to_string(),
                csv_float(r.param),
                csv_float(r.ap),
                csv_float(r.ainf),
                csv_float(r.sigma_ainf),
                csv_float(r.lhs),
                csv_float(r.rhs),
                csv_float(r.ratio),
            ];
            row.extend(keys.iter().map(|k| r.extra.get(*k).map_or(String::new(), |v| csv_float(*v))));
            row.push(r.failure.clone().unwrap_or_default());
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn write(&self, path: &Path, format: ReportFormat) -> Result<(), HarnessError> {
        let text = match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        };
        std::fs::write(path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
    }
}

pub const RECORD_COLUMNS: [&str; 8] = ["index", "param", "ap", "ainf", "sigma_ainf", "lhs", "rhs", "ratio"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::Csv,
            _ => Self::Json,
        }
    }
}

/// Pretty JSON with sorted keys and `%.12g` floats; non-finite floats become
/// `null`.
pub fn to_stable_json<T: Serialize + ?Sized>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("value serializes");
    let mut out = String::new();
    write_value(&mut out, &value, 0);
    out.push('\n');
    out
}

/// C `%.12g`.
pub fn format_g(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{v:.*}", (11 - exp) as usize)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_float(v: f64) -> String {
    if v.is_finite() {
        format_g(v)
    } else {
        String::new()
    }
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => write!(out, "{b}").expect("string write"),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").expect("string write");
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").expect("string write");
            } else {
                out.push_str(&format_g(n.as_f64().expect("float")));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            // serde_json's default map is ordered by key
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push_str(": ");
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_formatting() {
        let cases = [
            (1.0, "1"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0 * 1e-5, "6.66666666667e-06"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (-2.5, "-2.5"),
            (1e100, "1e+100"),
            (0.0001, "0.0001"),
            (9.9999999999999, "10"),
        ];
        for (v, s) in cases {
            assert_eq!(format_g(v), s, "{v}");
        }
    }
}
