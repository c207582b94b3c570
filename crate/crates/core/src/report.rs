//! Sweep reports: tabular results, slope fits, gates, and CSV/JSON emission.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The cell could not be computed.
    Error,
    /// No gate applies to this row.
    Info,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Error => "error",
            Verdict::Info => "info",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub params: Vec<f64>,
    /// NaN (empty cells) is written as `null`.
    #[serde(deserialize_with = "null_as_nan")]
    pub value: f64,
    /// Change of `value` under grid refinement, when measured.
    pub delta: Option<f64>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Least-squares fit of `log y` against `log x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub n: usize,
    /// `None` when fewer than two usable points exist.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub stderr: Option<f64>,
    /// One-sided 95% lower confidence bound on the slope.
    pub lower95: Option<f64>,
}

impl SlopeFit {
    /// Fits `ln y = c + s ln x` over points with `x, y > 0`.
    pub fn log_log(points: &[(f64, f64)]) -> SlopeFit {
        let pts: Vec<(f64, f64)> =
            points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
        Self::linear(&pts)
    }

    pub fn linear(pts: &[(f64, f64)]) -> SlopeFit {
        let n = pts.len();
        let none = SlopeFit { n, slope: None, intercept: None, stderr: None, lower95: None };
        if n < 2 {
            return none;
        }
        let nf = n as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx <= 0.0 {
            return none;
        }
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        if n == 2 {
            return SlopeFit { n, slope: Some(slope), intercept: Some(intercept), stderr: None, lower95: None };
        }
        let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        let df = nf - 2.0;
        let stderr = (rss / df / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, df).map(|d| d.inverse_cdf(0.95)).unwrap_or(f64::INFINITY);
        SlopeFit { n, slope: Some(slope), intercept: Some(intercept), stderr: Some(stderr), lower95: Some(slope - t * stderr) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sup: Option<f64>,
    pub slope_fits: BTreeMap<String, SlopeFit>,
    pub metrics: BTreeMap<String, f64>,
}

/// A named pass/fail check over the whole sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Gate { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub command: String,
    /// Free-form echo of the configuration that produced the report.
    pub command_echo: String,
    /// Column names of `Row::params`.
    pub param_names: Vec<String>,
    pub rows: Vec<Row>,
    pub summary: Summary,
    pub gates: Vec<Gate>,
}

impl SweepReport {
    pub fn new(command: &str, param_names: &[&str]) -> Self {
        SweepReport {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            command_echo: String::new(),
            param_names: param_names.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary: Summary::default(),
            gates: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed) && self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }

    /// Largest finite value over rows that were computed.
    pub fn row_sup(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.verdict != Verdict::Error && r.value.is_finite())
            .map(|r| r.value)
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// CSV with one column per parameter, then `value`, `delta`, `verdict`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.param_names.iter().map(String::as_str).collect();
        header.extend(["value", "delta", "verdict"]);
        w.write_record(&header)?;
        for r in &self.rows {
            if r.params.len() != self.param_names.len() {
                return Err(Error::DimensionMismatch { expected: self.param_names.len(), got: r.params.len() });
            }
            let mut rec: Vec<String> = r.params.iter().map(|v| fmt_num(*v)).collect();
            rec.push(fmt_num(r.value));
            rec.push(r.delta.map(fmt_num).unwrap_or_default());
            rec.push(r.verdict.as_str().to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::input(e.to_string()))
    }
}

/// Shortest round-trip representation.
fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub fn emit(report: &SweepReport, format: Format, path: &Path) -> Result<()> {
    let body = match format {
        Format::Csv => report.to_csv()?,
        Format::Json => report.to_json()? + "\n",
    };
    std::fs::write(path, body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(p: &[f64], v: f64) -> Row {
        Row { params: p.to_vec(), value: v, delta: Some(0.0), verdict: Verdict::Pass, error: None }
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let r = SweepReport::new("sweep.norms", &["nu", "alpha"]);
        assert_eq!(r.to_csv().unwrap(), "nu,alpha,value,delta,verdict\n");
    }

    #[test]
    fn single_cell_has_one_row() {
        let mut r = SweepReport::new("x", &["nu"]);
        r.rows.push(row(&[4.0], 1.25));
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().nth(1).unwrap(), "4.0,1.25,0.0,pass");
    }

    #[test]
    fn json_round_trip() {
        let mut r = SweepReport::new("x", &["nu"]);
        r.rows.push(row(&[4.0], 1.0 / 3.0));
        r.summary.metrics.insert("b".into(), 2.0);
        r.summary.metrics.insert("a".into(), 1.0);
        r.summary.slope_fits.insert("full".into(), SlopeFit::log_log(&[(1.0, 1.0), (2.0, 2.0), (4.0, 4.1)]));
        r.gates.push(Gate::new("g", true, "ok"));
        let back = SweepReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let j = r.to_json().unwrap();
        assert!(j.find("\"a\"").unwrap() < j.find("\"b\"").unwrap());
    }

    #[test]
    fn nan_value_round_trips_as_null() {
        let mut r = SweepReport::new("x", &["nu"]);
        r.rows.push(row(&[4.0], f64::NAN));
        let j = r.to_json().unwrap();
        assert!(j.contains("\"value\": null"));
        assert!(SweepReport::from_json(&j).unwrap().rows[0].value.is_nan());
    }

    #[test]
    fn slope_fit_exact_line() {
        let pts: Vec<(f64, f64)> = (1..6).map(|k| (2f64.powi(k), 3.0 * 2f64.powi(k).powf(0.5))).collect();
        let f = SlopeFit::log_log(&pts);
        assert!((f.slope.unwrap() - 0.5).abs() < 1e-12);
        assert!(f.stderr.unwrap() < 1e-12);
        assert!(SlopeFit::log_log(&pts[..1]).slope.is_none());
    }
}
