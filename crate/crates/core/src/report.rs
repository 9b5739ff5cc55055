//! Run artifacts: the JSON report, the samples CSV and plot-data files.

use serde::{Deserialize, Serialize};

use crate::bifurcation::{BoundaryCrossing, GridFinding, PathFinding};
use crate::error::{Error, Result};
use crate::index::IndexReport;
use crate::model::config::ConfigDoc;

pub const REPORT_SCHEMA: &str = "dichotomy-report";
pub const REPORT_VERSION: u32 = 1;

/// Outcome of one named check of the `verify` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckResult {
    pub name: String,
    pub group: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub version: u32,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathFinding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridFinding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<BoundaryCrossing>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckResult>>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            schema: REPORT_SCHEMA.to_string(),
            version: REPORT_VERSION,
            command: command.into(),
            config: None,
            index: None,
            path: None,
            grid: None,
            boundary: None,
            checks: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialise");
        s.push('\n');
        s
    }
}

pub fn parse_report(text: &str) -> Result<Report> {
    let r: Report = serde_json::from_str(text).map_err(|e| Error::Format {
        what: "report",
        message: e.to_string(),
    })?;
    if r.schema != REPORT_SCHEMA {
        return Err(Error::Format {
            what: "report",
            message: format!("unknown schema `{}`", r.schema),
        });
    }
    if r.version != REPORT_VERSION {
        return Err(Error::Format {
            what: "report",
            message: format!("unsupported version {}", r.version),
        });
    }
    Ok(r)
}

/// One row of the samples table.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub coords: Vec<f64>,
    pub ld: f64,
    pub sign: i8,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    /// Coordinate column names (`lambda`, `lambda_theta`, or `lambda_x, lambda_y`).
    pub coordinates: Vec<String>,
    pub rows: Vec<SampleRow>,
}

const COORDINATE_HEADERS: &[&[&str]] = &[&["lambda"], &["lambda_theta"], &["lambda_x", "lambda_y"]];

fn samples_err(message: impl Into<String>) -> Error {
    Error::Format {
        what: "samples",
        message: message.into(),
    }
}

pub fn write_samples(table: &SampleTable) -> Result<String> {
    if !COORDINATE_HEADERS.iter().any(|h| {
        h.iter()
            .copied()
            .eq(table.coordinates.iter().map(String::as_str))
    }) {
        return Err(samples_err(format!(
            "unknown coordinate columns {:?}",
            table.coordinates
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = table.coordinates.iter().map(String::as_str).collect();
    header.extend(["LD", "sign", "margin"]);
    w.write_record(&header)
        .map_err(|e| samples_err(e.to_string()))?;
    for row in &table.rows {
        if row.coords.len() != table.coordinates.len() {
            return Err(samples_err("row width does not match the header"));
        }
        let mut rec: Vec<String> = row.coords.iter().map(|x| x.to_string()).collect();
        rec.push(row.ld.to_string());
        rec.push(row.sign.to_string());
        rec.push(row.margin.to_string());
        w.write_record(&rec)
            .map_err(|e| samples_err(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| samples_err(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| samples_err(e.to_string()))
}

pub fn parse_samples(text: &str) -> Result<SampleTable> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| samples_err(e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 4 || names[names.len() - 3..] != ["LD", "sign", "margin"] {
        return Err(samples_err("header must end with LD,sign,margin"));
    }
    let coords = &names[..names.len() - 3];
    if !COORDINATE_HEADERS.contains(&coords) {
        return Err(samples_err(format!(
            "unknown coordinate columns {coords:?}"
        )));
    }
    let k = coords.len();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| samples_err(e.to_string()))?;
        if rec.len() != k + 3 {
            return Err(samples_err(format!(
                "row {} has {} fields, expected {}",
                i + 1,
                rec.len(),
                k + 3
            )));
        }
        let num = |j: usize| -> Result<f64> {
            let v: f64 = rec[j].trim().parse().map_err(|_| {
                samples_err(format!("row {}: `{}` is not a number", i + 1, &rec[j]))
            })?;
            if !v.is_finite() {
                return Err(samples_err(format!("row {}: non-finite value", i + 1)));
            }
            Ok(v)
        };
        let sign: i8 = rec[k + 1]
            .trim()
            .parse()
            .ok()
            .filter(|s: &i8| (-1..=1).contains(s))
            .ok_or_else(|| samples_err(format!("row {}: sign must be -1, 0 or 1", i + 1)))?;
        rows.push(SampleRow {
            coords: (0..k).map(num).collect::<Result<_>>()?,
            ld: num(k)?,
            sign,
            margin: num(k + 2)?,
        });
    }
    Ok(SampleTable {
        coordinates: coords.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

/// A named x-y curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn plot_err(message: impl Into<String>) -> Error {
    Error::Format {
        what: "plot data",
        message: message.into(),
    }
}

/// `# name` followed by one `x y` line per point.
pub fn write_plot_data(series: &PlotSeries) -> Result<String> {
    if series.name.contains(['\n', '\r']) {
        return Err(plot_err("series name must be a single line"));
    }
    let mut s = format!("# {}\n", series.name);
    for &(x, y) in &series.points {
        if !(x.is_finite() && y.is_finite()) {
            return Err(plot_err("points must be finite"));
        }
        s.push_str(&format!("{x} {y}\n"));
    }
    Ok(s)
}

pub fn parse_plot_data(text: &str) -> Result<PlotSeries> {
    let mut name = None;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if name.is_none() {
                name = Some(rest.trim().to_string());
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let mut next = || -> Result<f64> {
            let tok = it
                .next()
                .ok_or_else(|| plot_err(format!("line {}: expected two columns", i + 1)))?;
            let v: f64 = tok
                .parse()
                .map_err(|_| plot_err(format!("line {}: `{tok}` is not a number", i + 1)))?;
            if !v.is_finite() {
                return Err(plot_err(format!("line {}: non-finite value", i + 1)));
            }
            Ok(v)
        };
        let x = next()?;
        let y = next()?;
        if it.next().is_some() {
            return Err(plot_err(format!("line {}: expected two columns", i + 1)));
        }
        points.push((x, y));
    }
    Ok(PlotSeries {
        name: name.unwrap_or_default(),
        points,
    })
}
