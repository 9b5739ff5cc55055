use std::fs;
use std::path::{Path, PathBuf};

use dichotomy::bifurcation::GridFinding;
use dichotomy::index::IndexReport;
use dichotomy::model::{Param, ParameterSpace};
use dichotomy::report::{
    write_plot_data, write_samples, PlotSeries, Report, SampleRow, SampleTable,
};

use crate::Failure;

pub const REPORT_FILE: &str = "report.json";
pub const SAMPLES_FILE: &str = "samples.csv";

/// Everything a run writes, rendered in memory first.
pub struct Artifacts {
    pub report: Report,
    pub samples: Option<SampleTable>,
    /// `(file name, series)`.
    pub plots: Vec<(String, PlotSeries)>,
}

impl Artifacts {
    pub fn report_only(report: Report) -> Self {
        Artifacts {
            report,
            samples: None,
            plots: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(dir.to_path_buf(), e))?;
        let mut files = vec![(REPORT_FILE.to_string(), self.report.to_json())];
        if let Some(table) = &self.samples {
            files.push((SAMPLES_FILE.to_string(), write_samples(table)?));
        }
        for (name, series) in &self.plots {
            files.push((name.clone(), write_plot_data(series)?));
        }
        let mut written = Vec::new();
        for (name, text) in files {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Failure::Io(path.clone(), e))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn sample_table(space: &ParameterSpace, index: &IndexReport) -> SampleTable {
    SampleTable {
        coordinates: space
            .coordinate_names()
            .into_iter()
            .map(String::from)
            .collect(),
        rows: index
            .samples
            .iter()
            .map(|s| SampleRow {
                coords: s.coords.clone(),
                ld: s.ld,
                sign: s.sign,
                margin: s.margin,
            })
            .collect(),
    }
}

/// `L_D` against the scalar coordinate, plus the reference-normalised curve
/// when every node has one.
pub fn ld_curves(index: &IndexReport) -> Vec<(String, PlotSeries)> {
    let mut out = vec![(
        "ld.dat".to_string(),
        PlotSeries {
            name: "LD".into(),
            points: index.samples.iter().map(|s| (s.coords[0], s.ld)).collect(),
        },
    )];
    let reference: Option<Vec<(f64, f64)>> = index
        .samples
        .iter()
        .map(|s| Some((s.coords[0], s.reference_ld?)))
        .collect();
    if let Some(points) = reference {
        out.push((
            "ld_reference.dat".to_string(),
            PlotSeries {
                name: "LD reference normalisation".into(),
                points,
            },
        ));
    }
    out
}

/// Node positions split by the sign of `L_D`.
pub fn sign_map(space: &ParameterSpace, grid: &GridFinding) -> Vec<(String, PlotSeries)> {
    [(1i8, "positive"), (-1, "negative"), (0, "zero")]
        .into_iter()
        .map(|(sign, label)| {
            let points = (0..space.len())
                .filter(|&i| grid.signs[i] == sign)
                .filter_map(|i| match space.node(i) {
                    Param::Point(x, y) => Some((x, y)),
                    _ => None,
                })
                .collect();
            (
                format!("sign_{label}.dat"),
                PlotSeries {
                    name: format!("LD {label}"),
                    points,
                },
            )
        })
        .collect()
}
