//! The JSON report and the CSV trajectory writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pathtrans::convergence::ConvergenceReport;
use pathtrans::path::BundlePath;
use pathtrans::GroupElement;
use serde::Serialize;
use serde_json::Value;

use crate::scenario::Scenario;

/// One residual compared against its tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when the residual is finite and below the tolerance.
    pub fn below(id: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            id: id.into(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual < tolerance,
        }
    }
}

/// A grid-refinement study of one check.
#[derive(Clone, Debug, Serialize)]
pub struct Convergence {
    pub check: String,
    /// Interval counts, finest last.
    pub grids: Vec<usize>,
    pub residuals: Vec<f64>,
    pub slope: Option<f64>,
    pub expected_slope: Option<f64>,
    pub slope_tolerance: f64,
    pub floor_reached: bool,
    pub pass: bool,
}

impl Convergence {
    pub fn new(check: &str, conv: ConvergenceReport, expected: Option<f64>, tol: f64) -> Self {
        let pass = match expected {
            Some(e) => conv.slope_within(e, tol),
            None => conv.floor_reached,
        };
        Self {
            check: check.to_string(),
            grids: conv.grids,
            residuals: conv.residuals,
            slope: conv.slope,
            expected_slope: expected,
            slope_tolerance: tol,
            floor_reached: conv.floor_reached,
            pass,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    /// The run command, suite or convergence check.
    pub target: String,
    pub scenario: Scenario,
    pub checks: Vec<Check>,
    pub convergence: Vec<Convergence>,
    /// Named scalar or matrix results of a run.
    pub values: serde_json::Map<String, Value>,
    /// Trajectory files written next to the report.
    pub outputs: Vec<String>,
    pub pass: bool,
    pub timings: Vec<Timing>,
}

impl Report {
    pub fn new(command: &str, target: &str, scenario: &Scenario) -> Self {
        Self {
            command: command.to_string(),
            target: target.to_string(),
            scenario: scenario.clone(),
            checks: Vec::new(),
            convergence: Vec::new(),
            values: serde_json::Map::new(),
            outputs: Vec::new(),
            pass: true,
            timings: Vec::new(),
        }
    }

    pub fn finish(&mut self) {
        self.pass = self.checks.iter().all(|c| c.pass) && self.convergence.iter().all(|c| c.pass);
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join("report.json");
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }
}

/// Row-major matrix entries of a group element.
pub fn entries(g: &GroupElement) -> Vec<f64> {
    let (r, c) = g.data.shape();
    (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|(i, j)| g.data[(i, j)]).collect()
}

pub fn group_json(g: &GroupElement) -> Value {
    let (r, c) = g.data.shape();
    Value::Array(
        (0..r)
            .map(|i| Value::Array((0..c).map(|j| Value::from(g.data[(i, j)])).collect()))
            .collect(),
    )
}

fn entry_names(prefix: &str, g: &GroupElement) -> Vec<String> {
    let (r, c) = g.data.shape();
    (0..r)
        .flat_map(|i| (0..c).map(move |j| format!("{prefix}_{}{}", i + 1, j + 1)))
        .collect()
}

/// A number with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated writer with a fixed header.
pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[String]) -> std::io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self {
            out,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, values: &[f64]) -> std::io::Result<()> {
        debug_assert_eq!(values.len(), self.columns);
        let line: Vec<String> = values.iter().map(|v| fmt17(*v)).collect();
        writeln!(self.out, "{}", line.join(","))
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Writes bundle paths as rows (s, t, x₁..x_d, g entries row-major).
pub fn write_bundle_paths(path: &Path, s_nodes: &[f64], rows: &[BundlePath]) -> std::io::Result<()> {
    let first = &rows[0];
    let mut header = vec!["s".to_string(), "t".to_string()];
    header.extend((1..=first.initial().x.len()).map(|k| format!("x{k}")));
    header.extend(entry_names("g", &first.initial().g));
    let mut w = CsvWriter::create(path, &header)?;
    for (s, row) in s_nodes.iter().zip(rows) {
        for (t, p) in row.grid.nodes().iter().zip(&row.points) {
            let mut v = vec![*s, *t];
            v.extend_from_slice(&p.x);
            v.extend(entries(&p.g));
            w.row(&v)?;
        }
    }
    w.finish()
}

/// Writes a group-valued curve as rows (s, entries row-major).
pub fn write_group_curve(path: &Path, prefix: &str, s_nodes: &[f64], values: &[GroupElement]) -> std::io::Result<()> {
    let mut header = vec!["s".to_string()];
    header.extend(entry_names(prefix, &values[0]));
    let mut w = CsvWriter::create(path, &header)?;
    for (s, g) in s_nodes.iter().zip(values) {
        let mut v = vec![*s];
        v.extend(entries(g));
        w.row(&v)?;
    }
    w.finish()
}
