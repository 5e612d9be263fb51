//! Reading input files and rendering values for the report.

use std::fs;

use serde_json::{json, Value};
use thiserror::Error;

use cat1_boundary::boundary::LogMetric;
use cat1_boundary::disk::{DiskPoint, HalfPlaneMatrix, Moebius};
use cat1_boundary::rational::{self, Rational};
use cat1_boundary::schwarzian::CircleDiffeo;
use cat1_boundary::tree::{Segment, TreePoint, TreeSpace};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    File { path: String, source: cat1_boundary::Error },
    #[error(transparent)]
    Core(#[from] cat1_boundary::Error),
    #[error("{0}")]
    Usage(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn read(path: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn parsed<T>(path: &str, f: impl FnOnce(&str) -> cat1_boundary::Result<T>) -> CliResult<T> {
    let text = read(path)?;
    f(&text).map_err(|source| CliError::File { path: path.into(), source })
}

pub fn tree_file(path: &str) -> CliResult<TreeSpace> {
    parsed(path, TreeSpace::parse)
}

pub fn metric_file(path: &str) -> CliResult<LogMetric> {
    parsed(path, LogMetric::parse)
}

pub fn diffeo_file(path: &str) -> CliResult<CircleDiffeo> {
    parsed(path, CircleDiffeo::parse)
}

pub fn end_index(t: &TreeSpace, label: &str) -> CliResult<usize> {
    t.end_index(label).ok_or_else(|| CliError::Usage(format!("unknown end `{label}`")))
}

pub fn rat(q: &Rational) -> Value {
    Value::from(rational::format(q))
}

pub fn tree_point(t: &TreeSpace, p: &TreePoint) -> Value {
    match p.segment {
        Segment::Edge(e) => {
            let edge = &t.edges()[e];
            json!({"edge": [t.vertices()[edge.u], t.vertices()[edge.v]], "offset": rat(&p.offset)})
        }
        Segment::Ray(k) => json!({"ray": t.rays()[k].end, "offset": rat(&p.offset)}),
    }
}

pub fn disk_point(p: &DiskPoint) -> Value {
    json!([p.z().re, p.z().im])
}

pub fn halfplane_matrix(v: &[f64]) -> CliResult<HalfPlaneMatrix> {
    match v {
        [a, b, c, d] => Ok(HalfPlaneMatrix::new(*a, *b, *c, *d)?),
        _ => usage("--matrix takes four numbers a b c d"),
    }
}

/// Disk form `z ↦ (az + b)/(b̄z + ā)` from `re a, im a, re b, im b`.
pub fn disk_matrix(v: &[f64]) -> CliResult<Moebius> {
    match v {
        [ar, ai, br, bi] => Ok(Moebius::new(
            num_complex::Complex64::new(*ar, *ai),
            num_complex::Complex64::new(*br, *bi),
        )?),
        _ => usage("--disk-matrix takes four numbers re(a) im(a) re(b) im(b)"),
    }
}
