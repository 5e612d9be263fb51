//! The single record printed per invocation.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

/// Worst residual of one property over the cases that exercised it.
#[derive(Clone, Debug, Serialize)]
pub struct Residual {
    pub property: String,
    pub cases: usize,
    /// Cases whose value exceeded the tolerance.
    pub failures: usize,
    pub worst: f64,
    pub tol: f64,
    pub pass: bool,
    /// Inputs of the first failing case, in the crate's file formats.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reproducer: Option<Value>,
}

impl Residual {
    pub fn new(property: &str, tol: f64) -> Self {
        Residual { property: property.into(), cases: 0, failures: 0, worst: 0.0, tol, pass: true, reproducer: None }
    }

    /// Records one case. `repro` runs only for the first failure.
    pub fn record(&mut self, value: f64, repro: impl FnOnce() -> Value) {
        self.cases += 1;
        if value > self.worst || value.is_nan() {
            self.worst = value;
        }
        if !(value <= self.tol) {
            self.failures += 1;
            if self.pass {
                self.pass = false;
                self.reproducer = Some(repro());
            }
        }
    }

    /// Records a yes/no property as residual 0 or 1 with tolerance 0.
    pub fn check(&mut self, ok: bool, repro: impl FnOnce() -> Value) {
        self.record(if ok { 0.0 } else { 1.0 }, repro);
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub results: Vec<Value>,
    pub residuals: Vec<Residual>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        Report {
            command: command.into(),
            inputs: BTreeMap::new(),
            seed,
            results: Vec::new(),
            residuals: Vec::new(),
            status: Status::Pass,
            error: None,
            wall_time_s: None,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) {
        self.inputs.insert(key.into(), value.into());
    }

    pub fn finish(&mut self) {
        if self.status != Status::Error && self.residuals.iter().any(|r| !r.pass) {
            self.status = Status::Fail;
        }
    }

    pub fn fail_with(&mut self, e: impl std::fmt::Display) {
        self.status = Status::Error;
        self.error = Some(e.to_string());
    }

    pub fn exit_code(&self) -> u8 {
        match self.status {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }
}
