//! Report records and their JSON, CSV and human renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::surfaces::{Chart, ChartPoint};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "lightcone";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skipped => "skipped",
        }
    }
}

/// One verified statement.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// The formula or statement being checked.
    pub anchor: String,
    pub values: BTreeMap<String, Value>,
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
    /// The number compared against the tolerance.
    pub evidence: f64,
    /// Per-point evidence `(sample index, value)` for CSV output.
    #[serde(skip)]
    pub per_point: Vec<(usize, f64)>,
}

impl Check {
    pub fn new(name: &str, anchor: &str) -> Self {
        Check {
            name: name.to_string(),
            anchor: anchor.to_string(),
            values: BTreeMap::new(),
            tolerance: None,
            verdict: Verdict::Skipped,
            evidence: f64::NAN,
            per_point: Vec::new(),
        }
    }

    pub fn value(mut self, key: &str, v: impl Serialize) -> Self {
        self.values.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
        self
    }

    pub fn tol(mut self, t: f64) -> Self {
        self.tolerance = Some(t);
        self
    }

    pub fn evidence(mut self, e: f64) -> Self {
        self.evidence = e;
        self
    }

    pub fn verdict(mut self, v: Verdict) -> Self {
        self.verdict = v;
        self
    }

    pub fn pass_if(self, ok: bool) -> Self {
        self.verdict(Verdict::from_bool(ok))
    }

    pub fn points(mut self, pts: Vec<(usize, f64)>) -> Self {
        self.per_point = pts;
        self
    }

    /// Pass iff `evidence <= tol` (NaN fails).
    pub fn at_most(self, evidence: f64, tol: f64) -> Self {
        self.tol(tol).evidence(evidence).pass_if(evidence <= tol)
    }

    pub fn with_prefix(mut self, prefix: &str) -> Self {
        self.name = format!("{prefix}.{}", self.name);
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub command: String,
    pub config: Value,
    pub checks: Vec<Check>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub data: Value,
    /// Sample points, for CSV rows.
    #[serde(skip)]
    pub points: Vec<ChartPoint>,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Report {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            checks: Vec::new(),
            summary: Summary::default(),
            data: Value::Null,
            points: Vec::new(),
        }
    }

    pub fn finish(mut self) -> Self {
        let mut s = Summary::default();
        for c in &self.checks {
            match c.verdict {
                Verdict::Pass => s.pass += 1,
                Verdict::Fail => s.fail += 1,
                Verdict::Skipped => s.skipped += 1,
            }
        }
        self.summary = s;
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per `(point, check)`; checks without per-point data get a
    /// single row with an empty point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,point,chart,s,t,value,tolerance,verdict\n");
        let tol = |t: Option<f64>| t.map(|t| t.to_string()).unwrap_or_default();
        let chart = |c: Chart| match c {
            Chart::Plane => "plane",
            Chart::Upper => "upper",
            Chart::Lower => "lower",
        };
        for c in &self.checks {
            if c.per_point.is_empty() {
                let _ = writeln!(out, "{},,,,,{},{},{}", c.name, c.evidence, tol(c.tolerance), c.verdict.as_str());
            }
            for &(i, v) in &c.per_point {
                let p = self.points[i];
                let ok = match c.tolerance {
                    Some(t) => Verdict::from_bool(v <= t),
                    None => Verdict::Skipped,
                };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    c.name,
                    i,
                    chart(p.chart),
                    p.s,
                    p.t,
                    v,
                    tol(c.tolerance),
                    ok.as_str()
                );
            }
        }
        out
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.tool, self.version, self.command);
        if let Some(name) = self.config.get("surface").and_then(Value::as_str) {
            let _ = writeln!(out, "surface: {name}");
        }
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let tol = c.tolerance.map(|t| format!(" (tol {t:e})")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{:<7} {:<width$}  {:.3e}{}  {}",
                c.verdict.as_str().to_uppercase(),
                c.name,
                c.evidence,
                tol,
                c.anchor
            );
        }
        let s = self.summary;
        let _ = writeln!(out, "{} passed, {} failed, {} skipped", s.pass, s.fail, s.skipped);
        out
    }
}
