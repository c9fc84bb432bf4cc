//! Named check results and their JSON/CSV forms.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    #[serde(rename = "check")]
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: Option<u64>,
    pub params: BTreeMap<String, Value>,
    /// Reported quantity for value-style checks (gaps, ratios, bounds).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default)]
    pub runtime_ms: f64,
}

impl CheckReport {
    /// Passes iff `residual ≤ tolerance`; a NaN residual fails.
    pub fn residual(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
            seed: None,
            params: BTreeMap::new(),
            value: None,
            runtime_ms: 0.0,
        }
    }

    /// A check whose outcome is decided by the caller (inequalities, golden comparisons).
    pub fn verdict(name: impl Into<String>, pass: bool, residual: f64, tolerance: f64) -> Self {
        Self { pass, ..Self::residual(name, residual, tolerance) }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.params.insert(key.to_owned(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    pub fn since(mut self, start: Instant) -> Self {
        self.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }

    /// One summary line, `PASS name residual=… tol=…`.
    pub fn line(&self) -> String {
        format!(
            "{} {} residual={:.3e} tol={:.1e}{}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.residual,
            self.tolerance,
            self.value.map(|v| format!(" value={v:.9}")).unwrap_or_default()
        )
    }
}

pub fn all_pass(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

fn param_str(r: &CheckReport, key: &str) -> String {
    match r.params.get(key) {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(v) => v.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// CSV with columns `system,q,p,check,value,residual,pass`, one row per report.
pub fn write_csv<W: Write>(reports: &[CheckReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "system,q,p,check,value,residual,pass")?;
    for r in reports {
        let value = r.value.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(&param_str(r, "system")),
            csv_field(&param_str(r, "q")),
            csv_field(&param_str(r, "p")),
            csv_field(&r.name),
            value,
            r.residual,
            r.pass
        )?;
    }
    Ok(())
}
