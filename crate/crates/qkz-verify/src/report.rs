//! Report records and JSON/text output.

use std::collections::BTreeMap;
use std::io::Write;

use qkz::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Format;
use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// A complex number as `{"re": r, "im": i}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Cplx {
    fn from(c: Complex64) -> Self {
        Cplx { re: c.re, im: c.im }
    }
}

impl From<Cplx> for Complex64 {
    fn from(c: Cplx) -> Self {
        Complex64::new(c.re, c.im)
    }
}

pub fn cj(c: Complex64) -> Value {
    serde_json::json!({ "re": c.re, "im": c.im })
}

pub fn cjs(cs: &[Complex64]) -> Value {
    Value::Array(cs.iter().map(|&c| cj(c)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    /// Which identity or statement the check exercises.
    pub anchor: String,
    pub inputs: Value,
    pub computed: Value,
    pub reference: Value,
    /// `null` when the computation produced a non-finite value.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// Passes when the residual is finite and at most the tolerance.
    pub fn numeric(id: String, anchor: &str, inputs: Value, computed: Value, reference: Value, residual: f64, tolerance: f64) -> Self {
        let finite = residual.is_finite();
        CheckRecord {
            id,
            anchor: anchor.to_string(),
            inputs,
            computed,
            reference,
            residual: finite.then_some(residual),
            tolerance,
            pass: finite && residual <= tolerance,
        }
    }

    /// Exact comparison: residual 0 on equality, 1 otherwise, tolerance 0.
    pub fn exact(id: String, anchor: &str, inputs: Value, computed: Value, reference: Value) -> Self {
        let equal = computed == reference;
        CheckRecord::numeric(id, anchor, inputs, computed, reference, if equal { 0.0 } else { 1.0 }, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
    pub failed_ids: Vec<String>,
}

impl Summary {
    pub fn of(checks: &[CheckRecord]) -> Self {
        let failed_ids: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.id.clone()).collect();
        Summary { total: checks.len(), passed: checks.len() - failed_ids.len(), failed: failed_ids.len(), pass: failed_ids.is_empty(), failed_ids }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub quadrature_rel_tol: f64,
    pub quadrature_abs_tol: f64,
    pub rank_threshold: f64,
    pub library_version: String,
    /// Wall-clock milliseconds per suite. The only nondeterministic field.
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub config_echo: Value,
    pub environment: Environment,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.summary.pass
    }

    /// Records whose id starts with `prefix`.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CheckRecord> + 'a {
        self.checks.iter().filter(move |c| c.id.starts_with(prefix))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let width = self.checks.iter().map(|c| c.id.chars().count()).max().unwrap_or(2).max(2);
        let mut out = format!("{:<6} {:<width$} {:>12} {:>12}  anchor\n", "status", "id", "residual", "tolerance");
        for c in &self.checks {
            let residual = c.residual.map_or_else(|| "non-finite".to_string(), |r| format!("{r:.3e}"));
            out += &format!(
                "{:<6} {:<width$} {:>12} {:>12.3e}  {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.id,
                residual,
                c.tolerance,
                c.anchor
            );
        }
        let s = &self.summary;
        out += &format!("\n{} checks, {} passed, {} failed: {}\n", s.total, s.passed, s.failed, if s.pass { "PASS" } else { "FAIL" });
        out
    }
}

pub fn emit_report(report: &VerificationReport, format: Format, sink: &mut dyn Write) -> Result<()> {
    match format {
        Format::Json => sink.write_all(report.to_json()?.as_bytes())?,
        Format::Text => sink.write_all(report.to_text().as_bytes())?,
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(checks: Vec<CheckRecord>) -> VerificationReport {
        VerificationReport {
            schema_version: SCHEMA_VERSION,
            config_echo: serde_json::json!({ "suites": [] }),
            environment: Environment {
                seed: 42,
                quadrature_rel_tol: 1e-12,
                quadrature_abs_tol: 1e-14,
                rank_threshold: 1e-6,
                library_version: "0".into(),
                timings_ms: BTreeMap::new(),
            },
            summary: Summary::of(&checks),
            checks,
        }
    }

    #[test]
    fn empty_report_passes() {
        let r = report(vec![]);
        assert!(r.passed());
        assert_eq!(r.summary.total, 0);
    }

    #[test]
    fn failing_row_shows_residual_and_tolerance() {
        let bad = CheckRecord::numeric("x/1".into(), "a", Value::Null, cj(Complex64::new(1.0, 2.0)), cj(Complex64::new(1.0, 0.0)), 2.0, 1e-8);
        let r = report(vec![bad]);
        assert!(!r.passed());
        let text = r.to_text();
        let row = text.lines().find(|l| l.starts_with("FAIL")).unwrap();
        assert!(row.contains("2.000e0") && row.contains("1.000e-8"), "{row}");
    }

    #[test]
    fn json_round_trip() {
        let checks = vec![
            CheckRecord::numeric("a".into(), "x", serde_json::json!({ "n": 2 }), cj(Complex64::new(0.1, -3.5e-17)), cj(Complex64::new(0.1, 0.0)), 3.5e-16, 1e-10),
            CheckRecord::numeric("b".into(), "y", Value::Null, Value::Null, Value::Null, f64::NAN, 1e-10),
            CheckRecord::exact("c".into(), "z", Value::Null, Value::String("1/3".into()), Value::String("1/3".into())),
        ];
        let r = report(checks);
        assert!(!r.checks[1].pass && r.checks[1].residual.is_none());
        let text = r.to_json().unwrap();
        let back: VerificationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json().unwrap(), text);
    }
}
