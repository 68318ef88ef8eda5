//! Report structure and rendering: CSV rows for sweeps, JSON for the
//! summary, float formatting pinned to `{:.12e}` so identical runs produce
//! identical bytes.

use std::collections::BTreeMap;

use serde_json::json;

/// One sweep row. `ratio = empirical / predicted` whenever the prediction is
/// nonzero and the row did not error.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub parameter: f64,
    pub operation: &'static str,
    pub params: String,
    pub empirical: f64,
    pub predicted: f64,
    pub ratio: Option<f64>,
    pub uncertainty: f64,
    pub error: Option<String>,
}

impl ReportRow {
    pub fn new(
        parameter: f64,
        operation: &'static str,
        params: String,
        empirical: f64,
        predicted: f64,
        uncertainty: f64,
    ) -> Self {
        let ratio = if predicted != 0.0 && predicted.is_finite() && empirical.is_finite() {
            Some(empirical / predicted)
        } else {
            None
        };
        ReportRow { parameter, operation, params, empirical, predicted, ratio, uncertainty, error: None }
    }

    pub fn failed(parameter: f64, operation: &'static str, params: String, error: String) -> Self {
        ReportRow {
            parameter,
            operation,
            params,
            empirical: f64::NAN,
            predicted: f64::NAN,
            ratio: None,
            uncertainty: f64::NAN,
            error: Some(error),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// A named pass/fail decision with its evidence.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        Verdict { name: name.to_string(), pass, detail }
    }
}

/// A full experiment report: rows in sweep order, fitted exponents, and
/// verdicts against the configured tolerances.
#[derive(Debug, Clone)]
pub struct Report {
    pub kind: String,
    pub form: String,
    pub form_id: String,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    pub fitted_exponents: BTreeMap<String, f64>,
    pub extras: BTreeMap<String, String>,
    pub verdicts: Vec<Verdict>,
}

/// Fixed-width scientific notation; the only float format in artifacts.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.12e}")
}

/// Sweep parameters print as plain integers when they are integers.
fn fmt_parameter(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        fmt_float(v)
    }
}

fn sanitize(field: &str) -> String {
    field.replace([',', '\n'], ";")
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// The sweep table. No timing columns: identical runs are byte-identical.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,operation,params,empirical,predicted,ratio,uncertainty,error\n");
        for row in &self.rows {
            let ratio = row.ratio.map(fmt_float).unwrap_or_default();
            let error = row.error.as_deref().map(sanitize).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt_parameter(row.parameter),
                row.operation,
                sanitize(&row.params),
                fmt_float(row.empirical),
                fmt_float(row.predicted),
                ratio,
                fmt_float(row.uncertainty),
                error,
            ));
        }
        out
    }

    /// The verdict summary, including everything needed to audit the run.
    pub fn summary_json(&self) -> String {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "parameter": r.parameter,
                    "operation": r.operation,
                    "params": r.params,
                    "empirical": fmt_float(r.empirical),
                    "predicted": fmt_float(r.predicted),
                    "ratio": r.ratio.map(fmt_float),
                    "uncertainty": fmt_float(r.uncertainty),
                    "error": r.error,
                })
            })
            .collect();
        let exponents: BTreeMap<&String, String> =
            self.fitted_exponents.iter().map(|(k, v)| (k, fmt_float(*v))).collect();
        let verdicts: Vec<_> = self
            .verdicts
            .iter()
            .map(|v| json!({"name": v.name, "pass": v.pass, "detail": v.detail}))
            .collect();
        let doc = json!({
            "kind": self.kind,
            "form": self.form,
            "form_id": self.form_id,
            "seed": self.seed,
            "rows": rows,
            "fitted_exponents": exponents,
            "extras": self.extras,
            "verdicts": verdicts,
            "passed": self.passed(),
        });
        serde_json::to_string_pretty(&doc).expect("report serialization cannot fail")
    }
}
