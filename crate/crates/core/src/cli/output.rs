use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::evolution::TimeGrid;
use crate::operators::CheckRecord;

use super::run::{LoopSummary, RegimeCell, RunOutput};
use super::CliError;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(path: &Path, e: impl ToString) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Writes the per-step time series. Check columns hold the residual at
/// that step, or are empty for checks evaluated once per run.
pub fn write_csv(out: &RunOutput, sink: impl Write, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<String> = [
        "t",
        "re_e_plus",
        "im_e_plus",
        "re_e_minus",
        "im_e_minus",
        "delta",
        "gamma_plus",
        "gamma_minus",
        "alpha_plus",
        "alpha_minus",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(out.checks.iter().cloned());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for r in &out.rows {
        let mut rec = vec![
            num(r.t),
            num(r.energies[0].re),
            num(r.energies[0].im),
            num(r.energies[1].re),
            num(r.energies[1].im),
            num(r.delta),
            num(r.gamma[0]),
            num(r.gamma[1]),
            num(r.alpha[0]),
            num(r.alpha[1]),
        ];
        rec.extend(r.residuals.iter().map(|x| x.map(num).unwrap_or_default()));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| csv_error(path, e))
}

pub fn write_regime_csv(
    cells: &[RegimeCell],
    x: &str,
    y: &str,
    sink: impl Write,
    path: &Path,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([x, y, "delta", "regime"]).map_err(|e| csv_error(path, e))?;
    for c in cells {
        w.write_record([num(c.x), num(c.y), num(c.delta), c.regime.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| csv_error(path, e))
}

pub fn write_regime_path_csv(
    rows: &[(f64, f64, crate::model::Regime)],
    sink: impl Write,
    path: &Path,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["t", "delta", "regime"]).map_err(|e| csv_error(path, e))?;
    for (t, d, r) in rows {
        w.write_record([num(*t), num(*d), r.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| csv_error(path, e))
}

/// Plain-text report: a short header, one line per check, then the verdict.
pub fn report_text(out: &RunOutput) -> String {
    let mut s = String::new();
    let g = &out.grid;
    let _ = writeln!(s, "scenario {}", out.kind);
    let _ = writeln!(s, "grid t0 {} t1 {} steps {}", g.t0, g.t1, g.steps);
    if let Some(lp) = &out.loop_phase {
        let gammas: Vec<String> = lp.gamma.iter().map(|x| format!("{x:.12}")).collect();
        let _ = writeln!(s, "loop gamma {} closed_form {:.12}", gammas.join(" "), lp.closed_form);
    }
    let _ = writeln!(s, "{}", out.report);
    s
}

#[derive(Serialize)]
struct JsonReport<'a> {
    scenario: String,
    grid: &'a TimeGrid,
    #[serde(skip_serializing_if = "Option::is_none")]
    loop_phase: Option<&'a LoopSummary>,
    checks: Vec<JsonCheck<'a>>,
    pass: bool,
}

#[derive(Serialize)]
struct JsonCheck<'a> {
    name: &'a str,
    /// NaN residuals are written as null.
    residual: Option<f64>,
    tolerance: f64,
    worst_t: Option<f64>,
    pass: bool,
}

impl<'a> From<&'a CheckRecord> for JsonCheck<'a> {
    fn from(c: &'a CheckRecord) -> Self {
        JsonCheck {
            name: &c.name,
            residual: Some(c.residual).filter(|r| r.is_finite()),
            tolerance: c.tolerance,
            worst_t: c.worst_t,
            pass: c.pass,
        }
    }
}

pub fn report_json(out: &RunOutput) -> String {
    let r = JsonReport {
        scenario: out.kind.to_string(),
        grid: &out.grid,
        loop_phase: out.loop_phase.as_ref(),
        checks: out.report.checks.iter().map(JsonCheck::from).collect(),
        pass: out.report.pass,
    };
    serde_json::to_string_pretty(&r).expect("report serialises") + "\n"
}

/// `report.txt` → `report.json`
pub fn json_path(report: &Path) -> PathBuf {
    report.with_extension("json")
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| csv_error(path, e))
}
