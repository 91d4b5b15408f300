use std::fmt;

use serde::Serialize;

/// One named check: worst residual over the grid against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    /// Grid time of the worst residual.
    pub worst_t: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new() -> Self {
        VerificationReport {
            checks: Vec::new(),
            pass: true,
        }
    }

    /// Folds a residual into the named check, keeping the maximum. A NaN
    /// residual always fails.
    pub fn record(&mut self, name: &str, residual: f64, tolerance: f64, t: Option<f64>) {
        let idx = match self.checks.iter().position(|c| c.name == name) {
            Some(i) => i,
            None => {
                self.checks.push(CheckRecord {
                    name: name.to_string(),
                    residual: 0.0,
                    tolerance,
                    worst_t: t,
                    pass: true,
                });
                self.checks.len() - 1
            }
        };
        let c = &mut self.checks[idx];
        if !c.residual.is_nan() && (residual.is_nan() || residual > c.residual) {
            c.residual = residual;
            c.worst_t = t;
        }
        c.pass = !c.residual.is_nan() && c.residual <= c.tolerance;
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<24} residual {:.6e}  tolerance {:.1e}  {}",
                c.name,
                c.residual,
                c.tolerance,
                if c.pass { "PASS" } else { "FAIL" }
            )?;
        }
        write!(f, "overall {}", if self.pass { "PASS" } else { "FAIL" })
    }
}
