use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::evolution::TimeGrid;
use crate::exprpath::{parse, Expr};
use crate::model::{Free41, Free42, ScenarioConstants};
use crate::operators::Tolerances;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfigKind {
    Static,
    Dyson41,
    Dyson42,
}

impl fmt::Display for ConfigKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConfigKind::Static => "static",
            ConfigKind::Dyson41 => "dyson41",
            ConfigKind::Dyson42 => "dyson42",
        })
    }
}

/// Expressions of a static path; absent components are zero.
#[derive(Debug, Clone)]
pub struct StaticFunctions {
    pub alpha_r: Expr,
    pub alpha_i: Expr,
    pub mu_r: Expr,
    pub mu_i: Expr,
    pub tau_r: Expr,
    pub tau_i: Expr,
}

#[derive(Debug, Clone)]
pub enum Functions {
    Static(StaticFunctions),
    Dyson41(Free41),
    Dyson42(Free42),
}

/// One axis of a regime map.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| if k + 1 == self.points { self.max } else { self.min + k as f64 * step })
            .collect()
    }
}

/// Two-parameter sweep of the static discriminant. Parameters not on an
/// axis take their value from `fixed` (default 0).
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeGrid {
    pub x: Axis,
    pub y: Axis,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
}

pub const REGIME_PARAMETERS: [&str; 4] = ["alpha_r", "mu_r", "mu_i", "tau_i"];

/// A validated scenario configuration.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub kind: ConfigKind,
    pub functions: Functions,
    pub constants: ScenarioConstants,
    pub grid: TimeGrid,
    pub signatures: Option<Vec<i8>>,
    pub tolerances: Tolerances,
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
    /// Checks requested explicitly; `None` runs every applicable check.
    pub checks: Option<Vec<String>>,
    /// Level whose eigenstate seeds the TDSE run.
    pub initial_level: usize,
    pub regimes: Option<RegimeGrid>,
}

/// Every check the runner knows, in report order.
pub const CHECKS: [&str; 18] = [
    "c_tilde_involution",
    "c_tilde_commutator",
    "rho_inverse_p_tilde",
    "ptrel_i",
    "ptrel_ii",
    "ptrel_alpha_imag",
    "ptrel_iii",
    "reality",
    "rho_orthonormality",
    "biorthonormality",
    "quasi_hermiticity",
    "metric_ode",
    "dyson_equation",
    "c_hat_involution",
    "c_hat_evolution",
    "berry_imag",
    "berry_closed_form",
    "norm_conservation",
];

/// Checks that make sense for a scenario kind.
pub fn applicable(kind: ConfigKind, check: &str) -> bool {
    match kind {
        ConfigKind::Static => matches!(check, "reality" | "biorthonormality"),
        ConfigKind::Dyson41 => CHECKS.contains(&check),
        ConfigKind::Dyson42 => CHECKS.contains(&check) && !check.starts_with("c_hat"),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: ConfigKind,
    #[serde(default)]
    signatures: Option<Vec<i8>>,
    #[serde(default)]
    checks: Option<Vec<Spanned<String>>>,
    functions: BTreeMap<Spanned<String>, Spanned<String>>,
    #[serde(default)]
    constants: RawConstants,
    grid: RawGrid,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    evolution: RawEvolution,
    #[serde(default)]
    regimes: Option<RegimeGrid>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    #[serde(default)]
    omega: f64,
    c1: Option<f64>,
    c2: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default)]
    t0: f64,
    t1: f64,
    steps: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    csv: Option<PathBuf>,
    report: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvolution {
    #[serde(default)]
    initial_level: usize,
}

struct Source<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Source<'_> {
    fn line(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    fn error(&self, offset: Option<usize>, message: impl Into<String>) -> CliError {
        CliError::Config {
            path: self.path.to_path_buf(),
            line: offset.map(|o| self.line(o)),
            message: message.into(),
        }
    }
}

/// Reads and validates a scenario file. Relative output paths are resolved
/// against the directory of the file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config(&text, path)
}

/// As [`load_config`] for text already in memory; `path` is used for error
/// messages and to resolve output paths.
pub fn parse_config(text: &str, path: &Path) -> Result<ScenarioConfig, CliError> {
    let src = Source { path, text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        src.error(e.span().map(|s| s.start), e.message().to_string())
    })?;

    let grid = TimeGrid::new(raw.grid.t0, raw.grid.t1, raw.grid.steps)
        .map_err(|e| src.error(None, format!("grid: {e}")))?;

    let required: &[&str] = match raw.scenario {
        ConfigKind::Static => &[],
        ConfigKind::Dyson41 => &["alpha_r", "mu_r", "tau_i"],
        ConfigKind::Dyson42 => &["alpha_r", "mu_i", "tau_i"],
    };
    let allowed: &[&str] = match raw.scenario {
        ConfigKind::Static => &["alpha_r", "alpha_i", "mu_r", "mu_i", "tau_r", "tau_i"],
        _ => required,
    };
    let mut exprs: BTreeMap<String, (Expr, usize)> = BTreeMap::new();
    for (key, value) in &raw.functions {
        let name = key.get_ref().as_str();
        if !allowed.contains(&name) {
            return Err(src.error(
                Some(key.span().start),
                format!("functions.{name} is not a free function of a {} scenario", raw.scenario),
            ));
        }
        let expr = parse(value.get_ref())
            .map_err(|e| src.error(Some(value.span().start), format!("functions.{name}: {e}")))?;
        exprs.insert(name.to_string(), (expr, value.span().start));
    }
    for name in required {
        if !exprs.contains_key(*name) {
            return Err(src.error(None, format!("missing functions.{name}")));
        }
    }
    let take = |name: &str| exprs.get(name).map_or(Expr::Const(0.0), |(e, _)| e.clone());
    let offset = |name: &str| exprs.get(name).map(|(_, o)| *o);

    let omega = raw.constants.omega;
    let constants = match raw.scenario {
        ConfigKind::Static => ScenarioConstants::new(0.0, 0.0, omega),
        ConfigKind::Dyson41 => {
            let (c1, c2) = match (raw.constants.c1, raw.constants.c2) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(src.error(None, "dyson41 needs constants.c1 and constants.c2")),
            };
            if c1 * c1 == c2 * c2 {
                return Err(src.error(None, "constants: c1^2 = c2^2 makes the metric singular"));
            }
            ScenarioConstants::new(c1, c2, omega)
        }
        ConfigKind::Dyson42 => {
            let c1 = raw
                .constants
                .c1
                .ok_or_else(|| src.error(None, "dyson42 needs constants.c1"))?;
            if raw.constants.c2.is_some() {
                return Err(src.error(None, "constants.c2 is not used by dyson42"));
            }
            if c1 == 0.0 {
                return Err(src.error(None, "constants: c1 = 0 makes the Dyson map singular"));
            }
            ScenarioConstants::new(c1, 0.0, omega)
        }
    };
    if ![constants.c1, constants.c2, omega].iter().all(|x| x.is_finite()) {
        return Err(src.error(None, "constants must be finite"));
    }

    // every expression must evaluate on the grid
    for (name, (expr, at)) in &exprs {
        for t in grid.times() {
            let v = expr
                .eval(t)
                .map_err(|e| src.error(Some(*at), format!("functions.{name} at t = {t}: {e}")))?;
            if raw.scenario == ConfigKind::Dyson42 && (name == "mu_i" || name == "alpha_r") && v == 0.0 {
                return Err(src.error(
                    Some(*at),
                    format!("functions.{name} vanishes at t = {t}; it divides A(t)"),
                ));
            }
        }
    }

    let functions = match raw.scenario {
        ConfigKind::Static => {
            let f = StaticFunctions {
                alpha_r: take("alpha_r"),
                alpha_i: take("alpha_i"),
                mu_r: take("mu_r"),
                mu_i: take("mu_i"),
                tau_r: take("tau_r"),
                tau_i: take("tau_i"),
            };
            for t in grid.times() {
                let v = |e: &Expr| e.eval(t).unwrap_or(f64::NAN);
                let residual = (v(&f.alpha_r) * v(&f.alpha_i) + v(&f.mu_r) * v(&f.mu_i)).abs()
                    + v(&f.tau_r).abs();
                if !(residual <= crate::model::STATIC_PT_TOL) {
                    return Err(src.error(
                        offset("alpha_i").or(offset("tau_r")),
                        format!("static PT constraints violated at t = {t} (residual {residual:.3e})"),
                    ));
                }
                if v(&f.alpha_r) == 0.0 {
                    return Err(src.error(offset("alpha_r"), format!("functions.alpha_r vanishes at t = {t}")));
                }
            }
            Functions::Static(f)
        }
        ConfigKind::Dyson41 => Functions::Dyson41(Free41 {
            alpha_r: take("alpha_r"),
            mu_r: take("mu_r"),
            tau_i: take("tau_i"),
        }),
        ConfigKind::Dyson42 => Functions::Dyson42(Free42 {
            alpha_r: take("alpha_r"),
            mu_i: take("mu_i"),
            tau_i: take("tau_i"),
        }),
    };

    if let Some(s) = &raw.signatures {
        if s.len() != 2 || s.iter().any(|x| x.abs() != 1) {
            return Err(src.error(None, "signatures must be two entries of +1 or -1"));
        }
    }

    let mut tolerances = Tolerances::default();
    for (name, value) in &raw.tolerances {
        if !(value.is_finite() && *value >= 0.0) {
            return Err(src.error(None, format!("tolerances.{name} must be a finite non-negative number")));
        }
        tolerances
            .set(name, *value)
            .map_err(|e| src.error(None, format!("tolerances: {e}")))?;
    }

    let checks = match raw.checks {
        None => None,
        Some(list) => {
            let mut out: Vec<String> = Vec::new();
            for c in list {
                let name = c.get_ref();
                if !CHECKS.contains(&name.as_str()) {
                    return Err(src.error(Some(c.span().start), format!("unknown check `{name}`")));
                }
                if !applicable(raw.scenario, name) {
                    return Err(src.error(
                        Some(c.span().start),
                        format!("check `{name}` does not apply to a {} scenario", raw.scenario),
                    ));
                }
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Some(out)
        }
    };

    if raw.evolution.initial_level > 1 {
        return Err(src.error(None, "evolution.initial_level must be 0 or 1"));
    }

    if let Some(r) = &raw.regimes {
        for axis in [&r.x, &r.y] {
            if !REGIME_PARAMETERS.contains(&axis.name.as_str()) {
                return Err(src.error(
                    None,
                    format!("regimes axis `{}` must be one of {}", axis.name, REGIME_PARAMETERS.join(", ")),
                ));
            }
            if axis.points == 0 || !(axis.min.is_finite() && axis.max.is_finite()) {
                return Err(src.error(None, format!("regimes axis `{}` is empty or not finite", axis.name)));
            }
        }
        if r.x.name == r.y.name {
            return Err(src.error(None, "regimes axes must differ"));
        }
        for name in r.fixed.keys() {
            if !REGIME_PARAMETERS.contains(&name.as_str()) {
                return Err(src.error(None, format!("regimes.fixed.{name} is not a regime parameter")));
            }
        }
    }

    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });

    Ok(ScenarioConfig {
        kind: raw.scenario,
        functions,
        constants,
        grid,
        signatures: raw.signatures,
        tolerances,
        csv: resolve(raw.output.csv),
        report: resolve(raw.output.report),
        checks,
        initial_level: raw.evolution.initial_level,
        regimes: raw.regimes,
    })
}
