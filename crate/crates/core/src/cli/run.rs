use serde::Serialize;

use crate::evolution::{
    angle_distance, berry_phase_loop, closed_form_berry_41, closed_form_berry_42,
    dynamical_phase, eigen_trajectory, geometric_phase, loop_mismatch, tdse_integrate,
    TimeGrid, TrajectoryOptions, CLOSED_PATH_TOL,
};
use crate::linalg::{c64, eig_biorthogonal, C64};
use crate::model::{
    build_scenario_41, build_scenario_42, discriminant, static_energies, DysonSystem,
    ParameterPath, ScenarioSolution,
};
use crate::operators::{
    c_hat_evolution_residual, dyson_residual, metric_ode_residual, OperatorFrame, Tolerances,
    VerificationReport,
};

use super::config::{applicable, ConfigKind, Functions, ScenarioConfig, CHECKS};
use super::CliError;

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: f64,
    /// Ẽ₊, Ẽ₋ (static energies for a static scenario).
    pub energies: [C64; 2],
    pub delta: f64,
    pub gamma: [f64; 2],
    pub alpha: [f64; 2],
    /// Residual per check column at this time, if the check is local in t.
    pub residuals: Vec<Option<f64>>,
}

/// Closed-loop phases, when the path is closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopSummary {
    pub gamma: Vec<f64>,
    pub closed_form: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub kind: ConfigKind,
    pub grid: TimeGrid,
    pub checks: Vec<String>,
    pub rows: Vec<Row>,
    pub report: VerificationReport,
    pub loop_phase: Option<LoopSummary>,
}

/// Executes every configured check over the grid.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput, CliError> {
    match &config.functions {
        Functions::Static(f) => run_static(config, f),
        Functions::Dyson41(f) => {
            let sol = build_scenario_41(f.clone(), config.constants, &config.grid)?;
            run_dyson(config, &sol)
        }
        Functions::Dyson42(f) => {
            let sol = build_scenario_42(f.clone(), config.constants, &config.grid)?;
            run_dyson(config, &sol)
        }
    }
}

/// Path properties that decide whether some checks are meaningful.
#[derive(Clone, Copy)]
struct PathFacts {
    closed: bool,
    static_parity: bool,
}

fn selected(config: &ScenarioConfig, facts: PathFacts) -> Result<Vec<String>, CliError> {
    let usable = |c: &str| match c {
        "berry_closed_form" => facts.closed,
        "c_hat_evolution" => facts.static_parity,
        _ => true,
    };
    match &config.checks {
        Some(list) => {
            for c in list {
                if !usable(c) {
                    return Err(CliError::Usage(format!(
                        "check `{c}` needs {}",
                        if c == "berry_closed_form" {
                            "a closed parameter loop"
                        } else {
                            "a time-independent parity operator (constant μ_r/α_r)"
                        }
                    )));
                }
            }
            Ok(list.clone())
        }
        None => Ok(CHECKS
            .iter()
            .filter(|c| applicable(config.kind, c) && usable(c))
            .map(|c| c.to_string())
            .collect()),
    }
}

/// True when P(t) of the frozen Hamiltonian does not change over the grid.
fn parity_is_static(sol: &ScenarioSolution, grid: &TimeGrid) -> Result<bool, CliError> {
    let p0 = match sol.static_parity(grid.t0) {
        Some(p) => p?,
        None => return Ok(false),
    };
    for t in grid.times() {
        let p = sol.static_parity(t).expect("parity exists at t0")?;
        if (&p - &p0).max_abs() > 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn tolerance(tol: &Tolerances, name: &str) -> f64 {
    tol.get(name).expect("every check has a tolerance")
}

struct Recorder<'a> {
    checks: &'a [String],
    tol: &'a Tolerances,
    report: VerificationReport,
}

impl<'a> Recorder<'a> {
    fn new(checks: &'a [String], tol: &'a Tolerances) -> Self {
        let mut report = VerificationReport::new();
        // fix the report order up front
        for c in checks {
            report.record(c, 0.0, tolerance(tol, c), None);
        }
        Recorder { checks, tol, report }
    }

    fn wants(&self, name: &str) -> bool {
        self.checks.iter().any(|c| c == name)
    }

    fn record(&mut self, row: &mut [Option<f64>], name: &str, residual: f64, t: Option<f64>) {
        if let Some(i) = self.checks.iter().position(|c| c == name) {
            self.report.record(name, residual, tolerance(self.tol, name), t);
            row[i] = Some(residual);
        }
    }
}

fn run_dyson(config: &ScenarioConfig, sol: &ScenarioSolution) -> Result<RunOutput, CliError> {
    let grid = &config.grid;
    let closed = loop_mismatch(sol, grid)? <= CLOSED_PATH_TOL;
    let facts = PathFacts {
        closed,
        static_parity: parity_is_static(sol, grid)?,
    };
    let checks = selected(config, facts)?;
    let tol = &config.tolerances;
    let mut rec = Recorder::new(&checks, tol);

    let traj = eigen_trajectory(
        |t| sol.energy_operator(t),
        |t| sol.metric(t),
        grid,
        TrajectoryOptions::default(),
    )?;
    let alpha = dynamical_phase(&traj).ok();
    let geo = geometric_phase(&traj, sol)?;

    let norm_drift = if rec.wants("norm_conservation") {
        let psi0 = &traj.right[0][config.initial_level];
        let states = tdse_integrate(|t| sol.hamiltonian(t), |t| sol.metric(t), psi0, grid)?;
        let n0 = states.rho_norms[0];
        Some(
            states
                .rho_norms
                .iter()
                .map(|n| (n - n0).abs() / (1.0 + n0.abs()))
                .collect::<Vec<_>>(),
        )
    } else {
        None
    };

    let mut rows = Vec::with_capacity(grid.len());
    for (k, &t) in traj.times.iter().enumerate() {
        let mut res = vec![None; checks.len()];
        let frame = OperatorFrame::build(sol, t, config.signatures.as_deref())?;
        for (name, r) in frame.algebraic_residuals(tol)? {
            rec.record(&mut res, name, r, Some(t));
        }
        if rec.wants("metric_ode") {
            let r = metric_ode_residual(&frame.hamiltonian, |s| sol.metric(s), t)?;
            rec.record(&mut res, "metric_ode", r, Some(t));
        }
        if rec.wants("dyson_equation") {
            let h = sol.hermitian_closed_form(t)?;
            let r = dyson_residual(sol, &h, t)? / (1.0 + h.max_abs());
            rec.record(&mut res, "dyson_equation", r, Some(t));
        }
        if rec.wants("c_hat_evolution") {
            let parity = |s: f64| sol.static_parity(s).expect("dyson41 has a static parity");
            let r = c_hat_evolution_residual(parity, |s| sol.metric(s), &frame.hamiltonian, t)?;
            rec.record(&mut res, "c_hat_evolution", r, Some(t));
        }
        let imag = geo.rates.iter().map(|r| r[k].im.abs()).fold(0.0, f64::max);
        rec.record(&mut res, "berry_imag", imag, Some(t));
        if let Some(d) = &norm_drift {
            rec.record(&mut res, "norm_conservation", d[k], Some(t));
        }
        let delta = if sol.path.static_pt {
            discriminant(&sol.path, t, tol.exceptional)?.0
        } else {
            f64::NAN
        };
        rows.push(Row {
            t,
            energies: [traj.energies[k][0], traj.energies[k][1]],
            delta,
            gamma: [geo.cumulative[0][k], geo.cumulative[1][k]],
            alpha: match &alpha {
                Some(a) => [a[0][k], a[1][k]],
                None => [f64::NAN; 2],
            },
            residuals: res,
        });
    }

    let loop_phase = if closed {
        let lp = berry_phase_loop(&traj, sol, grid)?;
        let closed_form = match config.kind {
            ConfigKind::Dyson41 => closed_form_berry_41(sol, grid)?,
            _ => closed_form_berry_42(sol, grid)?,
        };
        let worst = lp
            .gamma
            .iter()
            .map(|g| angle_distance(*g, closed_form))
            .fold(0.0, f64::max);
        let last = rows.last_mut().expect("grid has points");
        rec.record(&mut last.residuals, "berry_closed_form", worst, Some(grid.t1));
        Some(LoopSummary {
            gamma: lp.gamma,
            closed_form,
        })
    } else {
        None
    };

    Ok(RunOutput {
        kind: config.kind,
        grid: *grid,
        checks: checks.clone(),
        rows,
        report: rec.report,
        loop_phase,
    })
}

fn static_path(config: &ScenarioConfig, f: &super::config::StaticFunctions) -> ParameterPath {
    ParameterPath {
        omega: config.constants.omega,
        alpha_r: f.alpha_r.clone().into(),
        alpha_i: f.alpha_i.clone().into(),
        mu_r: f.mu_r.clone().into(),
        mu_i: f.mu_i.clone().into(),
        tau_r: f.tau_r.clone().into(),
        tau_i: f.tau_i.clone().into(),
        static_pt: true,
    }
}

fn run_static(
    config: &ScenarioConfig,
    f: &super::config::StaticFunctions,
) -> Result<RunOutput, CliError> {
    let grid = &config.grid;
    let path = static_path(config, f);
    let checks = selected(
        config,
        PathFacts {
            closed: false,
            static_parity: false,
        },
    )?;
    let tol = &config.tolerances;
    let mut rec = Recorder::new(&checks, tol);
    let times = grid.times();
    let mut energies = Vec::with_capacity(times.len());
    for &t in &times {
        let (p, m) = static_energies(&path, t)?;
        energies.push([p, m]);
    }
    let real = energies
        .iter()
        .flatten()
        .all(|e| e.im.abs() <= crate::evolution::COMPLEX_ENERGY_TOL);
    let mut alpha = vec![[0.0; 2]];
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        let prev = alpha[k - 1];
        let step = |n: usize| prev[n] - 0.5 * dt * (energies[k - 1][n].re + energies[k][n].re);
        alpha.push([step(0), step(1)]);
    }
    let mut rows = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let mut res = vec![None; checks.len()];
        let imag = energies[k].iter().map(|e| e.im.abs()).fold(0.0, f64::max);
        rec.record(&mut res, "reality", imag, Some(t));
        if rec.wants("biorthonormality") {
            let es = eig_biorthogonal(&crate::model::hamiltonian(&path, t)?)?;
            rec.record(&mut res, "biorthonormality", es.biorthonormality_residual(), Some(t));
        }
        rows.push(Row {
            t,
            energies: energies[k],
            delta: discriminant(&path, t, tol.exceptional)?.0,
            gamma: [f64::NAN; 2],
            alpha: if real { alpha[k] } else { [f64::NAN; 2] },
            residuals: res,
        });
    }
    Ok(RunOutput {
        kind: config.kind,
        grid: *grid,
        checks: checks.clone(),
        rows,
        report: rec.report,
        loop_phase: None,
    })
}

/// One cell of a regime map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeCell {
    pub x: f64,
    pub y: f64,
    pub delta: f64,
    pub regime: crate::model::Regime,
}

/// Δ of the static model over the configured parameter grid.
pub fn regime_map(config: &ScenarioConfig) -> Result<Vec<RegimeCell>, CliError> {
    let r = config
        .regimes
        .as_ref()
        .ok_or_else(|| CliError::Usage("the config has no [regimes] section".into()))?;
    let eps = config.tolerances.exceptional;
    let mut cells = Vec::with_capacity(r.x.points * r.y.points);
    for &y in &r.y.values() {
        for &x in &r.x.values() {
            let get = |name: &str| {
                if name == r.x.name {
                    x
                } else if name == r.y.name {
                    y
                } else {
                    r.fixed.get(name).copied().unwrap_or(0.0)
                }
            };
            let (ar, mr, mi, ti) = (get("alpha_r"), get("mu_r"), get("mu_i"), get("tau_i"));
            // α_i follows from α_rα_i = −μ_rμ_i; only Δ is needed here
            let c = crate::model::Couplings {
                omega: config.constants.omega,
                alpha: c64(ar, 0.0),
                mu: c64(mr, mi),
                tau: c64(0.0, ti),
            };
            let delta = crate::model::discriminant_of(&c);
            cells.push(RegimeCell {
                x,
                y,
                delta,
                regime: crate::model::classify(delta, eps),
            });
        }
    }
    Ok(cells)
}

/// Δ(t) and regime along the configured path.
pub fn regime_path(config: &ScenarioConfig) -> Result<Vec<(f64, f64, crate::model::Regime)>, CliError> {
    let eps = config.tolerances.exceptional;
    let path = match &config.functions {
        Functions::Static(f) => static_path(config, f),
        Functions::Dyson41(f) => build_scenario_41(f.clone(), config.constants, &config.grid)?.path,
        Functions::Dyson42(_) => {
            return Err(CliError::Usage(
                "dyson42 couplings violate the static constraints; add a [regimes] section".into(),
            ))
        }
    };
    config
        .grid
        .times()
        .into_iter()
        .map(|t| {
            let (d, r) = discriminant(&path, t, eps)?;
            Ok((t, d, r))
        })
        .collect()
}
