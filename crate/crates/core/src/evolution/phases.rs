use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64, I};
use crate::model::{DysonSystem, ScenarioSolution};

use super::{eigen_trajectory, EigenTrajectory, StateTrajectory, TimeGrid, TrajectoryOptions};

/// Largest |Im Ẽ| accepted by [`dynamical_phase`].
pub const COMPLEX_ENERGY_TOL: f64 = 1e-8;
/// Largest endpoint mismatch of the loop parameters.
pub const CLOSED_PATH_TOL: f64 = 1e-10;

fn cumulative_trapezoid(times: &[f64], f: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    out.push(0.0);
    let mut prev = f(0);
    for k in 1..times.len() {
        let cur = f(k);
        acc += 0.5 * (times[k] - times[k - 1]) * (prev + cur);
        out.push(acc);
        prev = cur;
    }
    out
}

/// αₙ(t) = −∫₀ᵗ Ẽₙ, as `phases[n][k]`.
pub fn dynamical_phase(traj: &EigenTrajectory) -> Result<Vec<Vec<f64>>> {
    for (k, es) in traj.energies.iter().enumerate() {
        for e in es {
            if e.im.abs() > COMPLEX_ENERGY_TOL {
                return Err(Error::ComplexEnergy {
                    t: traj.times[k],
                    im: e.im,
                });
            }
        }
    }
    Ok((0..traj.levels())
        .map(|n| cumulative_trapezoid(&traj.times, |k| -traj.energies[k][n].re))
        .collect())
}

/// γ̇ = i⟨ψ|ρ(∂ₜ + η⁻¹η̇)|ψ⟩
pub fn berry_rate(
    psi: &CVector,
    rho: &CMatrix,
    eta: &CMatrix,
    eta_dot: &CMatrix,
    psi_dot: &CVector,
) -> Result<C64> {
    let generator = eta.inverse()?.try_mul(eta_dot)?;
    let v = psi_dot + &generator.mul_vec(psi);
    Ok(I * psi.dot(&rho.mul_vec(&v)))
}

/// Geometric phase accumulated along a trajectory in its own gauge.
#[derive(Debug, Clone, Serialize)]
pub struct GeometricPhase {
    /// `rates[n][k]` = γ̇ₙ(t_k)
    #[serde(skip)]
    pub rates: Vec<Vec<C64>>,
    /// `cumulative[n][k]` = ∫₀^{t_k} Re γ̇ₙ
    pub cumulative: Vec<Vec<f64>>,
    pub max_imag_rate: f64,
}

/// Berry rates along an eigen-trajectory of H̃ for a Dyson system.
pub fn geometric_phase(
    traj: &EigenTrajectory,
    system: &(impl DysonSystem + ?Sized),
) -> Result<GeometricPhase> {
    if traj.right_dot.is_empty() {
        return Err(Error::InvalidGrid("trajectory was built without derivatives".into()));
    }
    let levels = traj.levels();
    let mut rates = vec![Vec::with_capacity(traj.times.len()); levels];
    for (k, &t) in traj.times.iter().enumerate() {
        let eta = system.dyson_map(t)?;
        let eta_dot = system.dyson_map_rate(t)?;
        let rho = &eta.adjoint() * &eta;
        for (n, r) in rates.iter_mut().enumerate() {
            r.push(berry_rate(&traj.right[k][n], &rho, &eta, &eta_dot, &traj.right_dot[k][n])?);
        }
    }
    Ok(from_rates(&traj.times, rates))
}

fn from_rates(times: &[f64], rates: Vec<Vec<C64>>) -> GeometricPhase {
    let max_imag_rate = rates
        .iter()
        .flatten()
        .map(|z| z.im.abs())
        .fold(0.0, f64::max);
    let cumulative = rates
        .iter()
        .map(|r| cumulative_trapezoid(times, |k| r[k].re))
        .collect();
    GeometricPhase {
        rates,
        cumulative,
        max_imag_rate,
    }
}

/// Closed-loop geometric phase per level.
#[derive(Debug, Clone, Serialize)]
pub struct LoopPhase {
    /// γₙ reduced to (−π, π].
    pub gamma: Vec<f64>,
    /// ∫₀ᵀ Re γ̇ₙ in the trajectory gauge.
    pub integral: Vec<f64>,
    /// arg⟨χₙ(0)|χₙ(T)⟩, the holonomy of the trajectory gauge.
    pub closure: Vec<f64>,
    pub max_imag_rate: f64,
}

/// Reduces an angle to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Signed distance between two angles modulo 2π.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Largest endpoint difference of the system's loop parameters over the grid.
pub fn loop_mismatch(system: &(impl DysonSystem + ?Sized), grid: &TimeGrid) -> Result<f64> {
    let a = system.loop_parameters(grid.t0)?;
    let b = system.loop_parameters(grid.t1)?;
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

fn check_closed(system: &(impl DysonSystem + ?Sized), grid: &TimeGrid) -> Result<()> {
    let mismatch = loop_mismatch(system, grid)?;
    if mismatch > CLOSED_PATH_TOL {
        return Err(Error::OpenPath { mismatch });
    }
    Ok(())
}

fn loop_from(
    traj: &EigenTrajectory,
    geo: &GeometricPhase,
    overlap: impl Fn(&CVector, &CVector) -> C64,
) -> LoopPhase {
    let last = traj.times.len() - 1;
    let mut gamma = Vec::new();
    let mut integral = Vec::new();
    let mut closure = Vec::new();
    for n in 0..traj.levels() {
        let i = geo.cumulative[n][last];
        let c = overlap(&traj.right[0][n], &traj.right[last][n]).arg();
        gamma.push(wrap_angle(i + c));
        integral.push(i);
        closure.push(c);
    }
    LoopPhase {
        gamma,
        integral,
        closure,
        max_imag_rate: geo.max_imag_rate,
    }
}

/// γₙ = ∮ i⟨ψ̃ₙ|ρ(∂ₜ + η⁻¹η̇)|ψ̃ₙ⟩ over a closed loop of the system's
/// parameters, evaluated as the trapezoidal integral in the continuous gauge
/// plus the holonomy arg⟨ηψ̃ₙ(0)|ηψ̃ₙ(T)⟩.
pub fn berry_phase_loop(
    traj: &EigenTrajectory,
    system: &(impl DysonSystem + ?Sized),
    grid: &TimeGrid,
) -> Result<LoopPhase> {
    check_closed(system, grid)?;
    let geo = geometric_phase(traj, system)?;
    let eta0 = system.dyson_map(grid.t0)?;
    let eta1 = system.dyson_map(grid.t1)?;
    Ok(loop_from(traj, &geo, |a, b| {
        eta0.mul_vec(a).dot(&eta1.mul_vec(b))
    }))
}

/// The same loop phase computed from the instantaneous eigenvectors of the
/// Hermitian h(t) with γ̇ = i⟨χ|∂ₜχ⟩. Levels are in descending energy order
/// at t₀.
pub fn hermitian_berry_phase_loop(
    system: &(impl DysonSystem + ?Sized),
    grid: &TimeGrid,
) -> Result<LoopPhase> {
    check_closed(system, grid)?;
    let n = system.hamiltonian(grid.t0)?.dim();
    let traj = eigen_trajectory(
        |t| system.hermitian_hamiltonian(t),
        |_| Ok(CMatrix::identity(n)),
        grid,
        TrajectoryOptions::default(),
    )?;
    let rates = (0..traj.levels())
        .map(|l| {
            (0..traj.times.len())
                .map(|k| I * traj.right[k][l].dot(&traj.right_dot[k][l]))
                .collect()
        })
        .collect();
    let geo = from_rates(&traj.times, rates);
    Ok(loop_from(&traj, &geo, |a, b| a.dot(b)))
}

/// Change of the continuous angle atan2(y, x) along the grid, unwrapping
/// jumps larger than π between samples.
pub fn unwrapped_angle_change(
    y: impl Fn(f64) -> Result<f64>,
    x: impl Fn(f64) -> Result<f64>,
    grid: &TimeGrid,
) -> Result<f64> {
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for t in grid.times() {
        let (yv, xv) = (y(t)?, x(t)?);
        if yv == 0.0 && xv == 0.0 {
            return Err(Error::UndefinedAngle { t });
        }
        let a = yv.atan2(xv);
        if let Some(p) = prev {
            total += wrap_angle(a - p);
        }
        prev = Some(a);
    }
    Ok(total)
}

fn require(sol: &ScenarioSolution, kind: crate::model::ScenarioKind) -> Result<()> {
    if sol.kind != kind {
        return Err(Error::InvalidConstants(format!(
            "closed form applies to {kind}, got {}",
            sol.kind
        )));
    }
    Ok(())
}

/// ½ [arg(α_r + iμ_r)]₀ᵀ, unwrapped along the grid.
pub fn closed_form_berry_41(sol: &ScenarioSolution, grid: &TimeGrid) -> Result<f64> {
    require(sol, crate::model::ScenarioKind::Dyson41)?;
    let change = unwrapped_angle_change(
        |t| Ok(sol.free_values(t)?[1]),
        |t| Ok(sol.free_values(t)?[0]),
        grid,
    )?;
    Ok(0.5 * change)
}

/// −½ [arg(α_r + 2iA)]₀ᵀ, unwrapped along the grid.
pub fn closed_form_berry_42(sol: &ScenarioSolution, grid: &TimeGrid) -> Result<f64> {
    require(sol, crate::model::ScenarioKind::Dyson42)?;
    let change = unwrapped_angle_change(
        |t| Ok(2.0 * sol.a_function(t).expect("dyson42")?),
        |t| Ok(sol.free_values(t)?[0]),
        grid,
    )?;
    Ok(-0.5 * change)
}

/// Adiabatic coefficients cₙ(t) = ⟨φ̃ₙ(t)|ψ(t)⟩e^{−i(γₙ(t)+αₙ(t))}.
#[derive(Debug, Clone, Serialize)]
pub struct AdiabaticDecomposition {
    /// `coefficients[n][k]`
    #[serde(skip)]
    pub coefficients: Vec<Vec<C64>>,
    #[serde(skip)]
    pub initial: Vec<C64>,
    /// maxₙ maxₜ |cₙ(t) − cₙ(0)|
    pub deviation: f64,
}

impl AdiabaticDecomposition {
    pub fn is_adiabatic(&self, tol: f64) -> bool {
        self.deviation <= tol
    }

    /// Σₙ|cₙ(t_k)|²
    pub fn weight(&self, k: usize) -> f64 {
        self.coefficients.iter().map(|c| c[k].norm_sqr()).sum()
    }
}

pub fn adiabatic_decompose(
    states: &StateTrajectory,
    traj: &EigenTrajectory,
    dynamical: &[Vec<f64>],
    geometric: &GeometricPhase,
) -> Result<AdiabaticDecomposition> {
    if states.times.len() != traj.times.len() {
        return Err(Error::InvalidGrid("state and eigen trajectories differ in length".into()));
    }
    let coefficients: Vec<Vec<C64>> = (0..traj.levels())
        .map(|n| {
            (0..traj.times.len())
                .map(|k| {
                    let phase = geometric.cumulative[n][k] + dynamical[n][k];
                    traj.left[k][n].dot(&states.states[k]) * C64::from_polar(1.0, -phase)
                })
                .collect()
        })
        .collect();
    let initial: Vec<C64> = coefficients.iter().map(|c| c[0]).collect();
    let deviation = coefficients
        .iter()
        .zip(&initial)
        .flat_map(|(c, c0)| c.iter().map(move |z| (z - c0).norm()))
        .fold(0.0, f64::max);
    Ok(AdiabaticDecomposition {
        coefficients,
        initial,
        deviation,
    })
}
