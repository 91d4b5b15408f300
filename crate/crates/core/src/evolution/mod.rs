//! Time evolution: TDSE integration, continuous instantaneous eigenstates,
//! dynamical and geometric phases, and the adiabatic expansion.

mod phases;
mod trajectory;

pub use phases::{
    adiabatic_decompose, berry_phase_loop, berry_rate, closed_form_berry_41,
    closed_form_berry_42, dynamical_phase, geometric_phase, hermitian_berry_phase_loop, loop_mismatch,
    unwrapped_angle_change, wrap_angle, angle_distance, AdiabaticDecomposition, GeometricPhase,
    LoopPhase, CLOSED_PATH_TOL, COMPLEX_ENERGY_TOL,
};
pub use trajectory::{eigen_trajectory, EigenTrajectory, TrajectoryOptions};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, I};

/// Uniform grid t₀ < t₁ with `steps` intervals (`steps + 1` points).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t1 <= t0 {
            return Err(Error::InvalidGrid(format!("need finite t0 < t1, got [{t0}, {t1}]")));
        }
        if steps < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 steps, got {steps}")));
        }
        Ok(TimeGrid { t0, t1, steps })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}

/// States ψ(t_k) on a grid.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CVector>,
    /// ⟨ψ(t_k)|ρ(t_k)|ψ(t_k)⟩
    pub rho_norms: Vec<f64>,
}

impl StateTrajectory {
    /// max_k |N(t_k) − N(0)| / (1 + |N(0)|) for the ρ-norm N.
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.rho_norms[0];
        self.rho_norms
            .iter()
            .map(|n| (n - n0).abs() / (1.0 + n0.abs()))
            .fold(0.0, f64::max)
    }
}

/// Drift of the ρ-norm beyond which integration stops.
pub const NORM_DRIFT_GUARD: f64 = 1e-3;

fn rho_norm(rho: &CMatrix, psi: &CVector) -> f64 {
    psi.dot(&rho.mul_vec(psi)).re
}

/// Fixed-step RK4 for i∂ₜψ = H(t)ψ. The ρ-norm ⟨ψ|ρ|ψ⟩ is monitored and a
/// relative drift above [`NORM_DRIFT_GUARD`] is reported as an error.
pub fn tdse_integrate(
    hfun: impl Fn(f64) -> Result<CMatrix>,
    rho: impl Fn(f64) -> Result<CMatrix>,
    psi0: &CVector,
    grid: &TimeGrid,
) -> Result<StateTrajectory> {
    if psi0.norm() == 0.0 {
        return Err(Error::InvalidConstants("initial state must be nonzero".into()));
    }
    let dt = grid.dt();
    let times = grid.times();
    let minus_i = -I;
    let rate = |h: &CMatrix, psi: &CVector| h.mul_vec(psi).scale(minus_i);
    let mut states = Vec::with_capacity(times.len());
    let mut norms = Vec::with_capacity(times.len());
    let mut psi = psi0.clone();
    let n0 = rho_norm(&rho(times[0])?, &psi);
    states.push(psi.clone());
    norms.push(n0);
    let mut h_start = hfun(times[0])?;
    for k in 0..grid.steps {
        let t = times[k];
        let h_mid = hfun(t + 0.5 * dt)?;
        let h_end = hfun(times[k + 1])?;
        let half = crate::linalg::c64(0.5 * dt, 0.0);
        let full = crate::linalg::c64(dt, 0.0);
        let k1 = rate(&h_start, &psi);
        let k2 = rate(&h_mid, &psi.axpy(half, &k1));
        let k3 = rate(&h_mid, &psi.axpy(half, &k2));
        let k4 = rate(&h_end, &psi.axpy(full, &k3));
        let sixth = crate::linalg::c64(dt / 6.0, 0.0);
        let two_sixths = crate::linalg::c64(dt / 3.0, 0.0);
        psi = psi
            .axpy(sixth, &k1)
            .axpy(two_sixths, &k2)
            .axpy(two_sixths, &k3)
            .axpy(sixth, &k4);
        let t_next = times[k + 1];
        let n = rho_norm(&rho(t_next)?, &psi);
        let drift = (n - n0).abs() / (1.0 + n0.abs());
        if !(drift <= NORM_DRIFT_GUARD) {
            return Err(Error::NormDrift { t: t_next, drift });
        }
        states.push(psi.clone());
        norms.push(n);
        h_start = h_end;
    }
    Ok(StateTrajectory {
        times,
        states,
        rho_norms: norms,
    })
}
