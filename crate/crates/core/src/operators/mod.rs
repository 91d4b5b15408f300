//! Energy operator, metric, the Ĉ, C̃ and P̃ operators, and the residual
//! checks that certify real instantaneous energies.

mod report;
mod tolerances;

pub use report::{CheckRecord, VerificationReport};
pub use tolerances::{Tolerances, UnknownTolerance};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::TimeGrid;
use crate::linalg::{
    c64, commutator, default_fd_step, eig_biorthogonal_with, hermiticity_residual,
    five_point_step, operator_time_derivative, operator_time_derivative_5pt, positivity_check, CMatrix, EigenOptions, EigenOrder, Eigensystem,
    C64, I,
};
use crate::model::DysonSystem;

/// H̃ = H + iη⁻¹η̇
pub fn energy_operator(h: &CMatrix, eta: &CMatrix, eta_dot: &CMatrix) -> Result<CMatrix> {
    let inv = eta.inverse()?;
    Ok(h + &inv.try_mul(eta_dot)?.scale(I))
}

/// Right-hand side ρ̇ = −i(H†ρ − ρH).
fn metric_rate(h: &CMatrix, rho: &CMatrix) -> CMatrix {
    (&(&h.adjoint() * rho) - &(rho * h)).scale(-I)
}

/// ρ(t) integrated on a grid, with a record of positivity.
#[derive(Debug, Clone)]
pub struct MetricTrajectory {
    pub times: Vec<f64>,
    pub rho: Vec<CMatrix>,
    pub positive: bool,
    /// First grid time at which ρ stopped being positive definite.
    pub positivity_lost_at: Option<f64>,
}

/// Integrates iρ̇ = H†ρ − ρH by classical RK4, re-symmetrising after every
/// step. Loss of positivity is flagged, not raised.
pub fn metric_ode_solve(
    hfun: impl Fn(f64) -> Result<CMatrix>,
    rho0: &CMatrix,
    grid: &TimeGrid,
) -> Result<MetricTrajectory> {
    let start = positivity_check(rho0, 1e-12);
    if !start.is_positive {
        return Err(Error::InvalidConstants(
            "initial metric must be Hermitian positive definite".into(),
        ));
    }
    let dt = grid.dt();
    let times = grid.times();
    let mut rho = Vec::with_capacity(times.len());
    let mut current = rho0.hermitian_part();
    rho.push(current.clone());
    let mut lost = None;
    let mut h_start = hfun(times[0])?;
    for k in 0..grid.steps {
        let t = times[k];
        let h_mid = hfun(t + 0.5 * dt)?;
        let h_end = hfun(times[k + 1])?;
        let k1 = metric_rate(&h_start, &current);
        let k2 = metric_rate(&h_mid, &(&current + &k1.scale_real(0.5 * dt)));
        let k3 = metric_rate(&h_mid, &(&current + &k2.scale_real(0.5 * dt)));
        let k4 = metric_rate(&h_end, &(&current + &k3.scale_real(dt)));
        let incr = &(&k1 + &k2.scale_real(2.0)) + &(&k3.scale_real(2.0) + &k4);
        current = (&current + &incr.scale_real(dt / 6.0)).hermitian_part();
        if lost.is_none() && !positivity_check(&current, f64::INFINITY).is_positive {
            lost = Some(times[k + 1]);
        }
        rho.push(current.clone());
        h_start = h_end;
    }
    Ok(MetricTrajectory {
        times,
        rho,
        positive: lost.is_none(),
        positivity_lost_at: lost,
    })
}

/// ρ / det(ρ)^(1/n), so the result has unit determinant.
pub fn normalize_metric(rho: &CMatrix) -> Result<CMatrix> {
    let det = rho.det().re;
    if !(det > 0.0) {
        return Err(Error::Normalization { det });
    }
    Ok(rho.scale_real(det.powf(-1.0 / rho.dim() as f64)))
}

/// Ĉ = Pρ̂ for a unit-determinant metric ρ̂.
pub fn c_hat(parity: &CMatrix, rho_hat: &CMatrix, det_tol: f64) -> Result<CMatrix> {
    let det = rho_hat.det();
    if (det - 1.0).norm() > det_tol {
        return Err(Error::Normalization { det: det.re });
    }
    Ok(parity.try_mul(rho_hat)?)
}

/// (+, −, +, …) for levels ordered by descending Re Ẽ.
pub fn default_signatures(n: usize) -> Vec<i8> {
    (0..n).map(|k| if k % 2 == 0 { 1 } else { -1 }).collect()
}

/// C̃ = Σₙ s̃ₙ|ψ̃ₙ⟩⟨φ̃ₙ|
pub fn c_tilde(es: &Eigensystem, signatures: &[i8]) -> Result<CMatrix> {
    if signatures.len() != es.len() {
        return Err(crate::linalg::LinalgError::DimensionMismatch(es.len(), signatures.len()).into());
    }
    let w: Vec<C64> = signatures.iter().map(|&s| c64(s as f64, 0.0)).collect();
    Ok(es.spectral_sum(&w))
}

/// P̃ = ρC̃ with its (ascending) spectrum; fails when P̃ is not Hermitian
/// within `herm_tol`.
pub fn p_tilde(rho: &CMatrix, c_tilde: &CMatrix, herm_tol: f64) -> Result<(CMatrix, Vec<f64>)> {
    let p = rho.try_mul(c_tilde)?;
    let pos = positivity_check(&p, herm_tol);
    if pos.hermiticity_residual > herm_tol {
        return Err(Error::ResidualExceeded {
            check: "p_tilde_hermitian",
            t: f64::NAN,
            residual: pos.hermiticity_residual,
            tolerance: herm_tol,
        });
    }
    Ok((p, pos.eigenvalues))
}

/// Rescales each level so that ⟨ψₙ|ρ|ψₙ⟩ = 1, keeping ⟨φₙ|ψₙ⟩ = 1.
pub fn rho_normalize(es: &mut Eigensystem, rho: &CMatrix) {
    for n in 0..es.len() {
        let norm = es.right[n].dot(&rho.mul_vec(&es.right[n])).re;
        if norm > 0.0 {
            es.rescale(n, c64(norm.sqrt().recip(), 0.0));
        }
    }
}

/// max |⟨ψₙ|ρ|ψₘ⟩ − δₙₘ|
pub fn rho_orthonormality_residual(es: &Eigensystem, rho: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for (n, a) in es.right.iter().enumerate() {
        let ra = rho.mul_vec(a);
        for (m, b) in es.right.iter().enumerate() {
            let target = if n == m { 1.0 } else { 0.0 };
            worst = worst.max((ra.dot(b) - target).norm());
        }
    }
    worst
}

/// ‖H̃†ρ − ρH̃‖∞
pub fn quasi_hermiticity_residual(energy: &CMatrix, rho: &CMatrix) -> f64 {
    (&(&energy.adjoint() * rho) - &(rho * energy)).max_abs()
}

/// ‖iρ̇ − H†ρ + ρH‖∞ with a five-point ρ̇.
pub fn metric_ode_residual(
    h: &CMatrix,
    rho: impl Fn(f64) -> Result<CMatrix>,
    t: f64,
) -> Result<f64> {
    let rho_dot = operator_time_derivative_5pt(&rho, t, five_point_step(t))?;
    let r = rho(t)?;
    Ok((&rho_dot.scale(I) - &(&(&h.adjoint() * &r) - &(&r * h))).max_abs())
}

/// Outcome of one condition (ii) fit: P̃|ψₙ⟩ ≈ αₙ|φₙ⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelFit {
    pub alpha_re: f64,
    pub alpha_im: f64,
    /// ‖P̃|ψₙ⟩ − Re(αₙ)|φₙ⟩‖∞
    pub residual: f64,
}

/// Residuals of the three intertwining conditions and their consequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PtrelReport {
    /// ‖P̃A − A†P̃‖∞
    pub intertwining: f64,
    pub levels: Vec<LevelFit>,
    /// ‖P̃ − P̃†‖∞
    pub hermiticity: f64,
    /// max |Im Eₙ|
    pub max_imag_energy: f64,
    /// Conditions i–iii all hold, including real αₙ.
    pub reality_guaranteed: bool,
}

impl PtrelReport {
    pub fn max_level_residual(&self) -> f64 {
        self.levels.iter().map(|l| l.residual).fold(0.0, f64::max)
    }

    pub fn max_alpha_imag(&self) -> f64 {
        self.levels.iter().map(|l| l.alpha_im.abs()).fold(0.0, f64::max)
    }
}

/// Evaluates the intertwining conditions for `op` (normally H̃) against `p`,
/// using the ρ-normalised eigensystem of `op`.
pub fn ptrel_conditions(
    p: &CMatrix,
    op: &CMatrix,
    rho: &CMatrix,
    tol: &Tolerances,
) -> Result<PtrelReport> {
    let mut es = eig_biorthogonal_with(
        op,
        EigenOptions {
            order: EigenOrder::DescendingReal,
            ..Default::default()
        },
    )?;
    rho_normalize(&mut es, rho);
    Ok(ptrel_with(p, op, &es, tol))
}

fn ptrel_with(p: &CMatrix, op: &CMatrix, es: &Eigensystem, tol: &Tolerances) -> PtrelReport {
    let intertwining = (&(p * op) - &(&op.adjoint() * p)).max_abs();
    let hermiticity = hermiticity_residual(p);
    let levels: Vec<LevelFit> = es
        .right
        .iter()
        .zip(&es.left)
        .map(|(psi, phi)| {
            let target = p.mul_vec(psi);
            let alpha = phi.dot(&target) / phi.dot(phi).re;
            let residual = (&target - &phi.scale(c64(alpha.re, 0.0))).max_abs();
            LevelFit {
                alpha_re: alpha.re,
                alpha_im: alpha.im,
                residual,
            }
        })
        .collect();
    let max_imag_energy = es.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let mut report = PtrelReport {
        intertwining,
        levels,
        hermiticity,
        max_imag_energy,
        reality_guaranteed: false,
    };
    report.reality_guaranteed = intertwining <= tol.ptrel_intertwining
        && hermiticity <= tol.ptrel_hermitian
        && report.max_level_residual() <= tol.ptrel_eigenvector
        && report.max_alpha_imag() <= tol.ptrel_alpha_imag;
    report
}

/// The operator stack at one instant.
#[derive(Debug, Clone)]
pub struct OperatorFrame {
    pub t: f64,
    pub hamiltonian: CMatrix,
    pub energy: CMatrix,
    pub eta: CMatrix,
    pub eta_dot: CMatrix,
    pub rho: CMatrix,
    /// Pρ̂, present when a static parity operator exists.
    pub c_hat: Option<CMatrix>,
    pub c_tilde: CMatrix,
    pub p_tilde: CMatrix,
    /// Eigensystem of H̃, ordered by descending Re Ẽ and ρ-normalised.
    pub eigen: Eigensystem,
    pub signatures: Vec<i8>,
}

impl OperatorFrame {
    pub fn build(
        system: &(impl DysonSystem + ?Sized),
        t: f64,
        signatures: Option<&[i8]>,
    ) -> Result<Self> {
        let hamiltonian = system.hamiltonian(t)?;
        let eta = system.dyson_map(t)?;
        let eta_dot = system.dyson_map_rate(t)?;
        let rho = &eta.adjoint() * &eta;
        let energy = energy_operator(&hamiltonian, &eta, &eta_dot)?;
        let mut eigen = eig_biorthogonal_with(
            &energy,
            EigenOptions {
                order: EigenOrder::DescendingReal,
                ..Default::default()
            },
        )?;
        rho_normalize(&mut eigen, &rho);
        let signatures = match signatures {
            Some(s) => s.to_vec(),
            None => default_signatures(eigen.len()),
        };
        let c_tilde = c_tilde(&eigen, &signatures)?;
        let p_tilde = &rho * &c_tilde;
        let c_hat = match system.static_parity(t) {
            Some(p) => Some(c_hat(&p?, &normalize_metric(&rho)?, 1e-9)?),
            None => None,
        };
        Ok(OperatorFrame {
            t,
            hamiltonian,
            energy,
            eta,
            eta_dot,
            rho,
            c_hat,
            c_tilde,
            p_tilde,
            eigen,
            signatures,
        })
    }

    pub fn verify_ptrel(&self, tol: &Tolerances) -> PtrelReport {
        ptrel_with(&self.p_tilde, &self.energy, &self.eigen, tol)
    }

    /// The same conditions with H in place of H̃ (a negative control).
    pub fn verify_ptrel_hamiltonian(&self, tol: &Tolerances) -> Result<PtrelReport> {
        ptrel_conditions(&self.p_tilde, &self.hamiltonian, &self.rho, tol)
    }

    /// Ẽₙ in descending order of real part.
    pub fn energies(&self) -> &[C64] {
        &self.eigen.values
    }

    /// Algebraic residuals available from the frame alone, by check name.
    pub fn algebraic_residuals(&self, tol: &Tolerances) -> Result<Vec<(&'static str, f64)>> {
        let n = self.energy.dim();
        let id = CMatrix::identity(n);
        let ptrel = self.verify_ptrel(tol);
        let rho_inv = self.rho.inverse()?;
        let mut out = vec![
            ("c_tilde_involution", (&(&self.c_tilde * &self.c_tilde) - &id).max_abs()),
            ("c_tilde_commutator", commutator(&self.c_tilde, &self.energy)?.max_abs()),
            ("rho_inverse_p_tilde", (&(&rho_inv * &self.p_tilde) - &self.c_tilde).max_abs()),
            ("ptrel_i", ptrel.intertwining),
            ("ptrel_ii", ptrel.max_level_residual()),
            ("ptrel_alpha_imag", ptrel.max_alpha_imag()),
            ("ptrel_iii", ptrel.hermiticity),
            ("reality", ptrel.max_imag_energy),
            ("rho_orthonormality", rho_orthonormality_residual(&self.eigen, &self.rho)),
            ("biorthonormality", self.eigen.biorthonormality_residual()),
            ("quasi_hermiticity", quasi_hermiticity_residual(&self.energy, &self.rho)),
        ];
        if let Some(c) = &self.c_hat {
            out.push(("c_hat_involution", (&(c * c) - &id).max_abs()));
        }
        Ok(out)
    }
}

/// ‖iĊ − [H, Ĉ]‖∞ with Ĉ = Pρ̂ built from a metric function and a
/// central-difference Ċ.
pub fn c_hat_evolution_residual(
    parity: impl Fn(f64) -> Result<CMatrix>,
    rho: impl Fn(f64) -> Result<CMatrix>,
    h: &CMatrix,
    t: f64,
) -> Result<f64> {
    let c = |s: f64| -> Result<CMatrix> { c_hat(&parity(s)?, &normalize_metric(&rho(s)?)?, 1e-9) };
    let c_dot = operator_time_derivative(c, t, default_fd_step(t))?;
    Ok((&c_dot.scale(I) - &commutator(h, &c(t)?)?).max_abs())
}

/// ‖ηHη⁻¹ + iη̇η⁻¹ − h‖∞ for a system with a known Hermitian h(t), using a
/// central-difference η̇.
pub fn dyson_residual(
    system: &(impl DysonSystem + ?Sized),
    h_expected: &CMatrix,
    t: f64,
) -> Result<f64> {
    let eta = system.dyson_map(t)?;
    let inv = eta.inverse()?;
    let eta_dot = operator_time_derivative_5pt(|s| system.dyson_map(s), t, five_point_step(t))?;
    let h = &(&(&eta * &system.hamiltonian(t)?) * &inv) + &(&eta_dot * &inv).scale(I);
    Ok((&h - h_expected).max_abs())
}
