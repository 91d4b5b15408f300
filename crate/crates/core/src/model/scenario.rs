//! Analytic time-dependent Dyson maps for the spin Hamiltonian.
//!
//! `Dyson41`: diagonal η built from δ(t) = ∫₀ᵗ τ_i, with μ_i and α_i fixed
//! by the Dyson equation. `Dyson42`: η = −2c₁𝕀 + k(σz + iσy) with
//! k = c₁μ_i/α_r, where μ_r, α_i and τ_r are fixed by the function A(t).

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::quadrature::Antiderivative;
use super::{Component, DysonSystem, ParameterPath};
use crate::error::{Error, Result};
use crate::evolution::TimeGrid;
use crate::exprpath::{Dual, Expr};
use crate::linalg::{
    c64, five_point_step, hermiticity_residual, operator_time_derivative_5pt, CMatrix, C64, I,
};

/// Absolute tolerance of the δ(t) quadrature cross-check.
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Largest accepted Dyson-equation residual at construction (finite-difference η̇).
pub const DYSON_RESIDUAL_TOL: f64 = 1e-7;
/// Largest accepted anti-Hermitian part of h at construction.
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Dyson41,
    Dyson42,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::Dyson41 => "dyson41",
            ScenarioKind::Dyson42 => "dyson42",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioConstants {
    pub c1: f64,
    pub c2: f64,
    pub omega: f64,
}

impl ScenarioConstants {
    pub fn new(c1: f64, c2: f64, omega: f64) -> Self {
        ScenarioConstants { c1, c2, omega }
    }
}

/// Free functions of the first scenario.
#[derive(Debug, Clone)]
pub struct Free41 {
    pub alpha_r: Expr,
    pub mu_r: Expr,
    pub tau_i: Expr,
}

/// Free functions of the second scenario.
#[derive(Debug, Clone)]
pub struct Free42 {
    pub alpha_r: Expr,
    pub mu_i: Expr,
    pub tau_i: Expr,
}

#[derive(Debug, Clone)]
enum Free {
    S41(Free41),
    S42(Free42),
}

type Integrand = Box<dyn Fn(f64) -> Result<f64> + Send + Sync>;
type DeltaTable = Antiderivative<Integrand>;

/// Worst residuals seen while validating a scenario on its grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub dyson_residual: f64,
    pub hermiticity_residual: f64,
}

/// A completed Dyson-map scenario: the full parameter path and closed-form
/// η(t), η̇(t), ρ(t) and h(t).
#[derive(Clone)]
pub struct ScenarioSolution {
    pub kind: ScenarioKind,
    pub consts: ScenarioConstants,
    pub path: ParameterPath,
    free: Free,
    delta: Option<Arc<DeltaTable>>,
    pub validation: ValidationSummary,
}

impl fmt::Debug for ScenarioSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScenarioSolution")
            .field("kind", &self.kind)
            .field("consts", &self.consts)
            .field("path", &self.path)
            .field("validation", &self.validation)
            .finish()
    }
}

fn delta_at(table: &Option<Arc<DeltaTable>>, t: f64) -> Result<f64> {
    table
        .as_ref()
        .expect("delta table exists for dyson41")
        .value(t)
}

/// −2η₀η_z/(η₀² + η_z²) as a function of δ; μ_i = α_r·q and α_i = −μ_r·q.
fn q41(c1: f64, c2: f64, delta: f64) -> f64 {
    let (sh, ch) = (0.5 * delta).sinh_cosh();
    let eta0 = c1 * ch + c2 * sh;
    let etaz = c1 * sh + c2 * ch;
    -2.0 * eta0 * etaz / (eta0 * eta0 + etaz * etaz)
}

trait SinhCosh {
    fn sinh_cosh(self) -> (f64, f64);
}

impl SinhCosh for f64 {
    fn sinh_cosh(self) -> (f64, f64) {
        (self.sinh(), self.cosh())
    }
}

fn nonzero(x: f64, quantity: &'static str, t: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        Err(Error::ZeroDenominator { quantity, t })
    } else {
        Ok(x)
    }
}

/// A(t) = τ_iα_r²/μ_i² − α̇_r/μ_i + α_rμ̇_i/μ_i²
fn a42(f: &Free42, t: f64) -> Result<f64> {
    let ar = f.alpha_r.eval_dual(t)?;
    let mi = f.mu_i.eval_dual(t)?;
    let ti = f.tau_i.eval(t)?;
    let m = nonzero(mi.value, "mu_i", t)?;
    Ok(ti * ar.value * ar.value / (m * m) - ar.deriv / m + ar.value * mi.deriv / (m * m))
}

/// k = c₁μ_i/α_r as a dual number.
fn k42(f: &Free42, c1: f64, t: f64) -> Result<Dual> {
    let ar = f.alpha_r.eval_dual(t)?;
    let mi = f.mu_i.eval_dual(t)?;
    nonzero(ar.value, "alpha_r", t)?;
    Ok(Dual::constant(c1) * mi / ar)
}

pub fn build_scenario_41(
    free: Free41,
    consts: ScenarioConstants,
    grid: &TimeGrid,
) -> Result<ScenarioSolution> {
    let ScenarioConstants { c1, c2, omega } = consts;
    if !(c1.is_finite() && c2.is_finite() && omega.is_finite()) {
        return Err(Error::InvalidConstants("constants must be finite".into()));
    }
    if c1 * c1 == c2 * c2 {
        return Err(Error::InvalidConstants(
            "c1^2 = c2^2 makes the metric singular".into(),
        ));
    }
    let tau = free.tau_i.clone();
    let integrand: Integrand = Box::new(move |s| Ok(tau.eval(s)?));
    let table = Arc::new(Antiderivative::new(
        integrand,
        grid.t0,
        grid.t1,
        QUADRATURE_TOL,
    )?);

    let mu_i = {
        let (ar, table) = (free.alpha_r.clone(), table.clone());
        Component::derived(move |t| Ok(ar.eval(t)? * q41(c1, c2, table.value(t)?)))
    };
    let alpha_i = {
        let (mr, table) = (free.mu_r.clone(), table.clone());
        Component::derived(move |t| Ok(-mr.eval(t)? * q41(c1, c2, table.value(t)?)))
    };
    let path = ParameterPath {
        omega,
        alpha_r: free.alpha_r.clone().into(),
        alpha_i,
        mu_r: free.mu_r.clone().into(),
        mu_i,
        tau_r: 0.0.into(),
        tau_i: free.tau_i.clone().into(),
        static_pt: true,
    };
    let mut sol = ScenarioSolution {
        kind: ScenarioKind::Dyson41,
        consts,
        path,
        free: Free::S41(free),
        delta: Some(table),
        validation: ValidationSummary {
            dyson_residual: 0.0,
            hermiticity_residual: 0.0,
        },
    };
    sol.validation = sol.validate(grid)?;
    Ok(sol)
}

pub fn build_scenario_42(
    free: Free42,
    consts: ScenarioConstants,
    grid: &TimeGrid,
) -> Result<ScenarioSolution> {
    let ScenarioConstants { c1, omega, .. } = consts;
    if !(c1.is_finite() && omega.is_finite()) {
        return Err(Error::InvalidConstants("constants must be finite".into()));
    }
    if c1 == 0.0 {
        return Err(Error::InvalidConstants("c1 = 0 makes the Dyson map singular".into()));
    }
    for t in grid.times() {
        nonzero(free.mu_i.eval(t)?, "mu_i", t)?;
        nonzero(free.alpha_r.eval(t)?, "alpha_r", t)?;
    }
    let f = Arc::new(free.clone());
    let mu_r = {
        let f = f.clone();
        Component::derived(move |t| Ok(-f.tau_i.eval(t)? - 2.0 * a42(&f, t)?))
    };
    let alpha_i = {
        let f = f.clone();
        Component::derived(move |t| {
            let ar = nonzero(f.alpha_r.eval(t)?, "alpha_r", t)?;
            Ok(2.0 * f.mu_i.eval(t)? / ar * a42(&f, t)?)
        })
    };
    let path = ParameterPath {
        omega,
        alpha_r: free.alpha_r.clone().into(),
        alpha_i,
        mu_r,
        mu_i: free.mu_i.clone().into(),
        tau_r: free.mu_i.clone().into(),
        tau_i: free.tau_i.clone().into(),
        static_pt: false,
    };
    let mut sol = ScenarioSolution {
        kind: ScenarioKind::Dyson42,
        consts: ScenarioConstants { c2: 0.0, ..consts },
        path,
        free: Free::S42(free),
        delta: None,
        validation: ValidationSummary {
            dyson_residual: 0.0,
            hermiticity_residual: 0.0,
        },
    };
    sol.validation = sol.validate(grid)?;
    Ok(sol)
}

impl ScenarioSolution {
    /// δ(t) = ∫₀ᵗ τ_i (first scenario only).
    pub fn delta(&self, t: f64) -> Option<Result<f64>> {
        self.delta.as_ref().map(|d| d.value(t))
    }

    /// A(t) (second scenario only).
    pub fn a_function(&self, t: f64) -> Option<Result<f64>> {
        match &self.free {
            Free::S42(f) => Some(a42(f, t)),
            Free::S41(_) => None,
        }
    }

    /// K(t) in h₁₂ = −K(α_r − iμ_r) (first scenario only).
    pub fn coupling_scale(&self, t: f64) -> Option<Result<f64>> {
        let ScenarioConstants { c1, c2, .. } = self.consts;
        self.delta(t).map(|d| {
            let d = d?;
            Ok((c1 * c1 - c2 * c2)
                / (4.0 * c1 * c2 * d.sinh() + 2.0 * (c1 * c1 + c2 * c2) * d.cosh()))
        })
    }

    /// The free functions at t, in declaration order.
    pub fn free_values(&self, t: f64) -> Result<[f64; 3]> {
        Ok(match &self.free {
            Free::S41(f) => [f.alpha_r.eval(t)?, f.mu_r.eval(t)?, f.tau_i.eval(t)?],
            Free::S42(f) => [f.alpha_r.eval(t)?, f.mu_i.eval(t)?, f.tau_i.eval(t)?],
        })
    }

    /// h(t) from its closed form.
    pub fn hermitian_closed_form(&self, t: f64) -> Result<CMatrix> {
        let w = c64(-0.5 * self.consts.omega, 0.0);
        match &self.free {
            Free::S41(f) => {
                let k = self.coupling_scale(t).expect("dyson41")?;
                let (ar, mr) = (f.alpha_r.eval(t)?, f.mu_r.eval(t)?);
                Ok(CMatrix::from_rows([
                    [w, c64(-k * ar, k * mr)],
                    [c64(-k * ar, -k * mr), w],
                ]))
            }
            Free::S42(f) => {
                let a = a42(f, t)?;
                let ar = f.alpha_r.eval(t)?;
                Ok(CMatrix::from_rows([
                    [w, c64(-0.5 * ar, -a)],
                    [c64(-0.5 * ar, a), w],
                ]))
            }
        }
    }

    /// Largest Dyson-equation residual (with finite-difference η̇) and
    /// anti-Hermitian part of ηHη⁻¹ + iη̇η⁻¹ (with the exact η̇) over the
    /// grid; hard error above tolerance.
    pub fn validate(&self, grid: &TimeGrid) -> Result<ValidationSummary> {
        let mut out = ValidationSummary {
            dyson_residual: 0.0,
            hermiticity_residual: 0.0,
        };
        for t in grid.times() {
            let eta = self.dyson_map(t)?;
            let inv = eta.inverse()?;
            let eta_dot = operator_time_derivative_5pt(|s| self.dyson_map(s), t, five_point_step(t))?;
            let similar = &(&eta * &self.hamiltonian(t)?) * &inv;
            let h = &similar + &(&eta_dot * &inv).scale(I);
            let scale = 1.0 + h.max_abs();
            let dyson = (&h - &self.hermitian_closed_form(t)?).max_abs() / scale;
            let exact = &similar + &(&self.dyson_map_rate(t)? * &inv).scale(I);
            let herm = hermiticity_residual(&exact) / scale;
            if dyson > DYSON_RESIDUAL_TOL {
                return Err(Error::ResidualExceeded {
                    check: "dyson_equation",
                    t,
                    residual: dyson,
                    tolerance: DYSON_RESIDUAL_TOL,
                });
            }
            if herm > HERMITIAN_TOL {
                return Err(Error::ResidualExceeded {
                    check: "hermitian_h",
                    t,
                    residual: herm,
                    tolerance: HERMITIAN_TOL,
                });
            }
            out.dyson_residual = out.dyson_residual.max(dyson);
            out.hermiticity_residual = out.hermiticity_residual.max(herm);
        }
        Ok(out)
    }
}

impl DysonSystem for ScenarioSolution {
    fn hamiltonian(&self, t: f64) -> Result<CMatrix> {
        super::hamiltonian(&self.path, t)
    }

    fn dyson_map(&self, t: f64) -> Result<CMatrix> {
        let ScenarioConstants { c1, c2, .. } = self.consts;
        match &self.free {
            Free::S41(_) => {
                let d = delta_at(&self.delta, t)?;
                Ok(CMatrix::diag(&[
                    c64((c1 + c2) * (0.5 * d).exp(), 0.0),
                    c64((c1 - c2) * (-0.5 * d).exp(), 0.0),
                ]))
            }
            Free::S42(f) => {
                let k = k42(f, c1, t)?.value;
                Ok(CMatrix::from_real_rows([
                    [-2.0 * c1 + k, k],
                    [-k, -2.0 * c1 - k],
                ]))
            }
        }
    }

    fn dyson_map_rate(&self, t: f64) -> Result<CMatrix> {
        match &self.free {
            Free::S41(f) => {
                let half_tau = c64(0.5 * f.tau_i.eval(t)?, 0.0);
                let sz = CMatrix::diag(&[half_tau, -half_tau]);
                Ok(&sz * &self.dyson_map(t)?)
            }
            Free::S42(f) => {
                let kd = k42(f, self.consts.c1, t)?.deriv;
                Ok(CMatrix::from_real_rows([[kd, kd], [-kd, -kd]]))
            }
        }
    }

    fn loop_parameters(&self, t: f64) -> Result<Vec<f64>> {
        let mut v = self.free_values(t)?.to_vec();
        match &self.free {
            Free::S41(_) => v.push(delta_at(&self.delta, t)?),
            Free::S42(f) => {
                v.push(a42(f, t)?);
                v.push(k42(f, self.consts.c1, t)?.deriv);
            }
        }
        Ok(v)
    }

    fn static_parity(&self, t: f64) -> Option<Result<CMatrix>> {
        match &self.free {
            Free::S41(f) => Some((|| {
                let (ar, mr) = (f.alpha_r.eval(t)?, f.mu_r.eval(t)?);
                super::parity_from(ar, mr, t)
            })()),
            Free::S42(_) => None,
        }
    }
}

/// Eigenvalues of a 2×2 Hermitian matrix, ascending.
fn hermitian_eigenvalues(m: &CMatrix) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b: C64 = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - r, mean + r]
}

impl ScenarioSolution {
    /// Eigenvalues of ρ(t), ascending.
    pub fn metric_eigenvalues(&self, t: f64) -> Result<[f64; 2]> {
        Ok(hermitian_eigenvalues(&self.metric(t)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprpath::parse;
    use crate::linalg::{eig_biorthogonal, positivity_check};

    fn grid(t1: f64, steps: usize) -> TimeGrid {
        TimeGrid::new(0.0, t1, steps).unwrap()
    }

    fn s41(ar: &str, mr: &str, ti: &str, c1: f64, c2: f64, omega: f64) -> ScenarioSolution {
        build_scenario_41(
            Free41 {
                alpha_r: parse(ar).unwrap(),
                mu_r: parse(mr).unwrap(),
                tau_i: parse(ti).unwrap(),
            },
            ScenarioConstants::new(c1, c2, omega),
            &grid(2.0, 50),
        )
        .unwrap()
    }

    fn s42(ar: &str, mi: &str, ti: &str, c1: f64, omega: f64) -> ScenarioSolution {
        build_scenario_42(
            Free42 {
                alpha_r: parse(ar).unwrap(),
                mu_i: parse(mi).unwrap(),
                tau_i: parse(ti).unwrap(),
            },
            ScenarioConstants::new(c1, 0.0, omega),
            &grid(2.0, 50),
        )
        .unwrap()
    }

    #[test]
    fn identity_map_when_tau_vanishes() {
        let s = s41("1.5", "0.3", "0", 1.0, 0.0, 0.2);
        for &t in &[0.0, 0.7, 2.0] {
            assert!((&s.dyson_map(t).unwrap() - &CMatrix::identity(2)).max_abs() < 1e-15);
            let c = s.path.couplings(t).unwrap();
            assert_eq!((c.alpha.im, c.mu.im), (0.0, 0.0));
            assert!(hermiticity_residual(&s.hamiltonian(t).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn constant_tau_metric() {
        let (c1, c2) = (2.0, 0.5);
        let s = s41("1", "0", "1", c1, c2, 0.0);
        for &t in &[0.0, 0.4, 1.3] {
            let d = s.delta(t).unwrap().unwrap();
            assert!((d - t).abs() < 1e-13);
            let rho = s.metric(t).unwrap();
            let want = CMatrix::diag(&[
                c64((c1 + c2) * (c1 + c2) * t.exp(), 0.0),
                c64((c1 - c2) * (c1 - c2) * (-t).exp(), 0.0),
            ]);
            assert!((&rho - &want).max_abs() < 1e-12);
            let det = rho.det().re;
            assert!((det - (c1 * c1 - c2 * c2).powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn dyson_residual_at_origin() {
        let s = s41("1", "0", "1", 2.0, 1.0, 0.0);
        assert!(s.validation.dyson_residual <= 1e-8);
        let rho = s.metric(0.0).unwrap();
        let p = positivity_check(&rho, 1e-12);
        assert!(p.is_positive);
        assert!((p.eigenvalues[0] - 1.0).abs() < 1e-12 && (p.eigenvalues[1] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_closed_form_matches_definition_41() {
        let s = s41("1 + 0.3*sin(t)", "0.4*cos(2*t)", "0.8 + 0.5*t", 1.5, -0.4, 0.6);
        for &t in &[0.1, 0.9, 1.7] {
            let h = s.hermitian_hamiltonian(t).unwrap();
            assert!((&h - &s.hermitian_closed_form(t).unwrap()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_of_h_lack_the_root_two() {
        let s = s41("1.2", "0.5", "0.8", 2.0, 1.0, 0.3);
        let t = 0.5;
        let k = s.coupling_scale(t).unwrap().unwrap();
        let r = 1.2f64.hypot(0.5);
        let es = eig_biorthogonal(&s.hermitian_closed_form(t).unwrap()).unwrap();
        assert!((es.values[1].re - (-0.15 + k * r)).abs() < 1e-12);
        assert!((es.values[0].re - (-0.15 - k * r)).abs() < 1e-12);
    }

    #[test]
    fn scenario_42_constants() {
        let s = s42("1", "1", "1", 0.5, 0.0);
        let t = 0.3;
        assert!((s.a_function(t).unwrap().unwrap() - 1.0).abs() < 1e-15);
        let c = s.path.couplings(t).unwrap();
        assert!((c.mu.re + 3.0).abs() < 1e-15);
        assert!((c.alpha.im - 2.0).abs() < 1e-15);
        assert!((c.tau.re - 1.0).abs() < 1e-15);
        let es = eig_biorthogonal(&s.hermitian_closed_form(t).unwrap()).unwrap();
        let r5 = 5f64.sqrt();
        assert!((es.values[1].re - 0.5 * r5).abs() < 1e-12);
        assert!((es.values[0].re + 0.5 * r5).abs() < 1e-12);
        let eta = s.dyson_map(t).unwrap();
        let rho = &eta.adjoint() * &eta;
        let entrywise = s.metric(t).unwrap();
        assert!((rho.det() - entrywise.det()).norm() < 1e-15);
        assert!(s.validation.dyson_residual <= 1e-8);
    }

    #[test]
    fn scenario_42_metric_eigenvalues() {
        let c1 = 0.7;
        let s = s42("1 + 0.2*cos(t)", "0.5 + 0.1*sin(3*t)", "0.3*t", c1, 0.4);
        for &t in &[0.0, 0.5, 1.9] {
            let k = c1 * s.free_values(t).unwrap()[1] / s.free_values(t).unwrap()[0];
            // λ± = 4c₁² + 2k² ± 2|k|√(4c₁² + k²)
            let root = 2.0 * k.abs() * (4.0 * c1 * c1 + k * k).sqrt();
            let base = 4.0 * c1 * c1 + 2.0 * k * k;
            let ev = s.metric_eigenvalues(t).unwrap();
            assert!((ev[0] - (base - root)).abs() < 1e-9);
            assert!((ev[1] - (base + root)).abs() < 1e-9);
        }
    }

    #[test]
    fn time_dependent_42_passes_validation() {
        let s = s42("1 + 0.3*sin(2*t)", "0.6 + 0.2*cos(t)", "0.5*cos(t)", 1.3, 0.1);
        assert!(s.validation.dyson_residual <= 1e-8);
        assert!(s.validation.hermiticity_residual <= 1e-9);
    }

    #[test]
    fn construction_errors() {
        let g = grid(1.0, 10);
        let f = || Free41 {
            alpha_r: parse("1").unwrap(),
            mu_r: parse("0").unwrap(),
            tau_i: parse("1").unwrap(),
        };
        assert!(matches!(
            build_scenario_41(f(), ScenarioConstants::new(1.0, -1.0, 0.0), &g),
            Err(Error::InvalidConstants(_))
        ));
        let f2 = |mi: &str| Free42 {
            alpha_r: parse("1").unwrap(),
            mu_i: parse(mi).unwrap(),
            tau_i: parse("1").unwrap(),
        };
        assert!(matches!(
            build_scenario_42(f2("1"), ScenarioConstants::new(0.0, 0.0, 0.0), &g),
            Err(Error::InvalidConstants(_))
        ));
        assert!(matches!(
            build_scenario_42(f2("0"), ScenarioConstants::new(1.0, 0.0, 0.0), &g),
            Err(Error::ZeroDenominator { quantity: "mu_i", .. })
        ));
    }
}
