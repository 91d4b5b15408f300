//! The two-level spin Hamiltonian
//!
//! ```text
//! H(t) = −½ [ω𝕀 + α(t)σx + μ(t)σy + τ(t)σz],   α, μ, τ ∈ ℂ
//! ```
//!
//! its static PT analysis (discriminant, regimes, parity operator), and the
//! analytic time-dependent Dyson-map scenarios in [`scenario`]. ħ = 1.

pub mod quadrature;
pub mod scenario;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprpath::{Dual, Expr};
use crate::linalg::{c64, CMatrix, C64, I};

pub use scenario::{
    build_scenario_41, build_scenario_42, Free41, Free42, ScenarioConstants, ScenarioKind,
    ScenarioSolution, ValidationSummary,
};

/// Tolerance on the static constraints α_rα_i = −μ_rμ_i, τ_r = 0.
pub const STATIC_PT_TOL: f64 = 1e-10;
/// Default half-width of the exceptional band |Δ| ≤ ε.
pub const DEFAULT_EXCEPTIONAL_EPS: f64 = 1e-12;

type DerivedFn = dyn Fn(f64) -> Result<f64> + Send + Sync;

/// One real coefficient function of time.
#[derive(Clone)]
pub enum Component {
    Expr(Expr),
    /// Computed from other components (filled in by scenario construction).
    Derived(Arc<DerivedFn>),
}

impl fmt::Debug for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Expr(e) => write!(f, "Expr({e})"),
            Component::Derived(_) => f.write_str("Derived(..)"),
        }
    }
}

impl From<Expr> for Component {
    fn from(e: Expr) -> Self {
        Component::Expr(e)
    }
}

impl From<f64> for Component {
    fn from(x: f64) -> Self {
        Component::Expr(Expr::Const(x))
    }
}

impl Component {
    pub fn derived(f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        Component::Derived(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            Component::Expr(e) => Ok(e.eval(t)?),
            Component::Derived(f) => f(t),
        }
    }

    /// Value and derivative; derived components are differentiated by a
    /// central difference.
    pub fn eval_dual(&self, t: f64) -> Result<Dual> {
        match self {
            Component::Expr(e) => Ok(e.eval_dual(t)?),
            Component::Derived(f) => {
                let h = crate::linalg::default_fd_step(t);
                Ok(Dual::new(f(t)?, (f(t + h)? - f(t - h)?) / (2.0 * h)))
            }
        }
    }
}

/// Complex couplings at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Couplings {
    pub omega: f64,
    pub alpha: C64,
    pub mu: C64,
    pub tau: C64,
}

impl Couplings {
    pub fn hamiltonian(&self) -> CMatrix {
        let w = c64(self.omega, 0.0);
        // −½[ω𝕀 + ασx + μσy + τσz]
        let m = CMatrix::from_rows([
            [w + self.tau, self.alpha - I * self.mu],
            [self.alpha + I * self.mu, w - self.tau],
        ]);
        m.scale_real(-0.5)
    }

    /// |α_rα_i + μ_rμ_i| + |τ_r|
    pub fn static_constraint_residual(&self) -> f64 {
        (self.alpha.re * self.alpha.im + self.mu.re * self.mu.im).abs() + self.tau.re.abs()
    }
}

/// Time-dependent coefficient set q(t) = (ω, α(t), μ(t), τ(t)).
#[derive(Debug, Clone)]
pub struct ParameterPath {
    pub omega: f64,
    pub alpha_r: Component,
    pub alpha_i: Component,
    pub mu_r: Component,
    pub mu_i: Component,
    pub tau_r: Component,
    pub tau_i: Component,
    /// Set when the static constraints hold identically in t.
    pub static_pt: bool,
}

impl ParameterPath {
    /// Path with every component zero except ω.
    pub fn zero(omega: f64) -> Self {
        ParameterPath {
            omega,
            alpha_r: 0.0.into(),
            alpha_i: 0.0.into(),
            mu_r: 0.0.into(),
            mu_i: 0.0.into(),
            tau_r: 0.0.into(),
            tau_i: 0.0.into(),
            static_pt: false,
        }
    }

    pub fn couplings(&self, t: f64) -> Result<Couplings> {
        Ok(Couplings {
            omega: self.omega,
            alpha: c64(self.alpha_r.eval(t)?, self.alpha_i.eval(t)?),
            mu: c64(self.mu_r.eval(t)?, self.mu_i.eval(t)?),
            tau: c64(self.tau_r.eval(t)?, self.tau_i.eval(t)?),
        })
    }

    /// Checks the static constraints at each sample time.
    pub fn check_static_pt(&self, times: impl IntoIterator<Item = f64>) -> Result<()> {
        for t in times {
            let residual = self.couplings(t)?.static_constraint_residual();
            if residual > STATIC_PT_TOL {
                return Err(Error::ConstraintViolation { t, residual });
            }
        }
        Ok(())
    }
}

pub fn hamiltonian(path: &ParameterPath, t: f64) -> Result<CMatrix> {
    Ok(path.couplings(t)?.hamiltonian())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Symmetric,
    Exceptional,
    Broken,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Symmetric => "symmetric",
            Regime::Exceptional => "exceptional",
            Regime::Broken => "broken",
        })
    }
}

fn checked_static(c: &Couplings, t: f64) -> Result<()> {
    let residual = c.static_constraint_residual();
    if residual > STATIC_PT_TOL {
        return Err(Error::ConstraintViolation { t, residual });
    }
    if c.alpha.re == 0.0 {
        return Err(Error::ZeroDenominator {
            quantity: "alpha_r",
            t,
        });
    }
    Ok(())
}

/// Δ = (α_r² + μ_r²)(α_r² − μ_i²) − α_r²τ_i² for couplings already known
/// to satisfy the static constraints.
pub fn discriminant_of(c: &Couplings) -> f64 {
    let (ar, mr, mi, ti) = (c.alpha.re, c.mu.re, c.mu.im, c.tau.im);
    (ar * ar + mr * mr) * (ar * ar - mi * mi) - ar * ar * ti * ti
}

pub fn classify(delta: f64, eps: f64) -> Regime {
    if delta.abs() <= eps {
        Regime::Exceptional
    } else if delta > 0.0 {
        Regime::Symmetric
    } else {
        Regime::Broken
    }
}

/// Discriminant and PT regime of the frozen Hamiltonian H(t).
pub fn discriminant(path: &ParameterPath, t: f64, eps: f64) -> Result<(f64, Regime)> {
    let c = path.couplings(t)?;
    checked_static(&c, t)?;
    let delta = discriminant_of(&c);
    Ok((delta, classify(delta, eps)))
}

/// E± = ½[−ω ± √Δ / α_r] of the frozen Hamiltonian.
pub fn static_energies(path: &ParameterPath, t: f64) -> Result<(C64, C64)> {
    let c = path.couplings(t)?;
    checked_static(&c, t)?;
    let root = c64(discriminant_of(&c), 0.0).sqrt() / c.alpha.re;
    Ok((
        (root - c.omega) * 0.5,
        (-root - c.omega) * 0.5,
    ))
}

/// The involutive intertwiner P with P H = H† P of the frozen Hamiltonian.
pub fn static_parity(path: &ParameterPath, t: f64) -> Result<CMatrix> {
    let c = path.couplings(t)?;
    let residual = c.static_constraint_residual();
    if residual > STATIC_PT_TOL {
        return Err(Error::ConstraintViolation { t, residual });
    }
    parity_from(c.alpha.re, c.mu.re, t)
}

pub(crate) fn parity_from(alpha_r: f64, mu_r: f64, t: f64) -> Result<CMatrix> {
    let s = alpha_r.hypot(mu_r);
    if s == 0.0 {
        return Err(Error::ZeroDenominator {
            quantity: "sqrt(alpha_r^2 + mu_r^2)",
            t,
        });
    }
    let z = c64(0.0, 0.0);
    Ok(CMatrix::from_rows([
        [z, c64(alpha_r, -mu_r) / s],
        [c64(alpha_r, mu_r) / s, z],
    ]))
}

/// A non-Hermitian Hamiltonian together with a Dyson map η(t) that maps it to
/// a Hermitian h(t) = ηHη⁻¹ + iη̇η⁻¹.
pub trait DysonSystem: Send + Sync {
    fn hamiltonian(&self, t: f64) -> Result<CMatrix>;
    fn dyson_map(&self, t: f64) -> Result<CMatrix>;
    fn dyson_map_rate(&self, t: f64) -> Result<CMatrix>;

    /// ρ = η†η
    fn metric(&self, t: f64) -> Result<CMatrix> {
        let eta = self.dyson_map(t)?;
        Ok(&eta.adjoint() * &eta)
    }

    /// H̃ = H + iη⁻¹η̇
    fn energy_operator(&self, t: f64) -> Result<CMatrix> {
        crate::operators::energy_operator(
            &self.hamiltonian(t)?,
            &self.dyson_map(t)?,
            &self.dyson_map_rate(t)?,
        )
    }

    /// h = ηHη⁻¹ + iη̇η⁻¹ computed from the definition.
    fn hermitian_hamiltonian(&self, t: f64) -> Result<CMatrix> {
        let eta = self.dyson_map(t)?;
        let inv = eta.inverse()?;
        let h = &(&eta * &self.hamiltonian(t)?) * &inv;
        Ok(&h + &(&self.dyson_map_rate(t)? * &inv).scale(I))
    }

    /// The free parameter values q(t) whose periodicity defines a closed loop.
    fn loop_parameters(&self, t: f64) -> Result<Vec<f64>>;

    /// Static parity operator, when the static constraints hold identically.
    fn static_parity(&self, _t: f64) -> Option<Result<CMatrix>> {
        None
    }
}

/// A path with the trivial Dyson map η = 𝕀; only meaningful for Hermitian
/// paths, but also used to analyse frozen (static) Hamiltonians.
#[derive(Debug, Clone)]
pub struct IdentityMapped(pub ParameterPath);

impl DysonSystem for IdentityMapped {
    fn hamiltonian(&self, t: f64) -> Result<CMatrix> {
        hamiltonian(&self.0, t)
    }

    fn dyson_map(&self, _t: f64) -> Result<CMatrix> {
        Ok(CMatrix::identity(2))
    }

    fn dyson_map_rate(&self, _t: f64) -> Result<CMatrix> {
        Ok(CMatrix::zeros(2))
    }

    fn loop_parameters(&self, t: f64) -> Result<Vec<f64>> {
        let c = self.0.couplings(t)?;
        Ok(vec![c.alpha.re, c.alpha.im, c.mu.re, c.mu.im, c.tau.re, c.tau.im])
    }

    fn static_parity(&self, t: f64) -> Option<Result<CMatrix>> {
        self.0.static_pt.then(|| static_parity(&self.0, t))
    }
}
