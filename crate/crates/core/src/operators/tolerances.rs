use serde::{Deserialize, Serialize};

/// Every numerical acceptance threshold, by check name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub c_tilde_involution: f64,
    pub c_tilde_commutator: f64,
    pub rho_inverse_p_tilde: f64,
    pub ptrel_intertwining: f64,
    pub ptrel_eigenvector: f64,
    pub ptrel_alpha_imag: f64,
    pub ptrel_hermitian: f64,
    /// max |Im Ẽ|
    pub reality: f64,
    pub rho_orthonormality: f64,
    pub biorthonormality: f64,
    pub quasi_hermiticity: f64,
    pub metric_ode: f64,
    pub dyson_equation: f64,
    pub c_hat_involution: f64,
    pub c_hat_evolution: f64,
    /// max |Im γ̇|
    pub berry_imag: f64,
    /// |closed form − quadrature| for the loop phase.
    pub berry_closed_form: f64,
    /// Relative drift of ⟨ψ|ρ|ψ⟩ along the TDSE trajectory.
    pub norm_conservation: f64,
    /// |Δ| at or below this is reported as exceptional.
    pub exceptional: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            c_tilde_involution: 1e-9,
            c_tilde_commutator: 1e-9,
            rho_inverse_p_tilde: 1e-9,
            ptrel_intertwining: 1e-9,
            ptrel_eigenvector: 1e-9,
            ptrel_alpha_imag: 1e-9,
            ptrel_hermitian: 1e-9,
            reality: 1e-10,
            rho_orthonormality: 1e-9,
            biorthonormality: 1e-10,
            quasi_hermiticity: 1e-7,
            metric_ode: 1e-7,
            dyson_equation: 1e-8,
            c_hat_involution: 1e-9,
            c_hat_evolution: 1e-6,
            berry_imag: 1e-7,
            berry_closed_form: 1e-6,
            norm_conservation: 1e-8,
            exceptional: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown tolerance `{0}`")]
pub struct UnknownTolerance(pub String);

impl Tolerances {
    fn slots(&mut self) -> [(&'static str, &mut f64); 19] {
        [
            ("c_tilde_involution", &mut self.c_tilde_involution),
            ("c_tilde_commutator", &mut self.c_tilde_commutator),
            ("rho_inverse_p_tilde", &mut self.rho_inverse_p_tilde),
            ("ptrel_i", &mut self.ptrel_intertwining),
            ("ptrel_ii", &mut self.ptrel_eigenvector),
            ("ptrel_alpha_imag", &mut self.ptrel_alpha_imag),
            ("ptrel_iii", &mut self.ptrel_hermitian),
            ("reality", &mut self.reality),
            ("rho_orthonormality", &mut self.rho_orthonormality),
            ("biorthonormality", &mut self.biorthonormality),
            ("quasi_hermiticity", &mut self.quasi_hermiticity),
            ("metric_ode", &mut self.metric_ode),
            ("dyson_equation", &mut self.dyson_equation),
            ("c_hat_involution", &mut self.c_hat_involution),
            ("c_hat_evolution", &mut self.c_hat_evolution),
            ("berry_imag", &mut self.berry_imag),
            ("berry_closed_form", &mut self.berry_closed_form),
            ("norm_conservation", &mut self.norm_conservation),
            ("exceptional", &mut self.exceptional),
        ]
    }

    /// Check names accepted by [`Tolerances::get`] and [`Tolerances::set`].
    pub fn names() -> Vec<&'static str> {
        Tolerances::default().slots().into_iter().map(|(n, _)| n).collect()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let mut copy = *self;
        let found = copy.slots().into_iter().find(|(n, _)| *n == name).map(|(_, v)| *v);
        found
    }

    /// Accepts either the check name or the field name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), UnknownTolerance> {
        let alias = match name {
            "ptrel_intertwining" => "ptrel_i",
            "ptrel_eigenvector" => "ptrel_ii",
            "ptrel_hermitian" => "ptrel_iii",
            other => other,
        };
        match self.slots().into_iter().find(|(n, _)| *n == alias) {
            Some((_, slot)) => {
                *slot = value;
                Ok(())
            }
            None => Err(UnknownTolerance(name.to_string())),
        }
    }
}
