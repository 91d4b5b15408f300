//! Time-dependent non-Hermitian two-level systems: Dyson maps, metric and
//! energy operators, the C̃/P̃ intertwiners, reality checks for instantaneous
//! energies, and real geometric phases from the energy-operator adiabatic
//! expansion.
//!
//! ```
//! use nhphase::evolution::{berry_phase_loop, eigen_trajectory, TimeGrid, TrajectoryOptions};
//! use nhphase::exprpath::parse;
//! use nhphase::model::{build_scenario_41, DysonSystem, Free41, ScenarioConstants};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let grid = TimeGrid::new(0.0, 1.0, 800)?;
//! let s = build_scenario_41(
//!     Free41 {
//!         alpha_r: parse("0.3 + cos(2*pi*t)")?,
//!         mu_r: parse("0.8*sin(2*pi*t)")?,
//!         tau_i: parse("0.6*pi*cos(2*pi*t)")?,
//!     },
//!     ScenarioConstants::new(2.0, 0.5, 0.3),
//!     &grid,
//! )?;
//! let traj = eigen_trajectory(|t| s.energy_operator(t), |t| s.metric(t), &grid,
//!                             TrajectoryOptions::default())?;
//! let phase = berry_phase_loop(&traj, &s, &grid)?;
//! assert!((phase.gamma[0].abs() - std::f64::consts::PI).abs() < 1e-6);
//! # Ok(())
//! # }
//! ```

pub mod exprpath;
pub mod linalg;
pub mod error;
pub mod model;
pub mod operators;
pub mod evolution;
pub mod cli;

pub use error::{Error, Result};
