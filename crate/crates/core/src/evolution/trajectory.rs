use crate::error::{Error, Result};
use crate::linalg::{
    eig_biorthogonal_with, CMatrix, CVector, EigenOptions, EigenOrder,
    Eigensystem, C64,
};
use crate::operators::rho_normalize;

use super::TimeGrid;

#[derive(Debug, Clone, Copy)]
pub struct TrajectoryOptions {
    /// Smallest accepted |⟨φₙ(t_k)|ψₙ(t_{k+1})⟩|.
    pub overlap_threshold: f64,
    /// Two candidate overlaps closer than this are an ambiguous match.
    pub tie_tolerance: f64,
    /// Also compute ∂ₜψₙ at every grid point.
    pub derivatives: bool,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            overlap_threshold: 0.9,
            tie_tolerance: 1e-6,
            derivatives: true,
        }
    }
}

/// Instantaneous eigenstates followed continuously along a grid.
///
/// Levels start in descending order of Re E at t₀ and are then matched by
/// maximal overlap. Vectors are ρ-normalised and phase-aligned so that each
/// consecutive overlap ⟨φₙ(t_k)|ψₙ(t_{k+1})⟩ is real and positive.
#[derive(Debug, Clone)]
pub struct EigenTrajectory {
    pub times: Vec<f64>,
    /// `energies[k][n]`
    pub energies: Vec<Vec<C64>>,
    pub right: Vec<Vec<CVector>>,
    pub left: Vec<Vec<CVector>>,
    /// ∂ₜψₙ at each grid point (empty when not requested).
    pub right_dot: Vec<Vec<CVector>>,
    /// Smallest consecutive overlap encountered.
    pub min_overlap: f64,
}

impl EigenTrajectory {
    pub fn levels(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    /// Multiplies level n by e^{iθ(t)}; `theta` returns (θ, θ̇).
    pub fn regauge(&mut self, level: usize, theta: impl Fn(f64) -> (f64, f64)) {
        for k in 0..self.times.len() {
            let (th, th_dot) = theta(self.times[k]);
            let phase = C64::from_polar(1.0, th);
            if !self.right_dot.is_empty() {
                let psi = &self.right[k][level];
                let d = self.right_dot[k][level].axpy(C64::new(0.0, th_dot), psi);
                self.right_dot[k][level] = d.scale(phase);
            }
            self.right[k][level] = self.right[k][level].scale(phase);
            self.left[k][level] = self.left[k][level].scale(phase);
        }
    }
}

fn solve(op: &CMatrix, rho: &CMatrix, order: EigenOrder) -> Result<Eigensystem> {
    let mut es = eig_biorthogonal_with(
        op,
        EigenOptions {
            order,
            ..Default::default()
        },
    )?;
    rho_normalize(&mut es, rho);
    Ok(es)
}

/// Reorders `next` to follow `prev_left` level by level, then rephases so
/// that each ⟨aₙ|ψₙ⟩ is real and positive. Returns the smallest matched
/// overlap modulus.
fn follow(
    prev_left: &[CVector],
    align: &[CVector],
    next: &mut Eigensystem,
    t: f64,
    opts: &TrajectoryOptions,
) -> Result<f64> {
    let n = next.len();
    let mut perm = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let mut worst = f64::INFINITY;
    for phi in prev_left {
        let mut scores: Vec<(f64, usize)> = (0..n)
            .filter(|&m| !used[m])
            .map(|m| (phi.dot(&next.right[m]).norm(), m))
            .collect();
        scores.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (best, m) = scores[0];
        if scores.len() > 1 && best - scores[1].0 <= opts.tie_tolerance {
            return Err(Error::LevelCrossing { t });
        }
        if !(best >= opts.overlap_threshold) {
            return Err(Error::GaugeDiscontinuity { t, overlap: best });
        }
        worst = worst.min(best);
        used[m] = true;
        perm.push(m);
    }
    next.permute(&perm);
    for (k, a) in align.iter().enumerate() {
        let o = a.dot(&next.right[k]);
        next.rescale(k, o.conj() / o.norm());
    }
    Ok(worst)
}

/// ½(ρ_prev + ρ_next)ψ_prev, given φ_prev = ρ_prev ψ_prev.
fn midpoint_align(left: &[CVector], right: &[CVector], rho_next: &CMatrix) -> Vec<CVector> {
    left.iter()
        .zip(right)
        .map(|(phi, psi)| (phi + &rho_next.mul_vec(psi)).scale(C64::new(0.5, 0.0)))
        .collect()
}

/// Follows the eigensystem of `op(t)` along the grid with metric `rho(t)`.
///
/// Phases are aligned with the midpoint metric ½(ρ(t_k) + ρ(t_{k+1})),
/// which keeps the gauge parallel to second order when ρ varies.
///
/// When derivatives are requested, ∂ₜψₙ(t_k) is a five-point central
/// difference over t_k ± h, t_k ± 2h with h = 1e-4·max(1, |t_k|), the
/// off-grid states being matched and phase-aligned to ψₙ(t_k) the same way.
pub fn eigen_trajectory(
    op: impl Fn(f64) -> Result<CMatrix>,
    rho: impl Fn(f64) -> Result<CMatrix>,
    grid: &TimeGrid,
    opts: TrajectoryOptions,
) -> Result<EigenTrajectory> {
    let times = grid.times();
    let mut energies = Vec::with_capacity(times.len());
    let mut right: Vec<Vec<CVector>> = Vec::with_capacity(times.len());
    let mut left: Vec<Vec<CVector>> = Vec::with_capacity(times.len());
    let mut right_dot = Vec::new();
    let mut min_overlap = f64::INFINITY;
    for (k, &t) in times.iter().enumerate() {
        let r = rho(t)?;
        let es = if k == 0 {
            solve(&op(t)?, &r, EigenOrder::DescendingReal)?
        } else {
            let mut es = solve(&op(t)?, &r, EigenOrder::Unsorted)?;
            let align = midpoint_align(&left[k - 1], &right[k - 1], &r);
            min_overlap = min_overlap.min(follow(&left[k - 1], &align, &mut es, t, &opts)?);
            es
        };
        if opts.derivatives {
            let h = 1e-4 * t.abs().max(1.0);
            let side = |s: f64| -> Result<Vec<CVector>> {
                let rs = rho(s)?;
                let mut e = solve(&op(s)?, &rs, EigenOrder::Unsorted)?;
                let align = midpoint_align(&es.left, &es.right, &rs);
                follow(&es.left, &align, &mut e, s, &opts)?;
                Ok(e.right)
            };
            let (p2, p1) = (side(t + 2.0 * h)?, side(t + h)?);
            let (m1, m2) = (side(t - h)?, side(t - 2.0 * h)?);
            let scale = C64::new(1.0 / (12.0 * h), 0.0);
            right_dot.push(
                (0..es.len())
                    .map(|n| {
                        let inner = (&p1[n] - &m1[n]).scale(C64::new(8.0, 0.0));
                        (&(&inner - &p2[n]) + &m2[n]).scale(scale)
                    })
                    .collect(),
            );
        }
        energies.push(es.values);
        right.push(es.right);
        left.push(es.left);
    }
    Ok(EigenTrajectory {
        times,
        energies,
        right,
        left,
        right_dot,
        min_overlap: if min_overlap.is_finite() { min_overlap } else { 1.0 },
    })
}
