//! One-dimensional quadrature for the running integral δ(t) = ∫₀ᵗ τ_i.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson integration to an absolute tolerance.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if diff.abs() <= 15.0 * tol {
        return Ok(left + right + diff / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature { a, b });
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

const GL_ORDER: usize = 10;

/// Gauss–Legendre nodes and weights on [-1, 1] (Newton on P_n).
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut rule = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        rule
    })
}

fn gl_segment(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for &(x, w) in gauss_legendre() {
        sum += w * f(mid + half * x)?;
    }
    Ok(sum * half)
}

/// Running integral F(t) = ∫₀ᵗ f on a fixed table of nodes.
///
/// Node values are accumulated with a 10-point Gauss–Legendre rule per cell
/// and partial cells use the same rule, so F is smooth in t to round-off
/// (finite differences of quantities built from F stay accurate). The table
/// is cross-checked against adaptive Simpson at construction.
#[derive(Debug, Clone)]
pub struct Antiderivative<F> {
    f: F,
    lo: f64,
    cell: f64,
    values: Vec<f64>,
}

/// Width of the tabulation cells.
pub const CELL_WIDTH: f64 = 1.0 / 64.0;

impl<F> Antiderivative<F>
where
    F: Fn(f64) -> Result<f64>,
{
    /// Tabulates over a range covering both 0 and [t0, t1] plus one unit of
    /// margin on each side; `simpson_tol` is the absolute tolerance for the
    /// cross-check.
    pub fn new(f: F, t0: f64, t1: f64, simpson_tol: f64) -> Result<Self> {
        let lo = (t0.min(0.0) - 1.0) / CELL_WIDTH;
        let hi = (t1.max(0.0) + 1.0) / CELL_WIDTH;
        let lo_idx = lo.floor() as i64;
        let hi_idx = hi.ceil() as i64;
        let cells = (hi_idx - lo_idx) as usize;
        let lo = lo_idx as f64 * CELL_WIDTH;
        let zero_idx = (-lo_idx) as usize;
        let mut values = vec![0.0; cells + 1];
        for k in zero_idx..cells {
            let a = lo + k as f64 * CELL_WIDTH;
            values[k + 1] = values[k] + gl_segment(&f, a, a + CELL_WIDTH)?;
        }
        for k in (0..zero_idx).rev() {
            let a = lo + k as f64 * CELL_WIDTH;
            values[k] = values[k + 1] - gl_segment(&f, a, a + CELL_WIDTH)?;
        }
        let table = Antiderivative {
            f,
            lo,
            cell: CELL_WIDTH,
            values,
        };
        for &end in &[t0, t1] {
            if end == 0.0 {
                continue;
            }
            let reference = adaptive_simpson(&table.f, 0.0, end, simpson_tol)?;
            let tabulated = table.value(end)?;
            if (reference - tabulated).abs() > 10.0 * simpson_tol + 1e-12 * reference.abs() {
                return Err(Error::Quadrature { a: 0.0, b: end });
            }
        }
        Ok(table)
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        let last = self.values.len() - 1;
        let pos = (t - self.lo) / self.cell;
        if pos < 0.0 || pos > last as f64 {
            // outside the table: integrate from the nearest end in cell-sized pieces
            let (mut x, mut acc, dir) = if pos < 0.0 {
                (self.lo, self.values[0], -1.0)
            } else {
                (self.lo + last as f64 * self.cell, self.values[last], 1.0)
            };
            while (t - x) * dir > self.cell {
                let next = x + dir * self.cell;
                acc += gl_segment(&self.f, x, next)?;
                x = next;
            }
            return Ok(acc + gl_segment(&self.f, x, t)?);
        }
        let k = (pos.floor() as usize).min(last - 1);
        let a = self.lo + k as f64 * self.cell;
        Ok(self.values[k] + gl_segment(&self.f, a, t)?)
    }
}
