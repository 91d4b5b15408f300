//! Complex Schur decomposition A = Q T Q† by Householder reduction to
//! Hessenberg form followed by single-shift QR sweeps with Wilkinson shifts.

use super::{CMatrix, LinalgError, C64};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

pub(crate) struct Schur {
    pub q: CMatrix,
    pub t: CMatrix,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn hessenberg(a: &mut CMatrix, q: &mut CMatrix) {
    let n = a.dim();
    for k in 0..n.saturating_sub(2) {
        let alpha_norm: f64 = ((k + 1)..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        // v = x + phase*|x| e1, H = I - 2 v v† / v†v
        let mut v: Vec<C64> = ((k + 1)..n).map(|i| a[(i, k)]).collect();
        v[0] += phase * alpha_norm;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // A <- H A
        for j in 0..n {
            let s: C64 = v
                .iter()
                .enumerate()
                .map(|(r, vr)| vr.conj() * a[(k + 1 + r, j)])
                .sum();
            for (r, vr) in v.iter().enumerate() {
                a[(k + 1 + r, j)] -= vr * s * beta;
            }
        }
        // A <- A H, Q <- Q H
        for m in [&mut *a, &mut *q] {
            for i in 0..n {
                let s: C64 = v
                    .iter()
                    .enumerate()
                    .map(|(r, vr)| m[(i, k + 1 + r)] * vr)
                    .sum();
                for (r, vr) in v.iter().enumerate() {
                    m[(i, k + 1 + r)] -= s * vr.conj() * beta;
                }
            }
        }
        for i in (k + 2)..n {
            a[(i, k)] = zero();
        }
    }
}

/// Eigenvalue of the 2x2 block [[a, b], [c, d]] closest to d.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m = (a + d) * 0.5;
    let l1 = m + disc;
    let l2 = m - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn givens(x: C64, y: C64) -> (f64, C64) {
    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, zero());
    }
    if x.norm() == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let c = x.norm() / r;
    let s = (x / x.norm()) * y.conj() / r;
    (c, s)
}

pub(crate) fn schur(a: &CMatrix) -> Result<Schur, LinalgError> {
    let n = a.dim();
    let mut t = a.clone();
    let mut q = CMatrix::identity(n);
    hessenberg(&mut t, &mut q);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);

    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        // find start of the unreduced block ending at hi
        let mut l = hi;
        while l > 0 {
            let sub = t[(l, l - 1)].norm();
            let diag = t[(l - 1, l - 1)].norm() + t[(l, l)].norm();
            let diag = if diag == 0.0 { scale } else { diag };
            if sub <= f64::EPSILON * diag {
                t[(l, l - 1)] = zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > MAX_SWEEPS_PER_EIGENVALUE * n {
            return Err(LinalgError::NoConvergence);
        }
        let mu = if iter % 11 == 10 {
            // exceptional shift to break cycles
            t[(hi, hi)] + C64::new(t[(hi, hi - 1)].norm() * 0.75, 0.0)
        } else {
            wilkinson_shift(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
        };
        for i in l..=hi {
            t[(i, i)] -= mu;
        }
        let mut rotations = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(t[(k, k)], t[(k + 1, k)]);
            for j in k..n {
                let x = t[(k, j)];
                let y = t[(k + 1, j)];
                t[(k, j)] = x * c + s * y;
                t[(k + 1, j)] = -s.conj() * x + y * c;
            }
            rotations.push((c, s));
        }
        for (idx, &(c, s)) in rotations.iter().enumerate() {
            let k = l + idx;
            let rows = (k + 2).min(hi + 1);
            for i in 0..rows {
                let x = t[(i, k)];
                let y = t[(i, k + 1)];
                t[(i, k)] = x * c + s.conj() * y;
                t[(i, k + 1)] = -s * x + y * c;
            }
            for i in 0..n {
                let x = q[(i, k)];
                let y = q[(i, k + 1)];
                q[(i, k)] = x * c + s.conj() * y;
                q[(i, k + 1)] = -s * x + y * c;
            }
        }
        for i in l..=hi {
            t[(i, i)] += mu;
        }
    }
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = zero();
        }
    }
    Ok(Schur { q, t })
}

/// Eigenvectors of an upper-triangular T by back substitution, one per
/// diagonal entry, unnormalised.
pub(crate) fn triangular_eigenvectors(t: &CMatrix) -> Vec<Vec<C64>> {
    let n = t.dim();
    let small = f64::EPSILON * t.max_abs().max(f64::MIN_POSITIVE);
    (0..n)
        .map(|k| {
            let lambda = t[(k, k)];
            let mut v = vec![zero(); n];
            v[k] = C64::new(1.0, 0.0);
            for j in (0..k).rev() {
                let s: C64 = ((j + 1)..=k).map(|l| t[(j, l)] * v[l]).sum();
                let mut denom = t[(j, j)] - lambda;
                if denom.norm() < small {
                    denom = C64::new(small, 0.0);
                }
                v[j] = -s / denom;
            }
            v
        })
        .collect()
}
