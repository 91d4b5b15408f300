use std::cmp::Ordering;

use super::schur::{schur, triangular_eigenvectors};
use super::{CMatrix, CVector, LinalgError, C64};

/// Ordering applied to eigenvalues after the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenOrder {
    /// Lexicographic by (real, imaginary), ascending.
    #[default]
    Ascending,
    /// Descending real part, then descending imaginary part.
    DescendingReal,
    /// Solver order; used when the caller imposes a continuity ordering.
    Unsorted,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub order: EigenOrder,
    /// Largest accepted condition number of the normalised eigenvector matrix.
    pub max_condition: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            order: EigenOrder::Ascending,
            max_condition: 1e8,
        }
    }
}

/// Eigenvalues with paired right and left eigenvectors, ⟨φₙ|ψₘ⟩ = δₙₘ.
///
/// Left vectors are the conjugated rows of the inverse right-eigenvector
/// matrix, so they satisfy M†|φₙ⟩ = λₙ*|φₙ⟩ and biorthonormality holds by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub values: Vec<C64>,
    pub right: Vec<CVector>,
    pub left: Vec<CVector>,
    pub order: EigenOrder,
    /// Frobenius condition number of the unit-column eigenvector matrix.
    pub condition: f64,
}

impl Eigensystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// max |⟨φₙ|ψₘ⟩ − δₙₘ|
    pub fn biorthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (n, phi) in self.left.iter().enumerate() {
            for (m, psi) in self.right.iter().enumerate() {
                let target = if n == m { 1.0 } else { 0.0 };
                worst = worst.max((phi.dot(psi) - target).norm());
            }
        }
        worst
    }

    /// Σₙ sₙ |ψₙ⟩⟨φₙ| for the given weights.
    pub fn spectral_sum(&self, weights: &[C64]) -> CMatrix {
        let n = self.right[0].len();
        let mut out = CMatrix::zeros(n);
        for ((w, psi), phi) in weights.iter().zip(&self.right).zip(&self.left) {
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += w * psi[i] * phi[j].conj();
                }
            }
        }
        out
    }

    /// max |Σₙ |ψₙ⟩⟨φₙ| − 𝕀|
    pub fn completeness_residual(&self) -> f64 {
        let ones = vec![C64::new(1.0, 0.0); self.len()];
        let n = self.right[0].len();
        (&self.spectral_sum(&ones) - &CMatrix::identity(n)).max_abs()
    }

    /// Σₙ λₙ |ψₙ⟩⟨φₙ|
    pub fn reconstruct(&self) -> CMatrix {
        self.spectral_sum(&self.values)
    }

    /// Reorders levels so that new level k is old level `perm[k]`.
    pub fn permute(&mut self, perm: &[usize]) {
        self.values = perm.iter().map(|&k| self.values[k]).collect();
        self.right = perm.iter().map(|&k| self.right[k].clone()).collect();
        self.left = perm.iter().map(|&k| self.left[k].clone()).collect();
        self.order = EigenOrder::Unsorted;
    }

    /// ψₙ → s ψₙ and φₙ → φₙ / s*, which keeps ⟨φₙ|ψₙ⟩ = 1.
    pub fn rescale(&mut self, level: usize, s: C64) {
        self.right[level] = self.right[level].scale(s);
        self.left[level] = self.left[level].scale(s.conj().inv());
    }

    fn sort(&mut self, order: EigenOrder) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let key = |z: &C64, w: &C64| -> Ordering {
            z.re.total_cmp(&w.re).then(z.im.total_cmp(&w.im))
        };
        match order {
            EigenOrder::Ascending => idx.sort_by(|&a, &b| key(&self.values[a], &self.values[b])),
            EigenOrder::DescendingReal => {
                idx.sort_by(|&a, &b| key(&self.values[b], &self.values[a]))
            }
            EigenOrder::Unsorted => {}
        }
        self.permute(&idx);
        self.order = order;
    }
}

/// Unit 2-norm with the largest-modulus component real and positive.
fn normalise_phase(v: &mut CVector) {
    let norm = v.norm();
    let pivot = v
        .0
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = if pivot.norm() == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        pivot / pivot.norm()
    };
    *v = v.scale((phase * norm).inv());
}

fn eig2(m: &CMatrix) -> (Vec<C64>, Vec<CVector>) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let values = vec![mean + disc, mean - disc];
    let vectors = values
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let u = CVector(vec![b, lambda - a]);
            let w = CVector(vec![lambda - d, c]);
            let best = if u.norm() >= w.norm() { u } else { w };
            if best.norm() <= f64::EPSILON * m.max_abs() {
                // scalar multiple of the identity
                CVector::basis(2, k)
            } else {
                best
            }
        })
        .collect();
    (values, vectors)
}

pub fn eig_biorthogonal(m: &CMatrix) -> Result<Eigensystem, LinalgError> {
    eig_biorthogonal_with(m, EigenOptions::default())
}

pub fn eig_biorthogonal_with(m: &CMatrix, opts: EigenOptions) -> Result<Eigensystem, LinalgError> {
    let n = m.dim();
    let (values, mut right) = match n {
        1 => (vec![m[(0, 0)]], vec![CVector::basis(1, 0)]),
        2 => eig2(m),
        _ => {
            let s = schur(m)?;
            let values: Vec<C64> = (0..n).map(|k| s.t[(k, k)]).collect();
            let vectors = triangular_eigenvectors(&s.t)
                .into_iter()
                .map(|v| s.q.mul_vec(&CVector(v)))
                .collect();
            (values, vectors)
        }
    };
    for v in &mut right {
        normalise_phase(v);
    }
    let r = CMatrix::from_columns(&right);
    let inv = r.inverse().map_err(|_| LinalgError::Defective {
        condition: f64::INFINITY,
    })?;
    let condition = r.frobenius() * inv.frobenius();
    if !condition.is_finite() || condition > opts.max_condition {
        return Err(LinalgError::Defective { condition });
    }
    let left = (0..n).map(|k| inv.row_conj(k)).collect();
    let mut es = Eigensystem {
        values,
        right,
        left,
        order: EigenOrder::Unsorted,
        condition,
    };
    es.sort(opts.order);
    Ok(es)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, I};

    #[test]
    fn diagonal_matrix() {
        let es = eig_biorthogonal(&CMatrix::from_real_rows([[1.0, 0.0], [0.0, 2.0]])).unwrap();
        assert_eq!(es.values, vec![c64(1.0, 0.0), c64(2.0, 0.0)]);
        assert_eq!(es.right[0], CVector::basis(2, 0));
        assert_eq!(es.right[1], CVector::basis(2, 1));
        assert_eq!(es.left, es.right);
    }

    #[test]
    fn pauli_x() {
        let es = eig_biorthogonal(&CMatrix::pauli_x()).unwrap();
        assert!((es.values[0] - c64(-1.0, 0.0)).norm() < 1e-15);
        assert!((es.values[1] - c64(1.0, 0.0)).norm() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let minus = &es.right[0];
        let plus = &es.right[1];
        assert!((minus[0] * minus[1].conj() + 0.5).norm() < 1e-15);
        assert!((plus[0] - r).norm() < 1e-15 && (plus[1] - r).norm() < 1e-15);
    }

    #[test]
    fn jordan_block_is_defective() {
        let j = CMatrix::from_real_rows([[1.0, 1.0], [0.0, 1.0]]);
        assert!(matches!(eig_biorthogonal(&j), Err(LinalgError::Defective { .. })));
        // exceptional point of a PT-symmetric dimer
        let ep = CMatrix::from_rows([[I, c64(1.0, 0.0)], [c64(1.0, 0.0), -I]]);
        assert!(matches!(eig_biorthogonal(&ep), Err(LinalgError::Defective { .. })));
    }

    #[test]
    fn larger_matrices() {
        let m = CMatrix::from_fn(6, |i, j| {
            c64(((3 * i + 5 * j) % 7) as f64 * 0.3 - 0.8, ((i * j) % 4) as f64 * 0.25)
        });
        let es = eig_biorthogonal(&m).unwrap();
        assert!(es.biorthonormality_residual() < 1e-10);
        assert!(es.completeness_residual() < 1e-10);
        assert!((&es.reconstruct() - &m).max_abs() < 1e-9);
        for k in 0..6 {
            let r = &m.mul_vec(&es.right[k]) - &es.right[k].scale(es.values[k]);
            assert!(r.max_abs() < 1e-10);
            let l = &m.adjoint().mul_vec(&es.left[k]) - &es.left[k].scale(es.values[k].conj());
            assert!(l.max_abs() < 1e-9);
        }
        let id = eig_biorthogonal(&CMatrix::identity(4)).unwrap();
        assert!(id.values.iter().all(|z| *z == c64(1.0, 0.0)));
    }

    #[test]
    fn descending_order_and_rescale() {
        let m = CMatrix::diag(&[c64(1.0, 0.0), c64(3.0, 0.0), c64(2.0, 0.0)]);
        let mut es = eig_biorthogonal_with(
            &m,
            EigenOptions {
                order: EigenOrder::DescendingReal,
                ..Default::default()
            },
        )
        .unwrap();
        let re: Vec<f64> = es.values.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![3.0, 2.0, 1.0]);
        es.rescale(1, c64(0.0, 2.0));
        assert!(es.biorthonormality_residual() < 1e-15);
    }
}
