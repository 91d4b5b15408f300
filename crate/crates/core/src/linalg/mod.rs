//! Small dense complex matrices.
//!
//! Sized for two-level systems (N = 2) and a handful of extra levels; nothing
//! here is tuned for large N.

mod eigen;
mod schur;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

pub use eigen::{eig_biorthogonal, eig_biorthogonal_with, EigenOptions, EigenOrder, Eigensystem};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is singular")]
    Singular,
    #[error("eigenvector matrix is numerically singular (condition {condition:.3e}); close to an exceptional point")]
    Defective { condition: f64 },
    #[error("QR iteration did not converge")]
    NoConvergence,
}

/// Complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector(pub Vec<C64>);

impl CVector {
    pub fn zeros(n: usize) -> Self {
        CVector(vec![C64::new(0.0, 0.0); n])
    }

    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[k] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_slice(xs: &[C64]) -> Self {
        CVector(xs.to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// ⟨self|other⟩, antilinear in `self`.
    pub fn dot(&self, other: &CVector) -> C64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> CVector {
        CVector(self.0.iter().map(|z| z * s).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn axpy(&self, a: C64, x: &CVector) -> CVector {
        CVector(self.0.iter().zip(&x.0).map(|(y, x)| y + a * x).collect())
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl Add for &CVector {
    type Output = CVector;
    fn add(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &CVector {
    type Output = CVector;
    fn sub(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for j in 0..self.n {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be at least 1");
        CMatrix {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        let mut m = Self::zeros(N);
        for (i, row) in rows.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        m
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        Self::from_rows(rows.map(|r| r.map(|x| C64::new(x, 0.0))))
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, z) in entries.iter().enumerate() {
            m[(i, i)] = *z;
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[CVector]) -> Self {
        let n = cols.len();
        Self::from_fn(n, |i, j| cols[j][i])
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector((0..self.n).map(|i| self[(i, j)]).collect())
    }

    pub fn row_conj(&self, i: usize) -> CVector {
        CVector((0..self.n).map(|j| self[(i, j)].conj()).collect())
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows([[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn pauli_y() -> Self {
        let z = C64::new(0.0, 0.0);
        Self::from_rows([[z, -I], [I, z]])
    }

    pub fn pauli_z() -> Self {
        Self::from_real_rows([[1.0, 0.0], [0.0, -1.0]])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus; the norm used for every residual in this crate.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_dim(&self, other: &CMatrix) -> Result<(), LinalgError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(LinalgError::DimensionMismatch(self.n, other.n))
        }
    }

    pub fn try_mul(&self, other: &CMatrix) -> Result<CMatrix, LinalgError> {
        self.check_dim(other)?;
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        assert_eq!(v.len(), self.n, "vector length must match matrix dimension");
        CVector(
            (0..self.n)
                .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
                .collect(),
        )
    }

    /// LU factorisation with partial pivoting; returns (LU, permutation, sign).
    fn lu(&self) -> Result<(CMatrix, Vec<usize>, f64), LinalgError> {
        let n = self.n;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = self.max_abs();
        if scale == 0.0 {
            return Err(LinalgError::Singular);
        }
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[(x, k)].norm().total_cmp(&a[(y, k)].norm()))
                .unwrap();
            if a[(p, k)].norm() <= f64::EPSILON * scale * 1e-3 {
                return Err(LinalgError::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            for i in (k + 1)..n {
                let factor = a[(i, k)] / pivot;
                a[(i, k)] = factor;
                for j in (k + 1)..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= factor * akj;
                }
            }
        }
        Ok((a, perm, sign))
    }

    pub fn det(&self) -> C64 {
        if self.n == 2 {
            return self[(0, 0)] * self[(1, 1)] - self[(0, 1)] * self[(1, 0)];
        }
        match self.lu() {
            Ok((lu, _, sign)) => (0..self.n).map(|i| lu[(i, i)]).product::<C64>() * sign,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn inverse(&self) -> Result<CMatrix, LinalgError> {
        let n = self.n;
        if n == 2 {
            let d = self.det();
            if d.norm() <= f64::EPSILON * 1e-3 * self.max_abs().powi(2) || d.norm() == 0.0 {
                return Err(LinalgError::Singular);
            }
            let inv = CMatrix::from_rows([
                [self[(1, 1)], -self[(0, 1)]],
                [-self[(1, 0)], self[(0, 0)]],
            ]);
            return Ok(inv.scale(d.inv()));
        }
        let (lu, perm, _) = self.lu()?;
        let mut inv = CMatrix::zeros(n);
        for col in 0..n {
            // solve L U x = P e_col
            let mut x: Vec<C64> = (0..n)
                .map(|i| {
                    if perm[i] == col {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect();
            for i in 0..n {
                for k in 0..i {
                    let l = lu[(i, k)];
                    x[i] = x[i] - l * x[k];
                }
            }
            for i in (0..n).rev() {
                for k in (i + 1)..n {
                    let u = lu[(i, k)];
                    x[i] = x[i] - u * x[k];
                }
                x[i] /= lu[(i, i)];
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        Ok(inv)
    }

    /// (A + A†)/2
    pub fn hermitian_part(&self) -> CMatrix {
        (self + &self.adjoint()).scale_real(0.5)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.try_mul(rhs).expect("matrix dimensions must agree")
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        &self * &rhs
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimensions must agree");
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: CMatrix) -> CMatrix {
        &self + &rhs
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimensions must agree");
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: CMatrix) -> CMatrix {
        &self - &rhs
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

/// AB − BA
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    Ok(a.try_mul(b)? - b.try_mul(a)?)
}

/// max |A − A†|
pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    (a - &a.adjoint()).max_abs()
}

/// Spectrum of the Hermitian part of a matrix and its sign verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Positivity {
    pub is_positive: bool,
    pub hermiticity_residual: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

/// Reports whether `a` is Hermitian (within `herm_tol`) with all eigenvalues
/// strictly positive. Never fails; an unusable spectrum reports non-positive.
pub fn positivity_check(a: &CMatrix, herm_tol: f64) -> Positivity {
    let residual = hermiticity_residual(a);
    let hp = a.hermitian_part();
    let mut eigenvalues: Vec<f64> = match eig_biorthogonal(&hp) {
        Ok(es) => es.values.iter().map(|z| z.re).collect(),
        Err(_) => Vec::new(),
    };
    eigenvalues.sort_by(f64::total_cmp);
    let is_positive =
        residual <= herm_tol && !eigenvalues.is_empty() && eigenvalues.iter().all(|&x| x > 0.0);
    Positivity {
        is_positive,
        hermiticity_residual: residual,
        eigenvalues,
    }
}

/// Default central-difference step for a time argument.
pub fn default_fd_step(t: f64) -> f64 {
    1e-5 * t.abs().max(1.0)
}

/// Central difference (F(t+h) − F(t−h)) / 2h of a matrix-valued function.
pub fn operator_time_derivative<E>(
    f: impl Fn(f64) -> Result<CMatrix, E>,
    t: f64,
    h: f64,
) -> Result<CMatrix, E> {
    let plus = f(t + h)?;
    let minus = f(t - h)?;
    Ok((&plus - &minus).scale_real(0.5 / h))
}

/// Step for [`operator_time_derivative_5pt`].
pub fn five_point_step(t: f64) -> f64 {
    1e-3 * t.abs().max(1.0)
}

/// Fourth-order stencil (−F(t+2h) + 8F(t+h) − 8F(t−h) + F(t−2h)) / 12h.
pub fn operator_time_derivative_5pt<E>(
    f: impl Fn(f64) -> Result<CMatrix, E>,
    t: f64,
    h: f64,
) -> Result<CMatrix, E> {
    let p2 = f(t + 2.0 * h)?;
    let p1 = f(t + h)?;
    let m1 = f(t - h)?;
    let m2 = f(t - 2.0 * h)?;
    let inner = (&p1 - &m1).scale_real(8.0);
    Ok((&(&inner - &p2) + &m2).scale_real(1.0 / (12.0 * h)))
}
