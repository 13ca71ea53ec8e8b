//! Dense complex linear algebra shared by the generators and propagators.
//!
//! Vectorization is column stacking: `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVector, n: usize) -> CMatrix {
    assert_eq!(v.len(), n * n);
    CMatrix::from_column_slice(n, n, v.as_slice())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Superoperator of `X ↦ A X B`.
pub fn sandwich(a: &CMatrix, b: &CMatrix) -> CMatrix {
    kron(&b.transpose(), a)
}

/// Superoperator of `X ↦ A X`.
pub fn left(a: &CMatrix) -> CMatrix {
    sandwich(a, &identity(a.nrows()))
}

/// Superoperator of `X ↦ X B`.
pub fn right(b: &CMatrix) -> CMatrix {
    sandwich(&identity(b.nrows()), b)
}

/// Superoperator of `X ↦ -i[H, X]`.
pub fn commutator_generator(h: &CMatrix) -> CMatrix {
    (left(h) - right(h)) * (-I)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Largest elementwise deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn to_faer(m: &CMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// unitary whose columns are the eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let h = hermitian_part(m);
    let evd = to_faer(&h)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Linalg(format!("Hermitian eigensolver failed: {e:?}")))?;
    let values: Vec<f64> = (0..h.nrows()).map(|k| evd.S()[k].re).collect();
    Ok((values, from_faer(evd.U())))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 2 {
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        return Ok(vec![mean - r, mean + r]);
    }
    let h = hermitian_part(m);
    let mut vals = to_faer(&h)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Linalg(format!("Hermitian eigensolver failed: {e:?}")))?;
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// General complex eigen-decomposition `M V = V diag(λ)`.
pub fn eigen(m: &CMatrix) -> Result<(Vec<Complex64>, CMatrix)> {
    let evd = to_faer(m).eigen().map_err(|e| Error::Linalg(format!("eigensolver failed: {e:?}")))?;
    let values = (0..m.nrows()).map(|k| evd.S()[k]).collect();
    Ok((values, from_faer(evd.U())))
}

pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    to_faer(m).eigenvalues().map_err(|e| Error::Linalg(format!("eigensolver failed: {e:?}")))
}

/// Matrix exponential (scaling and squaring with Padé approximants up to order 13).
pub fn expm(m: &CMatrix) -> CMatrix {
    m.exp()
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}
