//! Small dense-matrix helpers shared across the solver and its tests.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Frobenius inner product `⟨A, B⟩ = Σᵢₗ Aᵢₗ·conj(Bᵢₗ)`.
///
/// Conjugation sits on the second argument, matching the convention used
/// throughout the operator algebra.
pub fn frob_inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
}

/// Largest entrywise deviation of `m` from its own conjugate transpose.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// `(M + Mᴴ)/2`, the Hermitian part of a square matrix.
///
/// Applied defensively before every eigendecomposition and after every dual
/// update; it maps exactly-Hermitian inputs to themselves and forces the
/// diagonal's imaginary part to exact zero.
pub fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    debug_assert_eq!(m.nrows(), m.ncols());
    let half = Complex64::new(0.5, 0.0);
    (m + m.adjoint()) * half
}

/// True when every entry of `m` has finite real and imaginary parts.
pub fn all_finite(m: &DMatrix<Complex64>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Real part of a complex matrix as an `f64` matrix.
pub fn re(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    m.map(|z| z.re)
}

/// Imaginary part of a complex matrix as an `f64` matrix.
pub fn im(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    m.map(|z| z.im)
}

/// Lift a real matrix into the complex plane.
pub fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}
