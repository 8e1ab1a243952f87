//! Hermitian-Toeplitz operator algebra.
//!
//! The solver's closed-form updates are expressed through a small family of
//! linear maps: the Hermitian Toeplitz lift `𝒯`, its sign-flipped variant
//! `𝒯₁ = C ∘ 𝒯`, their adjoints under the real-linear Frobenius pairing,
//! the triangular sign matrix `C`, and the diagonal scaling `g` that inverts
//! `𝒯ᴬᵈʲ∘𝒯` on real inputs. Everything here is dense: problem sizes stay in
//! the hundreds and the solver's eigendecomposition dominates runtime anyway.
//!
//! Conventions (fixed once, used everywhere):
//! - `𝒯(v)` carries the generator on its first **row**: entry `(i, l)` is
//!   `v[l−i]` for `l ≥ i` and `conj(v[i−l])` below the diagonal, so the
//!   result is Hermitian whenever `Im(v[0]) = 0`.
//! - `C` is `+1` on and above the diagonal and `−1` strictly below. This is
//!   the unique sign choice for which `𝒯(v) = 𝒯(vᴿ) + j·C∘𝒯(vᴵ)` holds with
//!   a Hermitian left-hand side.
//! - Inner products conjugate the **second** argument:
//!   `⟨A, B⟩ = Σ Aᵢₗ·conj(Bᵢₗ)`.
//!
//! `𝒯` is only real-linear (not complex-linear) because of the conjugated
//! triangle, so the adjoints are defined against real input vectors; complex
//! compositions are handled by splitting into real and imaginary parts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Generator vector `v ∈ ℂᴺ` of a Hermitian Toeplitz matrix.
///
/// Construction enforces `Im(v[0]) = 0`; without it `𝒯(v)` would not be
/// Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzGenerator {
    v: DVector<Complex64>,
}

impl ToeplitzGenerator {
    /// Wrap a generator vector, rejecting a non-real leading entry.
    pub fn new(v: DVector<Complex64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Dimension("generator must be non-empty".into()));
        }
        if v[0].im != 0.0 {
            return Err(Error::Domain(format!(
                "generator leading entry must be real, got {}",
                v[0]
            )));
        }
        Ok(Self { v })
    }

    /// Lift a real vector into a generator.
    pub fn from_real(v: &DVector<f64>) -> Self {
        Self {
            v: v.map(|x| Complex64::new(x, 0.0)),
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.v
    }
}

/// The triangular sign matrix `C`: `+1` on and above the diagonal, `−1`
/// strictly below. Stored implicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignMatrix {
    n: usize,
}

impl SignMatrix {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Sign at position `(i, l)`.
    #[inline]
    pub fn entry(&self, i: usize, l: usize) -> f64 {
        if i <= l {
            1.0
        } else {
            -1.0
        }
    }

    /// Elementwise product `C ∘ A`.
    pub fn hadamard(&self, a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(Error::Dimension(format!(
                "sign matrix is {0}×{0}, operand is {1}×{2}",
                self.n,
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(DMatrix::from_fn(self.n, self.n, |i, l| {
            a[(i, l)] * self.entry(i, l)
        }))
    }

    /// Dense realization, mostly for tests and diagnostics.
    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, l| self.entry(i, l))
    }
}

/// The diagonal scaling `g`: `g[0] = 1/N`, `g[k] = 1/(2(N−k))` for `k ≥ 1`
/// (zero-based). It is the exact elementwise inverse of the diagonal action
/// of `𝒯ᴬᵈʲ∘𝒯` on real vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingVector {
    g: DVector<f64>,
}

impl ScalingVector {
    pub fn new(n: usize) -> Self {
        let g = DVector::from_fn(n, |k, _| {
            if k == 0 {
                1.0 / n as f64
            } else {
                1.0 / (2.0 * (n - k) as f64)
            }
        });
        Self { g }
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.g
    }
}

/// First canonical basis vector `e₁ ∈ ℝᴺ`, the constant term in the
/// closed-form generator update.
pub fn canonical_e1(n: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    if n > 0 {
        e[0] = 1.0;
    }
    e
}

/// Hermitian Toeplitz matrix `𝒯(v)` with first row `[v₁, v₂, …, v_N]`.
pub fn toeplitz(generator: &ToeplitzGenerator) -> DMatrix<Complex64> {
    let v = generator.as_vector();
    let n = v.len();
    DMatrix::from_fn(n, n, |i, l| if l >= i { v[l - i] } else { v[i - l].conj() })
}

/// Adjoint of `𝒯` under the real-linear pairing: entry 1 is the trace,
/// entry `k` sums the `(k−1)`-th sub- and super-diagonals.
pub fn toeplitz_adjoint(a: &DMatrix<Complex64>) -> Result<DVector<Complex64>> {
    let n = square_dim(a)?;
    Ok(DVector::from_fn(n, |k, _| {
        if k == 0 {
            (0..n).map(|i| a[(i, i)]).sum()
        } else {
            (k..n).map(|i| a[(i, i - k)] + a[(i - k, i)]).sum()
        }
    }))
}

/// `𝒯₁(v) = C ∘ 𝒯(v)` for a real generator: the sign of the strictly lower
/// triangle is flipped.
pub fn toeplitz1(v: &DVector<f64>) -> DMatrix<Complex64> {
    let n = v.len();
    DMatrix::from_fn(n, n, |i, l| {
        let x = if l >= i { v[l - i] } else { -v[i - l] };
        Complex64::new(x, 0.0)
    })
}

/// Adjoint of `𝒯₁`: entry 1 is the trace, entry `k` takes super-diagonal
/// minus sub-diagonal sums.
pub fn toeplitz1_adjoint(a: &DMatrix<Complex64>) -> Result<DVector<Complex64>> {
    let n = square_dim(a)?;
    Ok(DVector::from_fn(n, |k, _| {
        if k == 0 {
            (0..n).map(|i| a[(i, i)]).sum()
        } else {
            (k..n).map(|i| a[(i - k, i)] - a[(i, i - k)]).sum()
        }
    }))
}

/// Elementary Toeplitz matrix `Θ_q`: ones on the `q`-th diagonal (positive
/// `q` above the main diagonal), zeros elsewhere.
pub fn elementary_toeplitz(q: isize, n: usize) -> Result<DMatrix<f64>> {
    if q.unsigned_abs() >= n {
        return Err(Error::Domain(format!(
            "diagonal offset {q} out of range for size {n}"
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    let offset = q.unsigned_abs();
    for i in 0..(n - offset) {
        if q >= 0 {
            m[(i, i + offset)] = 1.0;
        } else {
            m[(i + offset, i)] = 1.0;
        }
    }
    Ok(m)
}

fn square_dim(a: &DMatrix<Complex64>) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "adjoint needs a square matrix, got {}×{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}
