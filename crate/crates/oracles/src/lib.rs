//! Independent numerical oracles for the test suites.
//!
//! Everything in this crate exists to check the production code along a
//! second, unrelated computational route: a cyclic-Jacobi Hermitian
//! eigensolver (vs. the tridiagonalization-based one used in the solver), a
//! conjugate-gradient minimizer driven purely by central-difference
//! gradients (vs. closed-form update formulas), and a direct Toeplitz
//! assembly. It must never depend on `blindra-core`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues ascending and
/// `A = U diag(λ) Uᴴ`. Input is symmetrized first; convergence is declared
/// when the off-diagonal Frobenius mass drops below `tol` relative to the
/// matrix norm.
pub fn hermitian_eigen_jacobi(
    a: &DMatrix<Complex64>,
    tol: f64,
    max_sweeps: usize,
) -> (DVector<f64>, DMatrix<Complex64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi oracle needs a square matrix");
    let half = Complex64::new(0.5, 0.0);
    let mut m = (a + a.adjoint()) * half;
    let mut u = DMatrix::<Complex64>::identity(n, n);
    let scale = m.norm().max(1e-300);

    for _sweep in 0..max_sweeps {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * m[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = m[(p, q)];
                let b = beta.norm();
                if b <= 1e-300 {
                    continue;
                }
                let phase = beta / b; // unit modulus
                let alpha = m[(p, p)].re;
                let gamma = m[(q, q)].re;
                let tau = (gamma - alpha) / (2.0 * b);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J differs from I at: (p,p)=c, (p,q)=s, (q,p)=−ū·s, (q,q)=ū·c.
                let u_bar = phase.conj();
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = -u_bar * s;
                let jqq = u_bar * c;

                // M ← M·J (columns p, q)
                for k in 0..n {
                    let mp = m[(k, p)];
                    let mq = m[(k, q)];
                    m[(k, p)] = mp * jpp + mq * jqp;
                    m[(k, q)] = mp * jpq + mq * jqq;
                }
                // M ← Jᴴ·M (rows p, q)
                for k in 0..n {
                    let mp = m[(p, k)];
                    let mq = m[(q, k)];
                    m[(p, k)] = jpp.conj() * mp + jqp.conj() * mq;
                    m[(q, k)] = jpq.conj() * mp + jqq.conj() * mq;
                }
                // U ← U·J
                for k in 0..n {
                    let up = u[(k, p)];
                    let uq = u[(k, q)];
                    u[(k, p)] = up * jpp + uq * jqp;
                    u[(k, q)] = up * jpq + uq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());
    let eigenvalues = DVector::from_fn(n, |k, _| m[(order[k], order[k])].re);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        vectors.set_column(k, &u.column(src));
    }
    (eigenvalues, vectors)
}

/// Frobenius-nearest positive semidefinite matrix, computed entirely through
/// the Jacobi route: eigendecompose, clip negative eigenvalues, reassemble.
pub fn psd_project_jacobi(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let (evals, u) = hermitian_eigen_jacobi(a, 1e-14, 64);
    let clipped = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(evals[i].max(0.0), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    &u * clipped * u.adjoint()
}

/// Hermitian Toeplitz matrix assembled directly from its definition: first
/// row `[v₁ … v_N]`, conjugates below the diagonal.
pub fn toeplitz_direct(v: &DVector<Complex64>) -> DMatrix<Complex64> {
    let n = v.len();
    DMatrix::from_fn(n, n, |i, l| if l >= i { v[l - i] } else { v[i - l].conj() })
}

/// Central-difference gradient of `f` at `x` with step `h`.
///
/// Exact (up to rounding) for quadratics, which is the only use here.
pub fn fd_gradient<F: Fn(&DVector<f64>) -> f64>(f: &F, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let n = x.len();
    let mut g = DVector::zeros(n);
    let mut xp = x.clone();
    for i in 0..n {
        let xi = x[i];
        xp[i] = xi + h;
        let fp = f(&xp);
        xp[i] = xi - h;
        let fm = f(&xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Minimize a smooth convex **quadratic** `f` by conjugate gradients using
/// only central-difference gradients (no closed-form derivative anywhere).
///
/// Curvature products `H·d` come from differencing the gradient field, so
/// the routine touches `f` exclusively through function values. Stops when
/// the gradient norm falls below `grad_tol` or after `max_iters` rounds, and
/// returns the best point seen.
pub fn minimize_quadratic<F: Fn(&DVector<f64>) -> f64>(
    f: &F,
    x0: &DVector<f64>,
    grad_tol: f64,
    max_iters: usize,
) -> DVector<f64> {
    let h = 1e-4;
    let mut x = x0.clone();
    let mut best = x.clone();
    let mut best_gnorm = f64::INFINITY;

    let mut r = -fd_gradient(f, &x, h);
    let mut d = r.clone();
    for _ in 0..max_iters {
        let gnorm = r.norm();
        if gnorm < best_gnorm {
            best_gnorm = gnorm;
            best = x.clone();
        }
        if gnorm <= grad_tol {
            break;
        }
        // H·d via gradient differencing along d
        let dn = d.norm();
        if dn == 0.0 {
            break;
        }
        let eps = h / dn;
        let gp = fd_gradient(f, &(&x + &d * eps), h);
        let gm = fd_gradient(f, &(&x - &d * eps), h);
        let hd = (gp - gm) / (2.0 * eps);
        let dhd = d.dot(&hd);
        if dhd <= 0.0 {
            break;
        }
        let alpha = r.norm_squared() / dhd;
        x += &d * alpha;
        // re-measure the true residual rather than recurring it, to keep
        // floating-point drift out of the oracle
        let r_new = -fd_gradient(f, &x, h);
        let beta = r_new.norm_squared() / r.norm_squared();
        d = &r_new + &d * beta;
        r = r_new;
    }
    if r.norm() < best_gnorm {
        best = x;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_hermitian(n: usize) -> DMatrix<Complex64> {
        // deterministic, irregular, Hermitian
        let raw = DMatrix::from_fn(n, n, |i, j| {
            let t = (i * n + j) as f64;
            Complex64::new((t * 0.7311).sin(), (t * 1.193).cos() * 0.4)
        });
        (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0)
    }

    #[test]
    fn jacobi_reconstructs_input() {
        for n in [2usize, 5, 13] {
            let a = sample_hermitian(n);
            let (evals, u) = hermitian_eigen_jacobi(&a, 1e-14, 64);
            let lam = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::new(evals[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let rec = &u * lam * u.adjoint();
            assert!((rec - &a).norm() <= 1e-11 * a.norm().max(1.0), "n={n}");
            let unit = (u.adjoint() * &u - DMatrix::<Complex64>::identity(n, n)).norm();
            assert!(unit <= 1e-12, "unitary defect {unit:.2e} at n={n}");
            for k in 1..n {
                assert!(evals[k] >= evals[k - 1]);
            }
        }
    }

    #[test]
    fn jacobi_diagonal_case() {
        let a = DMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                Complex64::new([3.0, -1.0, 2.0][i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let (evals, _) = hermitian_eigen_jacobi(&a, 1e-14, 16);
        assert_eq!(evals.as_slice(), &[-1.0, 2.0, 3.0]);
    }

    #[test]
    fn psd_projection_clips_negative_directions() {
        let a = DMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                Complex64::new(if i == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let p = psd_project_jacobi(&a);
        assert!((p[(0, 0)] - Complex64::new(1.0, 0.0)).norm() <= 1e-13);
        assert!(p[(1, 1)].norm() <= 1e-13);
    }

    #[test]
    fn cg_minimizes_shifted_quadratic() {
        // f(x) = (x − t)ᵀ D (x − t) with spread-out curvature
        let n = 9;
        let target = DVector::from_fn(n, |i, _| (i as f64 * 0.3).sin());
        let diag = DVector::from_fn(n, |i, _| 0.5 + i as f64);
        let f = |x: &DVector<f64>| -> f64 {
            let d = x - &target;
            d.iter()
                .zip(diag.iter())
                .map(|(di, ci)| ci * di * di)
                .sum()
        };
        let x = minimize_quadratic(&f, &DVector::zeros(n), 1e-10, 400);
        assert!((x - &target).norm() <= 1e-8);
    }
}
