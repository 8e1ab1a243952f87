//! ADMM solver for the angle-only semidefinite program.
//!
//! The program minimizes `Re(v₁) + Re(tr(W)) + (γ/2)‖Y + 2c₁𝒫_Ω(Z)‖²_F`
//! over `(v, Z, W)` subject to `[[𝒯(v), Z], [Zᴴ, W]] ⪰ 0`. Splitting the
//! cone constraint onto an auxiliary Hermitian block matrix `Ψ` with
//! multiplier `Λ` gives an augmented Lagrangian whose blocks all admit
//! closed-form minimizers:
//!
//! - `Z` solves a row-diagonal linear system (the projector `𝒫ᴬᵈʲ𝒫` is a
//!   0/1 diagonal), `W = Ψ̄ + (Λ̄ − I)/ρ`;
//! - the generator `v` comes from the adjoint Toeplitz formulas, scaled by
//!   the diagonal vector `g`;
//! - `Ψ` is the PSD projection of the assembled block matrix minus `Λ/ρ`;
//! - `Λ` takes the usual dual ascent step.
//!
//! What the caller wants is not the primal solution but the dual
//! certificate: the off-diagonal multiplier block divided by `c₁` equals the
//! lifted dual matrix whose vector polynomial peaks at the active users'
//! angles. On rows off the observed set `Ω` the `Z` update reproduces
//! `Λ₁/ρ + Ψ₁`, so the `Λ` update leaves `ρ·(Ψ₁ᵗ⁺¹ − Ψ₁ᵗ)` there — a
//! quantity that vanishes with the residual — and extraction forces those
//! rows to exact zero.
//!
//! Iterations stop when the relative primal residual
//! `‖Ψ − G‖_F / (1 + ‖G‖_F)` drops below the configured tolerance.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::Observation;
use crate::error::{Error, Result};
use crate::linalg::{all_finite, complexify, hermitian_part, im, re};
use crate::toeplitz::{
    canonical_e1, toeplitz, toeplitz1_adjoint, toeplitz_adjoint, ScalingVector, SignMatrix,
    ToeplitzGenerator,
};

/// Cap applied to the data-fit weight when σ → 0 would send `γ = 1/σ²` to
/// infinity.
pub const GAMMA_CAP: f64 = 1e6;

/// Solver knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Augmentation weight ρ of the splitting.
    pub rho: f64,
    /// Data-fit weight γ.
    pub gamma: f64,
    pub max_iterations: usize,
    /// Relative primal residual target.
    pub primal_tolerance: f64,
    /// Record per-iteration diagnostics (residual, pre-projection minimum
    /// eigenvalue) for the trace output.
    pub record_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rho: 1.0,
            gamma: 1.0,
            max_iterations: 3000,
            primal_tolerance: 1e-4,
            record_history: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.gamma > 0.0) || !(self.primal_tolerance > 0.0) {
            return Err(Error::Domain(format!(
                "rho, gamma, and tolerance must be positive (rho={}, gamma={}, tol={})",
                self.rho, self.gamma, self.primal_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Domain("max_iterations must be positive".into()));
        }
        Ok(())
    }

    /// The `γ = 1/σ²` rule with the [`GAMMA_CAP`] applied for vanishing σ.
    pub fn gamma_for_noise(sigma: f64) -> f64 {
        if sigma > 0.0 {
            (1.0 / (sigma * sigma)).min(GAMMA_CAP)
        } else {
            GAMMA_CAP
        }
    }
}

/// Per-iteration diagnostics, recorded when `record_history` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Relative primal residual after the Ψ update.
    pub residual: f64,
    /// Minimum eigenvalue of the matrix fed to the PSD projection.
    pub min_eig_pre_projection: f64,
}

/// The solver's iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    n: usize,
    t: usize,
    /// Toeplitz generator, `Im(v₁) = 0` throughout.
    pub v: DVector<Complex64>,
    /// `N×T` off-diagonal primal block.
    pub z: DMatrix<Complex64>,
    /// `T×T` lower-right primal block.
    pub w: DMatrix<Complex64>,
    /// `(N+T)×(N+T)` Hermitian PSD splitting variable.
    pub psi: DMatrix<Complex64>,
    /// `(N+T)×(N+T)` Hermitian multiplier.
    pub lambda: DMatrix<Complex64>,
    pub iteration: usize,
    /// Relative primal residual after each completed iteration.
    pub primal_residuals: Vec<f64>,
    /// Optional per-iteration diagnostics.
    pub history: Vec<IterationRecord>,
    last_min_eig: f64,
}

impl AdmmState {
    pub fn n_antennas(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.t
    }

    /// Upper-left `N×N` block of Ψ.
    pub fn psi0(&self) -> DMatrix<Complex64> {
        self.psi.view((0, 0), (self.n, self.n)).into()
    }

    /// Upper-right `N×T` block of Ψ.
    pub fn psi1(&self) -> DMatrix<Complex64> {
        self.psi.view((0, self.n), (self.n, self.t)).into()
    }

    /// Lower-right `T×T` block of Ψ.
    pub fn psi_bar(&self) -> DMatrix<Complex64> {
        self.psi.view((self.n, self.n), (self.t, self.t)).into()
    }

    /// Upper-left `N×N` block of Λ.
    pub fn lambda0(&self) -> DMatrix<Complex64> {
        self.lambda.view((0, 0), (self.n, self.n)).into()
    }

    /// Upper-right `N×T` block of Λ.
    pub fn lambda1(&self) -> DMatrix<Complex64> {
        self.lambda.view((0, self.n), (self.n, self.t)).into()
    }

    /// Lower-right `T×T` block of Λ.
    pub fn lambda_bar(&self) -> DMatrix<Complex64> {
        self.lambda.view((self.n, self.n), (self.t, self.t)).into()
    }

    fn check_finite(&self) -> Result<()> {
        let ok = all_finite(&self.psi)
            && all_finite(&self.lambda)
            && all_finite(&self.z)
            && all_finite(&self.w)
            && self.v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Numerical {
                iteration: self.iteration,
                reason: "non-finite iterate (check rho/gamma configuration)".into(),
            })
        }
    }
}

/// Fresh all-zero state for an `N`-antenna, `T`-slot problem.
pub fn init_state(n: usize, t: usize) -> AdmmState {
    assert!(n >= 1 && t >= 1, "need N ≥ 1 and T ≥ 1");
    AdmmState {
        n,
        t,
        v: DVector::zeros(n),
        z: DMatrix::zeros(n, t),
        w: DMatrix::zeros(t, t),
        psi: DMatrix::zeros(n + t, n + t),
        lambda: DMatrix::zeros(n + t, n + t),
        iteration: 0,
        primal_residuals: Vec::new(),
        history: Vec::new(),
        last_min_eig: 0.0,
    }
}

/// The block matrix `G = [[𝒯(v), Z], [Zᴴ, W]]` of the current primal
/// variables.
pub fn assemble_block(state: &AdmmState) -> Result<DMatrix<Complex64>> {
    let (n, t) = (state.n, state.t);
    let gen = ToeplitzGenerator::new(state.v.clone()).map_err(|_| Error::Numerical {
        iteration: state.iteration,
        reason: "generator drifted off the real axis".into(),
    })?;
    let tv = toeplitz(&gen);
    let mut g = DMatrix::zeros(n + t, n + t);
    g.view_mut((0, 0), (n, n)).copy_from(&tv);
    g.view_mut((0, n), (n, t)).copy_from(&state.z);
    g.view_mut((n, 0), (t, n)).copy_from(&state.z.adjoint());
    g.view_mut((n, n), (t, t)).copy_from(&state.w);
    Ok(g)
}

/// Closed-form `(Z, W)` update.
///
/// Row `i` of `Z` scales `(2Λ₁ + 2ρΨ₁ − 2γc₁𝒫ᴬᵈʲ_Ω Y)ᵢ` by
/// `1/(4c₁²γ·𝟙[i∈Ω] + 2ρ)`; `W = Ψ̄ + (Λ̄ − I)/ρ`.
pub fn update_zw(state: &mut AdmmState, observation: &Observation, options: &SolverOptions) -> Result<()> {
    options.validate()?;
    let (n, t) = (state.n, state.t);
    if observation.array.n_antennas() != n || observation.horizon != t {
        return Err(Error::Dimension(format!(
            "state is {n}×{t}, observation is {}×{}",
            observation.array.n_antennas(),
            observation.horizon
        )));
    }
    let rho = options.rho;
    let gamma = options.gamma;
    let c1 = observation.c1;

    let lifted_y = observation.array.lift_rows(&observation.y)?;
    let rhs = state.lambda1() * Complex64::from(2.0) + state.psi1() * Complex64::from(2.0 * rho)
        - lifted_y * Complex64::from(2.0 * gamma * c1);
    let on_denom = 4.0 * c1 * c1 * gamma + 2.0 * rho;
    let off_denom = 2.0 * rho;
    for i in 0..n {
        let denom = if observation.array.is_observed(i) {
            on_denom
        } else {
            off_denom
        };
        for j in 0..t {
            state.z[(i, j)] = rhs[(i, j)] / denom;
        }
    }

    let eye = DMatrix::<Complex64>::identity(t, t);
    state.w = state.psi_bar() + (state.lambda_bar() - eye) / Complex64::from(rho);
    Ok(())
}

/// Closed-form generator update, assembled from the adjoint Toeplitz
/// formulas as `v = vᴿ + j·vᴵ`:
///
/// ```text
/// vᴿ = g ∘ (−e₁/ρ + 𝒯ᴬᵈʲ(Ψ₀ᴿ) + 𝒯ᴬᵈʲ(Λ₀ᴿ)/ρ)
/// vᴵ = g ∘ (𝒯₁ᴬᵈʲ(Ψ₀ᴵ) + 𝒯ᴬᵈʲ(C∘Λ₀ᴵ)/ρ)
/// ```
///
/// For Hermitian blocks the first entry of `vᴵ` is a sum of exact zeros, so
/// `Im(v₁) = 0` holds without any projection.
pub fn update_v(state: &mut AdmmState, options: &SolverOptions) -> Result<()> {
    options.validate()?;
    let n = state.n;
    let rho = options.rho;
    let psi0 = state.psi0();
    let lambda0 = state.lambda0();
    let sign = SignMatrix::new(n);

    let adj_psi_re = toeplitz_adjoint(&complexify(&re(&psi0)))?;
    let adj_lam_re = toeplitz_adjoint(&complexify(&re(&lambda0)))?;
    let adj1_psi_im = toeplitz1_adjoint(&complexify(&im(&psi0)))?;
    let adj_lam_im = toeplitz_adjoint(&sign.hadamard(&complexify(&im(&lambda0)))?)?;

    let g = ScalingVector::new(n);
    let gv = g.as_vector();
    let e1 = canonical_e1(n);
    state.v = DVector::from_fn(n, |k, _| {
        let real = gv[k] * (-e1[k] / rho + adj_psi_re[k].re + adj_lam_re[k].re / rho);
        let imag = gv[k] * (adj1_psi_im[k].re + adj_lam_im[k].re / rho);
        Complex64::new(real, imag)
    });
    Ok(())
}

/// Frobenius-nearest Hermitian PSD matrix: symmetrize, eigendecompose, clip
/// negative eigenvalues, reassemble.
pub fn project_psd(h: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    project_psd_detail(h, 0).map(|(m, _)| m)
}

fn project_psd_detail(h: &DMatrix<Complex64>, iteration: usize) -> Result<(DMatrix<Complex64>, f64)> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension(format!(
            "PSD projection needs a square matrix, got {}×{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let sym = hermitian_part(h);
    let eig = nalgebra::linalg::SymmetricEigen::try_new(sym, f64::EPSILON, 10_000).ok_or(
        Error::Numerical {
            iteration,
            reason: "Hermitian eigendecomposition did not converge".into(),
        },
    )?;
    let min_eig = eig.eigenvalues.min();
    let n = h.nrows();
    let clipped = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(eig.eigenvalues[i].max(0.0), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let projected = &eig.eigenvectors * clipped * eig.eigenvectors.adjoint();
    Ok((hermitian_part(&projected), min_eig))
}

/// Ψ update: PSD projection of the assembled block matrix minus `Λ/ρ`.
pub fn update_psi(state: &mut AdmmState, options: &SolverOptions) -> Result<()> {
    options.validate()?;
    let g = assemble_block(state)?;
    let target = &g - &state.lambda / Complex64::from(options.rho);
    let (projected, min_eig) = project_psd_detail(&target, state.iteration)?;
    state.psi = projected;
    state.last_min_eig = min_eig;
    Ok(())
}

/// Dual ascent step `Λ ← Λ + ρ(Ψ − G)`, re-symmetrized to keep the
/// multiplier exactly Hermitian.
pub fn update_lambda(state: &mut AdmmState, options: &SolverOptions) -> Result<()> {
    options.validate()?;
    let g = assemble_block(state)?;
    let step = (&state.psi - &g) * Complex64::from(options.rho);
    state.lambda = hermitian_part(&(&state.lambda + step));
    Ok(())
}

/// Relative primal residual `‖Ψ − G‖_F / (1 + ‖G‖_F)` of the current state.
pub fn primal_residual(state: &AdmmState) -> Result<f64> {
    let g = assemble_block(state)?;
    Ok((&state.psi - &g).norm() / (1.0 + g.norm()))
}

/// The lifted dual matrix extracted from a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    /// `N×T` matrix `𝒫ᴬᵈʲ_Ω(V) = Λ₁/c₁`; rows off Ω are exactly zero.
    pub lifted_dual: DMatrix<Complex64>,
    pub c1: f64,
    pub converged: bool,
    pub iterations_used: usize,
}

/// Run the solver to convergence (or the iteration cap) and extract the
/// dual certificate.
pub fn solve(observation: &Observation, options: &SolverOptions) -> Result<DualCertificate> {
    solve_detailed(observation, options).map(|(cert, _)| cert)
}

/// As [`solve`], additionally returning the final state (residual history,
/// iterate blocks) for diagnostics and tests.
pub fn solve_detailed(
    observation: &Observation,
    options: &SolverOptions,
) -> Result<(DualCertificate, AdmmState)> {
    options.validate()?;
    if !(observation.c1 > 0.0) {
        return Err(Error::Domain(format!(
            "observation c1 must be positive, got {}",
            observation.c1
        )));
    }
    let n = observation.array.n_antennas();
    let t = observation.horizon;
    if observation.y.nrows() != observation.array.n_observed() || observation.y.ncols() != t {
        return Err(Error::Dimension("observation shape is inconsistent".into()));
    }

    let mut state = init_state(n, t);
    let mut converged = false;
    while state.iteration < options.max_iterations {
        update_zw(&mut state, observation, options)?;
        update_v(&mut state, options)?;
        update_psi(&mut state, options)?;
        let residual = primal_residual(&state)?;
        update_lambda(&mut state, options)?;
        state.iteration += 1;
        state.primal_residuals.push(residual);
        if options.record_history {
            state.history.push(IterationRecord {
                iteration: state.iteration,
                residual,
                min_eig_pre_projection: state.last_min_eig,
            });
        }
        state.check_finite()?;
        if residual <= options.primal_tolerance {
            converged = true;
            break;
        }
    }

    let lambda1 = state.lambda1();
    let lifted_dual = DMatrix::from_fn(n, t, |i, j| {
        if observation.array.is_observed(i) {
            lambda1[(i, j)] / observation.c1
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let certificate = DualCertificate {
        lifted_dual,
        c1: observation.c1,
        converged,
        iterations_used: state.iteration,
    };
    Ok((certificate, state))
}

/// Write the per-iteration diagnostics as CSV
/// (`iteration,residual,min_eig_pre_projection`).
pub fn write_iteration_trace<W: Write>(history: &[IterationRecord], out: &mut W) -> Result<()> {
    writeln!(out, "iteration,residual,min_eig_pre_projection")?;
    for rec in history {
        writeln!(
            out,
            "{},{},{}",
            rec.iteration, rec.residual, rec.min_eig_pre_projection
        )?;
    }
    Ok(())
}
