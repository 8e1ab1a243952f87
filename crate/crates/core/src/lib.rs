//! Blind angle-domain activity detection for grant-free massive access.
//!
//! A base station with an `N`-antenna uniform linear array observes, on a
//! subset `Ω` of its antennas, the superposition of a few active users'
//! rank-one transmissions plus noise. This crate recovers which users are
//! active — and, when asked, their data and channels — without pilots:
//!
//! 1. [`array`] — the physical model: steering vectors, random scenes and
//!    noisy partial observations.
//! 2. [`toeplitz`] — the Hermitian-Toeplitz operator algebra (`𝒯`, `𝒯₁`,
//!    their adjoints, the sign matrix `C` and scaling vector `g`) that the
//!    solver's closed-form updates are built from.
//! 3. [`admm`] — an ADMM solver for the angle-only semidefinite program; its
//!    output is a dual certificate rather than a reconstruction.
//! 4. [`detector`] — evaluates the certificate's vector polynomial on a fine
//!    angular grid, finds its peaks, and clusters them into users.
//! 5. [`recovery`] — alternating least squares with a nonnegativity clamp to
//!    recover per-user data and channel gains from the detected angles.
//!
//! All matrices are dense `nalgebra` types with `Complex64` entries; sizes
//! are a few hundred at most, and the per-iteration eigendecomposition in
//! the solver dominates the cost of everything else.

pub mod admm;
pub mod array;
pub mod detector;
pub mod error;
pub mod linalg;
pub mod recovery;
pub mod toeplitz;

pub use error::{Error, Result};
