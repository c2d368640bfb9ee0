//! Super-resolution of sparse spike trains from low-frequency Fourier data.
//!
//! A spike train lives on a fine grid of `N = m·F` points, but only the `m`
//! lowest Fourier modes are observed. `F` is the super-resolution factor:
//! how far below the classical Rayleigh length `ℓ = 1/m` the reconstruction
//! grid resolves. For `F > 1` adjacent columns of the sensing matrix are
//! nearly parallel, which breaks the usual incoherence assumptions of sparse
//! recovery; the algorithms here compensate with coherence-band bookkeeping.
//!
//! The crate is organised as:
//!
//! * [`model`] — grids, spike trains, partial Fourier sensing matrices, and
//!   noisy measurements.
//! * [`bands`] — coherence bands, band radii, and the Rayleigh index.
//! * [`solvers`] — least squares on a support, OMP, local optimization,
//!   BLOOMP, BLOT, basis-pursuit denoising, and the BP-BLOT pipeline.
//! * [`metrics`] — unfiltered/filtered error norms, residuals, and
//!   bottleneck/Hausdorff support distances.
//! * [`harness`] — configuration-driven experiment runner with CSV output.

// Validations are written `!(x > 0.0)` rather than `x <= 0.0` so that NaN
// fails them too; the negated form is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bands;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod solvers;

pub use num_complex::Complex64;

/// Euclidean norm of a complex vector.
pub fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Sum of complex magnitudes.
pub fn l1_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).sum()
}
