//! Basis-pursuit denoising: minimize `‖z‖₁` subject to `‖Φz − y‖₂ ≤ ε`.
//!
//! The solver is an augmented-Lagrangian splitting (ADMM) tailored to the
//! sensing matrix at hand: because the rows of `Φ` are exactly orthogonal
//! (`ΦΦ* = N·I`), the Euclidean projection onto the constraint ball has the
//! closed form `w + Φ*(r·(1 − ε/‖r‖))/N` with `r = y − Φw`, so each
//! iteration costs one forward and one adjoint apply. The ℓ¹ half of the
//! split is the usual complex soft threshold.
//!
//! The `z` iterate is feasible after every iteration by construction, so
//! even a run that hits the iteration cap returns a usable point — it is
//! flagged [`SolverFlag::Unconverged`] rather than failed.

use num_complex::Complex64;

use crate::model::SensingMatrix;
use crate::solvers::{RecoveredSignal, SolverError, SolverFlag};

/// Parameters for [`bpdn`]. `epsilon` is the constraint radius in the same
/// units as `‖y‖₂`; the rest control the splitting iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct BpdnSettings {
    /// Data-fidelity radius `ε ≥ 0`. Zero demands exact interpolation.
    pub epsilon: f64,
    /// Iteration cap; hitting it flags the result as unconverged.
    pub max_iterations: usize,
    /// Relative primal tolerance: `‖x − z‖ ≤ tol·max(‖x‖, ‖z‖)`.
    pub primal_tol: f64,
    /// Relative dual tolerance: `ρ‖z − z_prev‖ ≤ tol·ρ‖u‖`.
    pub dual_tol: f64,
    /// Initial penalty `ρ`; adapted by residual balancing as the iteration
    /// proceeds.
    pub penalty: f64,
}

impl BpdnSettings {
    pub fn with_epsilon(epsilon: f64) -> Self {
        BpdnSettings {
            epsilon,
            max_iterations: 5000,
            primal_tol: 1e-6,
            dual_tol: 1e-6,
            penalty: 1.0,
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(SolverError::InvalidSettings(
                "epsilon must be finite and non-negative".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(SolverError::InvalidSettings("max_iterations must be positive".into()));
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(SolverError::InvalidSettings("penalty must be finite and positive".into()));
        }
        if !(self.primal_tol > 0.0 && self.dual_tol > 0.0) {
            return Err(SolverError::InvalidSettings("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Solve the basis-pursuit denoising problem. Returns the feasible iterate,
/// its full nonzero set as the support (no thresholding), and the achieved
/// residual norm.
pub fn bpdn(
    phi: &SensingMatrix,
    y: &[Complex64],
    settings: &BpdnSettings,
) -> Result<RecoveredSignal, SolverError> {
    settings.validate()?;
    let m = phi.m();
    let n = phi.n();
    assert_eq!(y.len(), m, "measurement length must match the sensing matrix");
    let inv_n = 1.0 / n as f64;
    let eps = settings.epsilon;
    let mut rho = settings.penalty;

    let (yr, yi) = crate::model::split_complex(y);

    // z starts at the minimum-energy interpolant Φ*y/N; x mirrors it.
    let mut zr = vec![0.0; n];
    let mut zi = vec![0.0; n];
    phi.adjoint_soa(&yr, &yi, &mut zr, &mut zi);
    for v in zr.iter_mut().chain(zi.iter_mut()) {
        *v *= inv_n;
    }
    let mut xr = zr.clone();
    let mut xi = zi.clone();
    let mut ur = vec![0.0; n];
    let mut ui = vec![0.0; n];
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut fr = vec![0.0; m];
    let mut fi = vec![0.0; m];
    let mut rr = vec![0.0; m];
    let mut ri = vec![0.0; m];
    let mut tr = vec![0.0; n];
    let mut ti = vec![0.0; n];

    let mut converged = false;
    for _ in 0..settings.max_iterations {
        // ℓ¹ step: complex soft threshold of z − u at 1/ρ.
        let tau = 1.0 / rho;
        let tau_sq = tau * tau;
        for i in 0..n {
            let vr = zr[i] - ur[i];
            let vi = zi[i] - ui[i];
            let mag_sq = vr * vr + vi * vi;
            if mag_sq <= tau_sq {
                xr[i] = 0.0;
                xi[i] = 0.0;
            } else {
                let scale = 1.0 - tau / mag_sq.sqrt();
                xr[i] = vr * scale;
                xi[i] = vi * scale;
            }
        }

        // Constraint step: project x + u onto the ε-ball around y.
        for i in 0..n {
            wr[i] = xr[i] + ur[i];
            wi[i] = xi[i] + ui[i];
        }
        phi.forward_soa(&wr, &wi, &mut fr, &mut fi);
        let mut res_sq = 0.0;
        for k in 0..m {
            rr[k] = yr[k] - fr[k];
            ri[k] = yi[k] - fi[k];
            res_sq += rr[k] * rr[k] + ri[k] * ri[k];
        }
        let res = res_sq.sqrt();

        let mut dual_sq = 0.0;
        if res > eps {
            let pull = 1.0 - eps / res;
            for k in 0..m {
                rr[k] *= pull;
                ri[k] *= pull;
            }
            phi.adjoint_soa(&rr, &ri, &mut tr, &mut ti);
            for i in 0..n {
                let znr = wr[i] + tr[i] * inv_n;
                let zni = wi[i] + ti[i] * inv_n;
                let dr = znr - zr[i];
                let di = zni - zi[i];
                dual_sq += dr * dr + di * di;
                zr[i] = znr;
                zi[i] = zni;
            }
        } else {
            for i in 0..n {
                let dr = wr[i] - zr[i];
                let di = wi[i] - zi[i];
                dual_sq += dr * dr + di * di;
                zr[i] = wr[i];
                zi[i] = wi[i];
            }
        }

        // Multiplier step plus the norms the stopping rule needs.
        let mut pri_sq = 0.0;
        let mut x_sq = 0.0;
        let mut z_sq = 0.0;
        let mut u_sq = 0.0;
        for i in 0..n {
            let dr = xr[i] - zr[i];
            let di = xi[i] - zi[i];
            pri_sq += dr * dr + di * di;
            ur[i] += dr;
            ui[i] += di;
            x_sq += xr[i] * xr[i] + xi[i] * xi[i];
            z_sq += zr[i] * zr[i] + zi[i] * zi[i];
            u_sq += ur[i] * ur[i] + ui[i] * ui[i];
        }
        let pri = pri_sq.sqrt();
        let dual = rho * dual_sq.sqrt();
        if pri <= settings.primal_tol * x_sq.max(z_sq).sqrt()
            && dual <= settings.dual_tol * rho * u_sq.sqrt()
        {
            converged = true;
            break;
        }
        // Residual balancing keeps the two residuals within an order of
        // magnitude of each other; the scaled multiplier compensates.
        if pri > 10.0 * dual {
            rho *= 2.0;
            for v in ur.iter_mut().chain(ui.iter_mut()) {
                *v *= 0.5;
            }
        } else if dual > 10.0 * pri {
            rho *= 0.5;
            for v in ur.iter_mut().chain(ui.iter_mut()) {
                *v *= 2.0;
            }
        }
    }

    let coefficients = crate::model::join_complex(&zr, &zi);
    let support: Vec<usize> =
        (0..n).filter(|&i| coefficients[i].norm_sqr() > 0.0).collect();
    phi.forward_soa(&zr, &zi, &mut fr, &mut fi);
    let mut res_sq = 0.0;
    for k in 0..m {
        let dr = yr[k] - fr[k];
        let di = yi[k] - fi[k];
        res_sq += dr * dr + di * di;
    }
    let mut flags = Vec::new();
    if !converged {
        flags.push(SolverFlag::Unconverged);
    }
    Ok(RecoveredSignal { coefficients, support, residual_norm: res_sq.sqrt(), flags })
}
