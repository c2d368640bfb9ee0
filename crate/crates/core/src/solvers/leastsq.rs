//! Complex least squares on column subsets of the sensing matrix.
//!
//! Supports are small (tens of columns against `m` in the low hundreds), so
//! a dense Householder QR of the gathered column submatrix is both the
//! simplest and the fastest adequate tool. Two extras matter here:
//!
//! * Sub-Rayleigh supports can be numerically rank deficient (adjacent
//!   fine-grid columns are almost parallel). Rank collapse is detected from
//!   the R diagonal and resolved by the least-norm solution via an
//!   eigendecomposition of the Gram matrix, with a warning flag.
//! * Local optimization scans hundreds of candidate supports that share all
//!   but one column. [`TailScanner`] factors the shared columns once and
//!   prices each candidate in `O(m·k)` by appending a single column to the
//!   factorization.

use num_complex::Complex64;

use crate::model::SensingMatrix;
use crate::solvers::{RecoveredSignal, SolverError, SolverFlag};

/// `|R_jj|` below this fraction of the largest diagonal marks the column
/// submatrix as numerically rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Eigenvalues below this fraction of the largest are treated as zero when
/// forming the pseudoinverse in the least-norm fallback.
const PINV_TOL: f64 = 1e-12;

// ── Householder QR ──────────────────────────────────────────────────────

/// In-place Householder QR of an `m×k` complex matrix (column-major).
///
/// After construction, column `j` holds `R[0..j][j]` in its head and the
/// reflector vector `u_j` from row `j` down; `R[j][j]` lives in `diag`.
pub(crate) struct QrFactor {
    m: usize,
    k: usize,
    cols: Vec<Complex64>,
    /// `2 / ‖u_j‖²` per reflector; `0.0` means identity (zero column tail).
    coef: Vec<f64>,
    diag: Vec<Complex64>,
}

impl QrFactor {
    /// Factor the matrix given as column-major storage (consumed).
    pub(crate) fn new(mut cols: Vec<Complex64>, m: usize, k: usize) -> Self {
        assert_eq!(cols.len(), m * k);
        assert!(k <= m, "QR expects at least as many rows as columns");
        let mut coef = vec![0.0; k];
        let mut diag = vec![Complex64::default(); k];
        for j in 0..k {
            // Build the reflector from rows j.. of column j.
            let (head, tail) = cols.split_at_mut(j * m);
            let _ = head;
            let col_j = &mut tail[..m];
            let xnorm_sq: f64 = col_j[j..].iter().map(|c| c.norm_sqr()).sum();
            let xnorm = xnorm_sq.sqrt();
            if xnorm == 0.0 {
                coef[j] = 0.0;
                diag[j] = Complex64::default();
                continue;
            }
            let x0 = col_j[j];
            let x0_abs = x0.norm();
            let phase = if x0_abs > 0.0 { x0 / x0_abs } else { Complex64::new(1.0, 0.0) };
            let beta = -phase * xnorm;
            diag[j] = beta;
            // u = x − β·e₁; ‖u‖² = 2·xnorm·(xnorm + |x0|), no cancellation.
            col_j[j] = x0 - beta;
            let c = 1.0 / (xnorm * (xnorm + x0_abs));
            coef[j] = c;

            // Apply H_j = I − c·u u* to the remaining columns.
            let (done, rest) = tail.split_at_mut(m);
            let u = &done[j..];
            for col in rest.chunks_exact_mut(m) {
                let seg = &mut col[j..];
                let w: Complex64 =
                    u.iter().zip(seg.iter()).map(|(&ui, &ci)| ui.conj() * ci).sum();
                let wc = w * c;
                for (ui, ci) in u.iter().zip(seg.iter_mut()) {
                    *ci -= wc * ui;
                }
            }
        }
        QrFactor { m, k, cols, coef, diag }
    }

    /// Apply `Q* = H_{k−1}···H_0` to a full-length vector in place.
    pub(crate) fn apply_q_star(&self, v: &mut [Complex64]) {
        debug_assert_eq!(v.len(), self.m);
        for j in 0..self.k {
            let c = self.coef[j];
            if c == 0.0 {
                continue;
            }
            let u = &self.cols[j * self.m + j..(j + 1) * self.m];
            let seg = &mut v[j..];
            let w: Complex64 = u.iter().zip(seg.iter()).map(|(&ui, &vi)| ui.conj() * vi).sum();
            let wc = w * c;
            for (ui, vi) in u.iter().zip(seg.iter_mut()) {
                *vi -= wc * ui;
            }
        }
    }

    /// Smallest and largest `|R_jj|`.
    pub(crate) fn diag_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for d in &self.diag {
            let a = d.norm();
            lo = lo.min(a);
            hi = hi.max(a);
        }
        (lo, hi)
    }

    /// Solve `R c = rhs[0..k]` by back substitution.
    pub(crate) fn solve_upper(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let k = self.k;
        let mut c = rhs[..k].to_vec();
        for j in (0..k).rev() {
            for i in (j + 1)..k {
                let r_ji = self.cols[i * self.m + j];
                c[j] = c[j] - r_ji * c[i];
            }
            c[j] /= self.diag[j];
        }
        c
    }

    pub(crate) fn k(&self) -> usize {
        self.k
    }
}

fn gather_columns(phi: &SensingMatrix, support: &[usize]) -> Vec<Complex64> {
    let m = phi.m();
    let mut cols = vec![Complex64::default(); m * support.len()];
    for (j, &idx) in support.iter().enumerate() {
        phi.column_into(idx, &mut cols[j * m..(j + 1) * m]);
    }
    cols
}

/// Residual `y − Φ_S c` computed column-wise (cost `O(m·k)`).
fn residual_on_support(
    phi: &SensingMatrix,
    y: &[Complex64],
    support: &[usize],
    coeffs: &[Complex64],
) -> (Vec<Complex64>, f64) {
    let mut r = y.to_vec();
    let mut col = vec![Complex64::default(); phi.m()];
    for (&idx, &c) in support.iter().zip(coeffs) {
        phi.column_into(idx, &mut col);
        for (ri, &ai) in r.iter_mut().zip(&col) {
            *ri -= c * ai;
        }
    }
    let norm = crate::l2_norm(&r);
    (r, norm)
}

// ── public least squares ────────────────────────────────────────────────

/// Output of a support-restricted least-squares solve, before scattering to
/// a dense vector.
pub(crate) struct LsFit {
    pub coeffs: Vec<Complex64>,
    pub residual: Vec<Complex64>,
    pub residual_norm: f64,
    pub fallback: bool,
}

/// Minimize `‖Φ_S c − y‖₂`; on numerical rank deficiency fall back to the
/// least-norm minimizer.
pub(crate) fn ls_fit(
    phi: &SensingMatrix,
    y: &[Complex64],
    support: &[usize],
) -> Result<LsFit, SolverError> {
    let m = phi.m();
    let k = support.len();
    if k > m {
        return Err(SolverError::SupportTooLarge { size: k, m });
    }
    if k == 0 {
        return Ok(LsFit {
            coeffs: Vec::new(),
            residual: y.to_vec(),
            residual_norm: crate::l2_norm(y),
            fallback: false,
        });
    }
    debug_assert!(support.windows(2).all(|w| w[0] < w[1]), "support must be sorted unique");

    let qr = QrFactor::new(gather_columns(phi, support), m, k);
    let (lo, hi) = qr.diag_range();
    if hi > 0.0 && lo > RANK_TOL * hi {
        let mut yt = y.to_vec();
        qr.apply_q_star(&mut yt);
        let coeffs = qr.solve_upper(&yt);
        let (residual, residual_norm) = residual_on_support(phi, y, support, &coeffs);
        return Ok(LsFit { coeffs, residual, residual_norm, fallback: false });
    }

    // Rank-deficient: least-norm solution c = G⁺ Φ_S* y via the Gram matrix.
    let cols = gather_columns(phi, support);
    let mut gram = vec![Complex64::default(); k * k];
    for a in 0..k {
        for b in 0..k {
            let s: Complex64 = cols[a * m..(a + 1) * m]
                .iter()
                .zip(&cols[b * m..(b + 1) * m])
                .map(|(&p, &q)| p.conj() * q)
                .sum();
            gram[a * k + b] = s;
        }
    }
    let rhs: Vec<Complex64> = (0..k)
        .map(|a| {
            cols[a * m..(a + 1) * m]
                .iter()
                .zip(y)
                .map(|(&p, &q)| p.conj() * q)
                .sum()
        })
        .collect();
    let (eigvals, eigvecs) = jacobi_hermitian_eigen(gram, k);
    let lambda_max = eigvals.iter().cloned().fold(0.0, f64::max);
    let mut coeffs = vec![Complex64::default(); k];
    if lambda_max > 0.0 {
        // c = V·diag(1/λ over the numerical range space)·V*·rhs
        for e in 0..k {
            if eigvals[e] <= PINV_TOL * lambda_max {
                continue;
            }
            let v_e = &eigvecs[e * k..(e + 1) * k];
            let proj: Complex64 = v_e.iter().zip(&rhs).map(|(&v, &b)| v.conj() * b).sum();
            let scale = proj / eigvals[e];
            for (ci, &vi) in coeffs.iter_mut().zip(v_e) {
                *ci += scale * vi;
            }
        }
    }
    let (residual, residual_norm) = residual_on_support(phi, y, support, &coeffs);
    Ok(LsFit { coeffs, residual, residual_norm, fallback: true })
}

/// Least squares restricted to a support set, as a dense recovered signal.
pub fn least_squares_on_support(
    phi: &SensingMatrix,
    y: &[Complex64],
    support: &[usize],
) -> Result<RecoveredSignal, SolverError> {
    validate_support(support, phi.n())?;
    let fit = ls_fit(phi, y, support)?;
    let mut coefficients = vec![Complex64::default(); phi.n()];
    for (&idx, &c) in support.iter().zip(&fit.coeffs) {
        coefficients[idx] = c;
    }
    let mut flags = Vec::new();
    if fit.fallback {
        flags.push(SolverFlag::LeastNormFallback);
    }
    Ok(RecoveredSignal {
        coefficients,
        support: support.to_vec(),
        residual_norm: fit.residual_norm,
        flags,
    })
}

pub(crate) fn validate_support(support: &[usize], n: usize) -> Result<(), SolverError> {
    let sorted_unique = support.windows(2).all(|w| w[0] < w[1]);
    let in_range = support.iter().all(|&i| i < n);
    if !sorted_unique || !in_range {
        return Err(SolverError::InvalidSupport);
    }
    Ok(())
}

// ── incremental candidate scanning ──────────────────────────────────────

/// Prices supports of the form `B ∪ {j}` against a fixed base `B`.
///
/// The base columns are factored once; each candidate costs one reflector
/// sweep. With `Q*a_j` split at row `|B|` into head and tail, the exact
/// least-squares residual of the augmented support is
/// `‖ỹ_tail‖² − |⟨ã_tail, ỹ_tail⟩|²/‖ã_tail‖²`.
pub(crate) struct TailScanner {
    qr: QrFactor,
    y_t: Vec<Complex64>,
    base_tail_sq: f64,
    col_buf: Vec<Complex64>,
}

impl TailScanner {
    pub(crate) fn new(phi: &SensingMatrix, y: &[Complex64], base: &[usize]) -> Self {
        let m = phi.m();
        let qr = QrFactor::new(gather_columns(phi, base), m, base.len());
        let mut y_t = y.to_vec();
        qr.apply_q_star(&mut y_t);
        let base_tail_sq: f64 = y_t[base.len()..].iter().map(|c| c.norm_sqr()).sum();
        TailScanner { qr, y_t, base_tail_sq, col_buf: vec![Complex64::default(); m] }
    }

    /// Least-squares residual² of `base ∪ {j}`. For `j` already in the span
    /// of the base (including `j ∈ base`), this degrades gracefully to the
    /// base residual².
    pub(crate) fn candidate_residual_sq(&mut self, phi: &SensingMatrix, j: usize) -> f64 {
        phi.column_into(j, &mut self.col_buf);
        self.qr.apply_q_star(&mut self.col_buf);
        let kb = self.qr.k();
        let tail_a = &self.col_buf[kb..];
        let tail_y = &self.y_t[kb..];
        let den: f64 = tail_a.iter().map(|c| c.norm_sqr()).sum();
        // Sensing columns have norm² = m. A tail this far below that is
        // roundoff from the reflector sweep, not signal: the candidate is
        // numerically in the base span and dividing by `den` would project
        // `ỹ_tail` onto a noise direction. Report no gain instead.
        if den <= self.col_buf.len() as f64 * 1e-24 {
            return self.base_tail_sq;
        }
        let num: Complex64 =
            tail_a.iter().zip(tail_y).map(|(&a, &b)| a.conj() * b).sum();
        // Cauchy–Schwarz keeps num²/den ≤ base_tail_sq, so the clamp only
        // absorbs roundoff.
        (self.base_tail_sq - num.norm_sqr() / den).max(0.0)
    }
}

// ── Hermitian Jacobi eigensolver ────────────────────────────────────────

/// Eigendecomposition of a Hermitian `k×k` matrix (row-major) by cyclic
/// Jacobi rotations. Returns eigenvalues and row-major eigenvectors
/// (eigenvector `e` occupies `out[e*k..(e+1)*k]`). Sizes here are tiny, so
/// robustness beats speed.
pub(crate) fn jacobi_hermitian_eigen(
    mut g: Vec<Complex64>,
    k: usize,
) -> (Vec<f64>, Vec<Complex64>) {
    assert_eq!(g.len(), k * k);
    // v starts as the identity; columns accumulate the rotations.
    let mut v = vec![Complex64::default(); k * k];
    for i in 0..k {
        v[i * k + i] = Complex64::new(1.0, 0.0);
    }
    let fro_sq: f64 = g.iter().map(|c| c.norm_sqr()).sum();
    let stop = (fro_sq * 1e-30).max(f64::MIN_POSITIVE);

    for _sweep in 0..64 {
        let mut off_sq = 0.0;
        for p in 0..k {
            for q in (p + 1)..k {
                off_sq += g[p * k + q].norm_sqr();
            }
        }
        if off_sq <= stop {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let gpq = g[p * k + q];
                let abs_g = gpq.norm();
                if abs_g == 0.0 {
                    continue;
                }
                // Reduce to the real 2×2 case by factoring out the phase of
                // g_pq, then apply a classical Jacobi rotation.
                let u = gpq / abs_g;
                let a = g[p * k + p].re;
                let b = g[q * k + q].re;
                let tau = (b - a) / (2.0 * abs_g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Column rotation: (col_p, col_q) ← (c·col_p − s·ū·col_q,
                //                                    s·u·col_p + c·col_q)
                let rot = |xp: Complex64, xq: Complex64| -> (Complex64, Complex64) {
                    (xp * c - xq * u.conj() * s, xp * u * s + xq * c)
                };
                for r in 0..k {
                    let (gp, gq) = rot(g[r * k + p], g[r * k + q]);
                    g[r * k + p] = gp;
                    g[r * k + q] = gq;
                }
                for rcol in 0..k {
                    let (gp, gq) = rot(g[p * k + rcol].conj(), g[q * k + rcol].conj());
                    g[p * k + rcol] = gp.conj();
                    g[q * k + rcol] = gq.conj();
                }
                for r in 0..k {
                    let (vp, vq) = rot(v[r * k + p], v[r * k + q]);
                    v[r * k + p] = vp;
                    v[r * k + q] = vq;
                }
            }
        }
    }
    let eigvals: Vec<f64> = (0..k).map(|i| g[i * k + i].re).collect();
    // Transpose v so each eigenvector is contiguous.
    let mut vectors = vec![Complex64::default(); k * k];
    for e in 0..k {
        for r in 0..k {
            vectors[e * k + r] = v[r * k + e];
        }
    }
    (eigvals, vectors)
}
