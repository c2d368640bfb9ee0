//! Greedy pursuit with band exclusion and local support optimization.
//!
//! Three building blocks share the machinery here:
//!
//! * [`omp`] — classical orthogonal matching pursuit;
//! * [`local_optimization`] — one ascending pass over a support, testing a
//!   band of replacements for each element and keeping the best; the exact
//!   least-squares residual never increases across steps;
//! * [`bloomp`] — OMP with candidates inside the bands of already-selected
//!   indices excluded, plus a local optimization after every selection;
//! * [`blot`] — band-restricted thresholding of a dense input (typically a
//!   basis-pursuit solution) followed by local optimization and debiasing.
//!
//! Every argmax scans indices in ascending order with strict comparison, so
//! ties resolve to the lowest index and runs are reproducible.

use num_complex::Complex64;

use crate::bands::{band, band_mask, BandRadius};
use crate::model::SensingMatrix;
use crate::solvers::leastsq::{ls_fit, validate_support, TailScanner};
use crate::solvers::{RecoveredSignal, SolverError, SolverFlag};

/// Residuals below this fraction of `‖y‖` stop a pursuit early: the data is
/// explained to working precision and further selections would fit noise in
/// the last bits.
const EARLY_EXIT_REL: f64 = 1e-12;

fn check_sparsity(s: usize, m: usize) -> Result<(), SolverError> {
    if s == 0 || s > m {
        return Err(SolverError::InvalidSparsity { m });
    }
    Ok(())
}

fn check_radius(r: BandRadius) -> Result<(), SolverError> {
    if r.fine() == 0 {
        return Err(SolverError::InvalidSettings(
            "band radius of zero fine-grid steps excludes nothing".into(),
        ));
    }
    Ok(())
}

/// Index of the largest-magnitude score, ascending scan (ties → lowest
/// index). `admit` filters the candidate set.
fn argmax_score(scores: &[Complex64], mut admit: impl FnMut(usize) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in scores.iter().enumerate() {
        if !admit(i) {
            continue;
        }
        let mag = c.norm_sqr();
        match best {
            Some((_, b)) if mag <= b => {}
            _ => best = Some((i, mag)),
        }
    }
    best.map(|(i, _)| i)
}

fn zero_signal(n: usize, y_norm: f64) -> RecoveredSignal {
    RecoveredSignal {
        coefficients: vec![Complex64::default(); n],
        support: Vec::new(),
        residual_norm: y_norm,
        flags: Vec::new(),
    }
}

fn signal_from_fit(
    n: usize,
    support: &[usize],
    fit: crate::solvers::leastsq::LsFit,
) -> RecoveredSignal {
    let mut coefficients = vec![Complex64::default(); n];
    for (&idx, &c) in support.iter().zip(&fit.coeffs) {
        coefficients[idx] = c;
    }
    let mut flags = Vec::new();
    if fit.fallback {
        flags.push(SolverFlag::LeastNormFallback);
    }
    RecoveredSignal {
        coefficients,
        support: support.to_vec(),
        residual_norm: fit.residual_norm,
        flags,
    }
}

// ── orthogonal matching pursuit ─────────────────────────────────────────

/// Orthogonal matching pursuit: `s` rounds of picking the grid index most
/// correlated with the residual, each followed by a least-squares refit on
/// the accumulated support.
pub fn omp(
    phi: &SensingMatrix,
    y: &[Complex64],
    s: usize,
) -> Result<RecoveredSignal, SolverError> {
    check_sparsity(s, phi.m())?;
    let y_norm = crate::l2_norm(y);
    if y_norm == 0.0 {
        return Ok(zero_signal(phi.n(), 0.0));
    }
    let mut support: Vec<usize> = Vec::with_capacity(s);
    let mut residual = y.to_vec();
    let mut fit = ls_fit(phi, y, &support)?;
    let mut fell_back = false;
    for _ in 0..s {
        let scores = phi.adjoint(&residual);
        let pick = argmax_score(&scores, |i| !support.contains(&i))
            .expect("nonempty grid always offers a candidate");
        let at = support.partition_point(|&j| j < pick);
        support.insert(at, pick);
        fit = ls_fit(phi, y, &support)?;
        fell_back |= fit.fallback;
        residual.copy_from_slice(&fit.residual);
        if fit.residual_norm < EARLY_EXIT_REL * y_norm {
            break;
        }
    }
    let mut out = signal_from_fit(phi.n(), &support, fit);
    if fell_back {
        out.push_flag(SolverFlag::LeastNormFallback);
    }
    Ok(out)
}

// ── local optimization ──────────────────────────────────────────────────

/// Result of a local-optimization pass: the improved support and the exact
/// least-squares residual after each step (`trail[0]` is the starting
/// residual, so the trail has one more entry than the input support).
#[derive(Debug, Clone)]
pub struct LocalOptOutcome {
    pub support: Vec<usize>,
    pub residual_trail: Vec<f64>,
}

/// One ascending pass over `s0`: for each element, try every replacement in
/// its band (holding the rest of the support fixed) and keep the candidate
/// with the smallest least-squares residual.
///
/// Candidates are priced with an incremental factorization, but a winning
/// swap is accepted only if its exactly recomputed residual does not exceed
/// the current one — so the trail is non-increasing in floating point, not
/// just in exact arithmetic.
pub fn local_optimization(
    phi: &SensingMatrix,
    y: &[Complex64],
    s0: &[usize],
    radius: BandRadius,
) -> Result<LocalOptOutcome, SolverError> {
    check_radius(radius)?;
    validate_support(s0, phi.n())?;
    if s0.is_empty() {
        return Err(SolverError::EmptyStartSupport);
    }
    if s0.len() > phi.m() {
        return Err(SolverError::SupportTooLarge { size: s0.len(), m: phi.m() });
    }
    let n = phi.n();
    let mut support = s0.to_vec();
    let mut current = ls_fit(phi, y, &support)?.residual_norm;
    let mut trail = Vec::with_capacity(s0.len() + 1);
    trail.push(current);

    for &center in s0 {
        // The element may have been displaced by an earlier swap in this
        // same pass; if so there is nothing to move.
        let Ok(pos) = support.binary_search(&center) else {
            trail.push(current);
            continue;
        };
        let mut base = support.clone();
        base.remove(pos);
        let mut scanner = TailScanner::new(phi, y, &base);
        let mut best_j = center;
        let mut best_sq = f64::INFINITY;
        for j in band(center, radius, n) {
            let r_sq = scanner.candidate_residual_sq(phi, j);
            if r_sq < best_sq {
                best_sq = r_sq;
                best_j = j;
            }
        }
        if best_j != center {
            let mut candidate = base;
            if let Err(at) = candidate.binary_search(&best_j) {
                candidate.insert(at, best_j);
            }
            let exact = ls_fit(phi, y, &candidate)?.residual_norm;
            // Guard against incremental-pricing roundoff: only accept a swap
            // the exact refit confirms.
            if exact <= current {
                support = candidate;
                current = exact;
            }
        }
        trail.push(current);
    }
    Ok(LocalOptOutcome { support, residual_trail: trail })
}

/// Repeated [`local_optimization`] passes until the support reaches a fixed
/// point (no element moves in a full pass). Opt-in: the pursuits below use
/// the single-pass form, which is the documented default everywhere.
///
/// Termination: every accepted swap either lowers the residual or moves to
/// a lower index at equal residual, so passes cannot cycle. The `max_passes`
/// cap (32) is a safety net; hitting it returns the latest support.
pub fn local_optimization_until_stable(
    phi: &SensingMatrix,
    y: &[Complex64],
    s0: &[usize],
    radius: BandRadius,
) -> Result<LocalOptOutcome, SolverError> {
    const MAX_PASSES: usize = 32;
    let mut support = s0.to_vec();
    let mut trail: Vec<f64> = Vec::new();
    for pass in 0..MAX_PASSES {
        let out = local_optimization(phi, y, &support, radius)?;
        if pass == 0 {
            trail.extend_from_slice(&out.residual_trail);
        } else {
            trail.extend_from_slice(&out.residual_trail[1..]);
        }
        let stable = out.support == support;
        support = out.support;
        if stable {
            break;
        }
    }
    Ok(LocalOptOutcome { support, residual_trail: trail })
}

// ── band-excluded OMP with local optimization ───────────────────────────

/// Band-excluded orthogonal matching pursuit with local optimization: each
/// round picks the best-correlated index *outside* the bands of the current
/// support, then re-optimizes the whole support locally and refits.
///
/// Errors with [`SolverError::SelectionPoolExhausted`] if the bands of the
/// selected indices cover the entire grid before `s` selections are made.
pub fn bloomp(
    phi: &SensingMatrix,
    y: &[Complex64],
    s: usize,
    radius: BandRadius,
) -> Result<RecoveredSignal, SolverError> {
    check_sparsity(s, phi.m())?;
    check_radius(radius)?;
    let n = phi.n();
    let y_norm = crate::l2_norm(y);
    if y_norm == 0.0 {
        return Ok(zero_signal(n, 0.0));
    }
    let mut support: Vec<usize> = Vec::new();
    let mut residual = y.to_vec();
    let mut fit = ls_fit(phi, y, &support)?;
    let mut fell_back = false;
    for round in 0..s {
        let scores = phi.adjoint(&residual);
        let mask = band_mask(&support, radius, n);
        let Some(pick) = argmax_score(&scores, |i| !mask[i]) else {
            return Err(SolverError::SelectionPoolExhausted { selected: round, requested: s });
        };
        let at = support.partition_point(|&j| j < pick);
        support.insert(at, pick);
        support = local_optimization(phi, y, &support, radius)?.support;
        fit = ls_fit(phi, y, &support)?;
        fell_back |= fit.fallback;
        residual.copy_from_slice(&fit.residual);
        if fit.residual_norm < EARLY_EXIT_REL * y_norm {
            break;
        }
    }
    let mut out = signal_from_fit(n, &support, fit);
    if fell_back {
        out.push_flag(SolverFlag::LeastNormFallback);
    }
    Ok(out)
}

// ── band-restricted thresholding ────────────────────────────────────────

/// Band-restricted thresholding: distill a dense coefficient vector down to
/// at most `s` spikes by repeatedly taking the largest remaining magnitude
/// outside the bands of previous picks, then locally optimize the support
/// and debias with a least-squares refit against `y`.
///
/// If the bands exhaust all nonzero candidates early, the support is padded
/// with the largest remaining magnitudes regardless of band and the result
/// is flagged [`SolverFlag::BandPadded`].
pub fn blot(
    x_in: &[Complex64],
    phi: &SensingMatrix,
    y: &[Complex64],
    s: usize,
    radius: BandRadius,
) -> Result<RecoveredSignal, SolverError> {
    check_sparsity(s, phi.m())?;
    check_radius(radius)?;
    let n = phi.n();
    if x_in.len() != n {
        return Err(SolverError::InvalidSettings(format!(
            "input vector has length {} but the fine grid has {} points",
            x_in.len(),
            n
        )));
    }
    let mut banned = vec![false; n];
    let mut selected: Vec<usize> = Vec::with_capacity(s);
    let mut padded = false;
    for _ in 0..s {
        let pick =
            argmax_score(x_in, |i| !banned[i] && x_in[i].norm_sqr() > 0.0);
        match pick {
            Some(j) => {
                selected.push(j);
                for slot in &mut banned[band(j, radius, n)] {
                    *slot = true;
                }
            }
            None => {
                // Out-of-band candidates are exhausted; fall back to the
                // largest magnitudes still unselected, bands ignored.
                let Some(j) = argmax_score(x_in, |i| {
                    x_in[i].norm_sqr() > 0.0 && !selected.contains(&i)
                }) else {
                    break;
                };
                padded = true;
                selected.push(j);
            }
        }
    }
    selected.sort_unstable();
    let support = if selected.is_empty() {
        selected
    } else {
        local_optimization(phi, y, &selected, radius)?.support
    };
    let fit = ls_fit(phi, y, &support)?;
    let mut out = signal_from_fit(n, &support, fit);
    if padded {
        out.push_flag(SolverFlag::BandPadded);
    }
    Ok(out)
}

/// Basis-pursuit denoising followed by [`blot`]: solve for a dense minimum-ℓ¹
/// coefficient vector, then distill it to `s` spikes. Flags from both stages
/// are merged.
pub fn bp_blot(
    phi: &SensingMatrix,
    y: &[Complex64],
    s: usize,
    radius: BandRadius,
    settings: &crate::solvers::BpdnSettings,
) -> Result<RecoveredSignal, SolverError> {
    let dense = crate::solvers::bpdn(phi, y, settings)?;
    let mut out = blot(&dense.coefficients, phi, y, s, radius)?;
    for &flag in &dense.flags {
        out.push_flag(flag);
    }
    Ok(out)
}
