//! Instances: grids, spike trains, partial Fourier sensing, noisy data.
//!
//! The signal domain is the unit interval sampled at `N = m·F` fine-grid
//! points. A spike train is a sparse complex vector on that grid. The data
//! are its `m` lowest discrete Fourier modes plus noise, so the sensing
//! matrix is the first `m` rows of the `N`-point DFT matrix. All lengths in
//! this crate are quoted in units of the Rayleigh length `ℓ = 1/m`, the
//! classical resolution limit; one `ℓ` spans exactly `F` fine-grid steps.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::l2_norm;

/// Hard cap on `m·N` for dense sensing-matrix storage (~1 GiB of entries).
pub const MAX_DENSE_ENTRIES: usize = 1 << 26;

/// Errors from instance construction and measurement.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("grid must have m ≥ 1 and F ≥ 1 (got m={m}, f={f})")]
    InvalidGrid { m: usize, f: usize },
    #[error("dense sensing matrix needs {entries} entries, above the cap {max}")]
    InstanceTooLarge { entries: usize, max: usize },
    #[error("cannot place {s} spikes with min separation {min_sep}ℓ on a grid of {extent}ℓ")]
    InfeasiblePacking { s: usize, min_sep: f64, extent: f64 },
    #[error("spike train invalid: {0}")]
    InvalidSpikes(String),
    #[error("amplitude model invalid: magnitude range [{lo}, {hi}] must satisfy 0 < lo ≤ hi")]
    InvalidAmplitudeModel { lo: f64, hi: f64 },
    #[error("snr must be positive (or infinite); got {0}")]
    InvalidSnr(f64),
    #[error("cannot set a noise scale for an all-zero signal at finite snr")]
    ZeroSignalNoise,
}

// ── grid ────────────────────────────────────────────────────────────────

/// Measurement/reconstruction grid geometry.
///
/// `m` Fourier modes are observed; the reconstruction grid has `N = m·F`
/// points, i.e. `F` points per Rayleigh length `ℓ = 1/m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    m: usize,
    f: usize,
}

impl GridSpec {
    pub fn new(m: usize, f: usize) -> Result<Self, ModelError> {
        if m < 1 || f < 1 {
            return Err(ModelError::InvalidGrid { m, f });
        }
        Ok(GridSpec { m, f })
    }

    /// Number of observed Fourier modes (matrix rows).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Super-resolution factor: fine-grid points per Rayleigh length.
    pub fn f(&self) -> usize {
        self.f
    }

    /// Fine-grid size `N = m·F`.
    pub fn n(&self) -> usize {
        self.m * self.f
    }

    /// Rayleigh length `ℓ = 1/m` in signal-domain units.
    pub fn ell(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Fine-grid spacing `1/N` in signal-domain units.
    pub fn fine_spacing(&self) -> f64 {
        1.0 / self.n() as f64
    }

    /// Convert a position in `ℓ` units to the nearest fine-grid index
    /// (round half up). Positions must lie in `[0, m)` ℓ.
    pub fn snap_to_grid(&self, position_ell: f64) -> Option<usize> {
        if !position_ell.is_finite() || position_ell < 0.0 {
            return None;
        }
        let idx = (position_ell * self.f as f64 + 0.5).floor() as usize;
        (idx < self.n()).then_some(idx)
    }
}

// ── spike train ─────────────────────────────────────────────────────────

/// A sparse complex signal: nonzero amplitudes at strictly increasing
/// fine-grid indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    grid: GridSpec,
    entries: Vec<(usize, Complex64)>,
}

impl SpikeTrain {
    pub fn new(grid: GridSpec, entries: Vec<(usize, Complex64)>) -> Result<Self, ModelError> {
        for window in entries.windows(2) {
            if window[0].0 >= window[1].0 {
                return Err(ModelError::InvalidSpikes(format!(
                    "indices must be strictly increasing (got {} then {})",
                    window[0].0, window[1].0
                )));
            }
        }
        for &(idx, amp) in &entries {
            if idx >= grid.n() {
                return Err(ModelError::InvalidSpikes(format!(
                    "index {idx} out of range for N={}",
                    grid.n()
                )));
            }
            if amp.norm_sqr() == 0.0 || !amp.is_finite() {
                return Err(ModelError::InvalidSpikes(format!(
                    "amplitude at index {idx} must be nonzero and finite"
                )));
            }
        }
        Ok(SpikeTrain { grid, entries })
    }

    /// Build from positions in `ℓ` units (snapped to the fine grid) and
    /// per-spike amplitudes. Positions must be sorted and remain distinct
    /// after snapping.
    pub fn from_positions_ell(
        grid: GridSpec,
        positions_ell: &[f64],
        amplitudes: &[Complex64],
    ) -> Result<Self, ModelError> {
        if positions_ell.len() != amplitudes.len() {
            return Err(ModelError::InvalidSpikes(format!(
                "{} positions but {} amplitudes",
                positions_ell.len(),
                amplitudes.len()
            )));
        }
        let mut entries = Vec::with_capacity(positions_ell.len());
        for (&p, &a) in positions_ell.iter().zip(amplitudes) {
            let idx = grid.snap_to_grid(p).ok_or_else(|| {
                ModelError::InvalidSpikes(format!("position {p}ℓ is outside [0, {}ℓ)", grid.m()))
            })?;
            entries.push((idx, a));
        }
        SpikeTrain::new(grid, entries)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn entries(&self) -> &[(usize, Complex64)] {
        &self.entries
    }

    /// Number of spikes.
    pub fn sparsity(&self) -> usize {
        self.entries.len()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.entries.iter().map(|&(i, _)| i).collect()
    }

    /// Spike positions in `ℓ` units (index / F).
    pub fn positions_ell(&self) -> Vec<f64> {
        let f = self.grid.f() as f64;
        self.entries.iter().map(|&(i, _)| i as f64 / f).collect()
    }

    /// Dense coefficient vector of length `N`.
    pub fn dense(&self) -> Vec<Complex64> {
        let mut x = vec![Complex64::default(); self.grid.n()];
        for &(i, a) in &self.entries {
            x[i] = a;
        }
        x
    }

    /// Smallest pairwise index gap, in fine-grid steps (`None` for < 2 spikes).
    pub fn min_gap_fine(&self) -> Option<usize> {
        self.entries
            .windows(2)
            .map(|w| w[1].0 - w[0].0)
            .min()
    }
}

// ── sensing matrix ──────────────────────────────────────────────────────

/// Dense `m×N` partial Fourier matrix with entries `exp(−2πi·k·l/N)`,
/// `k = 0..m−1`. Stored as separate real/imaginary planes (row-major) so the
/// hot matrix–vector kernels vectorize.
///
/// Rows are exactly orthogonal: `Φ Φ* = N·I`. Solvers lean on this identity.
pub struct SensingMatrix {
    grid: GridSpec,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl SensingMatrix {
    /// Tabulate the matrix for a grid. Entry phases are computed from the
    /// exact residue `k·l mod N`, so unit modulus and `N`-periodicity hold to
    /// machine precision.
    pub fn build(grid: GridSpec) -> Result<Self, ModelError> {
        let (m, n) = (grid.m(), grid.n());
        let entries = m
            .checked_mul(n)
            .filter(|&e| e <= MAX_DENSE_ENTRIES)
            .ok_or(ModelError::InstanceTooLarge {
                entries: m.saturating_mul(n),
                max: MAX_DENSE_ENTRIES,
            })?;

        // One period of exp(−2πi·t/N), indexed by the phase residue t.
        let mut tab_re = vec![0.0; n];
        let mut tab_im = vec![0.0; n];
        for t in 0..n {
            let (s, c) = (-2.0 * std::f64::consts::PI * t as f64 / n as f64).sin_cos();
            tab_re[t] = c;
            tab_im[t] = s;
        }

        let mut re = vec![0.0; entries];
        let mut im = vec![0.0; entries];
        for k in 0..m {
            let row = k * n;
            let mut t = 0usize; // running residue k·l mod N
            for l in 0..n {
                re[row + l] = tab_re[t];
                im[row + l] = tab_im[t];
                t += k;
                if t >= n {
                    t -= n;
                }
            }
        }
        Ok(SensingMatrix { grid, re, im })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn m(&self) -> usize {
        self.grid.m()
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn entry(&self, k: usize, l: usize) -> Complex64 {
        let idx = k * self.n() + l;
        Complex64::new(self.re[idx], self.im[idx])
    }

    /// Copy column `l` into `out` (length `m`).
    pub fn column_into(&self, l: usize, out: &mut [Complex64]) {
        let n = self.n();
        for (k, slot) in out.iter_mut().enumerate() {
            let idx = k * n + l;
            *slot = Complex64::new(self.re[idx], self.im[idx]);
        }
    }

    pub fn column(&self, l: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.m()];
        self.column_into(l, &mut out);
        out
    }

    /// `y = Φ x` for dense complex `x` of length `N`.
    pub fn forward(&self, x: &[Complex64]) -> Vec<Complex64> {
        let (xr, xi) = split_complex(x);
        let mut yr = vec![0.0; self.m()];
        let mut yi = vec![0.0; self.m()];
        self.forward_soa(&xr, &xi, &mut yr, &mut yi);
        join_complex(&yr, &yi)
    }

    /// `z = Φ* w` for `w` of length `m`.
    pub fn adjoint(&self, w: &[Complex64]) -> Vec<Complex64> {
        let (wr, wi) = split_complex(w);
        let mut zr = vec![0.0; self.n()];
        let mut zi = vec![0.0; self.n()];
        self.adjoint_soa(&wr, &wi, &mut zr, &mut zi);
        join_complex(&zr, &zi)
    }

    /// `y = Φ x` on pre-split planes. The reduction uses four fixed
    /// accumulator lanes, so results are bit-identical run to run while still
    /// vectorizing.
    pub(crate) fn forward_soa(&self, xr: &[f64], xi: &[f64], yr: &mut [f64], yi: &mut [f64]) {
        let n = self.n();
        debug_assert_eq!(xr.len(), n);
        for k in 0..self.m() {
            let ar = &self.re[k * n..(k + 1) * n];
            let ai = &self.im[k * n..(k + 1) * n];
            let (mut sr, mut si) = ([0.0f64; 4], [0.0f64; 4]);
            let chunks = n / 4;
            for c in 0..chunks {
                let base = 4 * c;
                for j in 0..4 {
                    let (pr, pi) = (ar[base + j], ai[base + j]);
                    let (qr, qi) = (xr[base + j], xi[base + j]);
                    sr[j] += pr * qr - pi * qi;
                    si[j] += pr * qi + pi * qr;
                }
            }
            let (mut tr, mut ti) = (0.0, 0.0);
            for j in 0..4 {
                tr += sr[j];
                ti += si[j];
            }
            for l in 4 * chunks..n {
                let (pr, pi) = (ar[l], ai[l]);
                let (qr, qi) = (xr[l], xi[l]);
                tr += pr * qr - pi * qi;
                ti += pr * qi + pi * qr;
            }
            yr[k] = tr;
            yi[k] = ti;
        }
    }

    /// `z = Φ* w` on pre-split planes (conjugate-transpose product).
    pub(crate) fn adjoint_soa(&self, wr: &[f64], wi: &[f64], zr: &mut [f64], zi: &mut [f64]) {
        let n = self.n();
        debug_assert_eq!(wr.len(), self.m());
        zr.fill(0.0);
        zi.fill(0.0);
        for k in 0..self.m() {
            let ar = &self.re[k * n..(k + 1) * n];
            let ai = &self.im[k * n..(k + 1) * n];
            let (cr, ci) = (wr[k], wi[k]);
            for l in 0..n {
                // conj(a)·c accumulated per column; independent elements, so
                // this loop vectorizes without reassociation.
                zr[l] += ar[l] * cr + ai[l] * ci;
                zi[l] += ar[l] * ci - ai[l] * cr;
            }
        }
    }

}

pub(crate) fn split_complex(v: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (v.iter().map(|c| c.re).collect(), v.iter().map(|c| c.im).collect())
}

pub(crate) fn join_complex(re: &[f64], im: &[f64]) -> Vec<Complex64> {
    re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect()
}

// ── amplitude and placement models ──────────────────────────────────────

/// Phase distribution for random spike amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhaseModel {
    /// Phase uniform on `[0, 2π)`.
    #[default]
    Full,
    /// Phase uniform on `(−π/2, π/2)`: every amplitude has positive real part.
    PositiveReal,
}

/// Random amplitude distribution: magnitude uniform on `mag_range`, phase per
/// [`PhaseModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeModel {
    #[serde(default = "default_mag_range")]
    pub mag_range: [f64; 2],
    #[serde(default)]
    pub phase: PhaseModel,
}

fn default_mag_range() -> [f64; 2] {
    [1.0, 2.0]
}

impl Default for AmplitudeModel {
    fn default() -> Self {
        AmplitudeModel { mag_range: default_mag_range(), phase: PhaseModel::default() }
    }
}

impl AmplitudeModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        let [lo, hi] = self.mag_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(ModelError::InvalidAmplitudeModel { lo, hi });
        }
        Ok(())
    }

    /// Draw `s` amplitudes: all magnitudes first, then all phases, so the
    /// stream layout is part of the reproducibility contract.
    pub fn sample(&self, s: usize, rng: &mut ChaCha12Rng) -> Vec<Complex64> {
        let [lo, hi] = self.mag_range;
        let mags: Vec<f64> = (0..s).map(|_| rng.gen_range(lo..=hi)).collect();
        let phases: Vec<f64> = match self.phase {
            PhaseModel::Full => (0..s)
                .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                .collect(),
            PhaseModel::PositiveReal => (0..s)
                .map(|_| {
                    rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2)
                })
                .collect(),
        };
        mags.iter()
            .zip(&phases)
            .map(|(&m, &p)| Complex64::from_polar(m, p))
            .collect()
    }
}

/// How spike positions are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    /// Uniformly random positions with a minimum pairwise separation,
    /// in `ℓ` units.
    Random { min_sep: f64 },
    /// Explicit positions in `ℓ` units.
    Explicit { positions: Vec<f64> },
}

/// Sample `s` sorted positions uniformly over `[0, extent_ell)` subject to a
/// minimum pairwise gap.
///
/// Sampling maps `s` i.i.d. uniforms on the shrunken interval
/// `[0, extent − (s−1)·gap)` through sort-then-shift, a measure-preserving
/// bijection onto the constrained configurations, so the draw is exactly
/// uniform and never needs rejection.
pub fn sample_positions_ell(
    s: usize,
    min_gap_ell: f64,
    extent_ell: f64,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<f64>, ModelError> {
    if s == 0 {
        return Ok(Vec::new());
    }
    let slack = extent_ell - (s as f64 - 1.0) * min_gap_ell;
    if !(slack > 0.0) {
        return Err(ModelError::InfeasiblePacking { s, min_sep: min_gap_ell, extent: extent_ell });
    }
    let mut u: Vec<f64> = (0..s).map(|_| rng.gen_range(0.0..slack)).collect();
    u.sort_by(|a, b| a.partial_cmp(b).expect("finite uniforms"));
    Ok(u.iter()
        .enumerate()
        .map(|(i, &v)| v + i as f64 * min_gap_ell)
        .collect())
}

/// Generate a random spike train: positions uniform with minimum separation
/// `min_sep` (in `ℓ`), amplitudes from `amplitude_model`. Deterministic in
/// `seed`.
///
/// Positions are drawn in continuous `ℓ` units and snapped to the fine grid;
/// the continuous gap is padded by one fine step so the snapped indices still
/// satisfy the separation exactly. Drawing in `ℓ` units keeps instances
/// comparable across grids: the same seed yields the same underlying
/// configuration at every `F`.
pub fn synthesize_spikes(
    grid: GridSpec,
    s: usize,
    min_sep_ell: f64,
    amplitude_model: &AmplitudeModel,
    seed: u64,
) -> Result<SpikeTrain, ModelError> {
    let mut rng = crate::harness::seeds::rng_from(seed);
    let (positions, amps) =
        sample_instance(grid.f(), grid.m(), s, min_sep_ell, amplitude_model, &mut rng)?;
    SpikeTrain::from_positions_ell(grid, &positions, &amps)
}

/// Shared draw for positions and amplitudes; `f_pad` is the coarsest factor
/// the positions must snap onto (gap padding = 1/f_pad).
pub fn sample_instance(
    f_pad: usize,
    extent_ell: usize,
    s: usize,
    min_sep_ell: f64,
    amplitude_model: &AmplitudeModel,
    rng: &mut ChaCha12Rng,
) -> Result<(Vec<f64>, Vec<Complex64>), ModelError> {
    if !(min_sep_ell > 0.0) {
        return Err(ModelError::InfeasiblePacking {
            s,
            min_sep: min_sep_ell,
            extent: extent_ell as f64,
        });
    }
    amplitude_model.validate()?;
    let gap = min_sep_ell + 1.0 / f_pad as f64;
    // Keep the last spike clear of the right edge after rounding.
    let extent = extent_ell as f64 - 0.5 / f_pad as f64;
    let positions = sample_positions_ell(s, gap, extent, rng)?;
    let amps = amplitude_model.sample(s, rng);
    Ok((positions, amps))
}

/// Generate a spike train at explicit positions (in `ℓ`), with random
/// amplitudes. Deterministic in `seed`.
pub fn synthesize_spikes_at(
    grid: GridSpec,
    positions_ell: &[f64],
    amplitude_model: &AmplitudeModel,
    seed: u64,
) -> Result<SpikeTrain, ModelError> {
    amplitude_model.validate()?;
    let mut rng = crate::harness::seeds::rng_from(seed);
    let amps = amplitude_model.sample(positions_ell.len(), &mut rng);
    SpikeTrain::from_positions_ell(grid, positions_ell, &amps)
}

// ── measurement ─────────────────────────────────────────────────────────

/// Observed data `y = Φx + e` with the realized noise norm and the SNR that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub y: Vec<Complex64>,
    pub noise_norm: f64,
    pub snr: f64,
}

/// Measure a spike train at the given SNR. The noise is i.i.d. circular
/// complex Gaussian rescaled so that `‖e‖₂ = ‖Φx‖₂ / snr` holds exactly
/// (not just in expectation); `snr = ∞` yields `e = 0` and `y = Φx`
/// bit-for-bit. Deterministic in `seed`.
pub fn measure(
    phi: &SensingMatrix,
    x: &SpikeTrain,
    snr: f64,
    seed: u64,
) -> Result<Measurement, ModelError> {
    if !(snr > 0.0) {
        return Err(ModelError::InvalidSnr(snr));
    }
    let y0 = phi.forward(&x.dense());
    if snr.is_infinite() {
        return Ok(Measurement { y: y0, noise_norm: 0.0, snr });
    }
    let signal_norm = l2_norm(&y0);
    if signal_norm == 0.0 {
        return Err(ModelError::ZeroSignalNoise);
    }
    let target = signal_norm / snr;

    let mut rng = crate::harness::seeds::rng_from(seed);
    let mut e: Vec<Complex64>;
    loop {
        e = (0..phi.m())
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        let raw = l2_norm(&e);
        if raw > 0.0 {
            let scale = target / raw;
            for c in &mut e {
                *c *= scale;
            }
            break;
        }
        // Astronomically unlikely; redraw keeps the scale well defined.
    }
    let y: Vec<Complex64> = y0.iter().zip(&e).map(|(&a, &b)| a + b).collect();
    Ok(Measurement { y, noise_norm: target, snr })
}

// ── tests ───────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(m: usize, f: usize) -> GridSpec {
        GridSpec::new(m, f).unwrap()
    }

    #[test]
    fn grid_relations_hold() {
        let g = grid(150, 50);
        assert_eq!(g.n(), 7500);
        assert_abs_diff_eq!(g.ell() / g.fine_spacing(), 50.0, epsilon = 0.0);
        assert_abs_diff_eq!(g.ell(), 1.0 / 150.0, epsilon = 0.0);
    }

    #[test]
    fn two_point_dft() {
        let phi = SensingMatrix::build(grid(2, 1)).unwrap();
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(phi.entry(0, 0), one);
        assert_eq!(phi.entry(0, 1), one);
        assert_eq!(phi.entry(1, 0), one);
        let e11 = phi.entry(1, 1);
        assert_abs_diff_eq!(e11.re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e11.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_frequency_row_and_zero_index_column_are_ones() {
        let phi = SensingMatrix::build(grid(9, 7)).unwrap();
        let one = Complex64::new(1.0, 0.0);
        for l in 0..phi.n() {
            assert_eq!(phi.entry(0, l), one);
        }
        for k in 0..phi.m() {
            assert_eq!(phi.entry(k, 0), one);
        }
    }

    #[test]
    fn entries_have_unit_modulus() {
        let phi = SensingMatrix::build(grid(31, 3)).unwrap();
        for k in 0..phi.m() {
            for l in 0..phi.n() {
                assert_abs_diff_eq!(phi.entry(k, l).norm(), 1.0, epsilon = 1e-12);
            }
        }
    }

    /// Normalized column inner products at offsets {1, F, 2F} for the
    /// 150×7500 grid, frozen from a direct-summation tabulation of the
    /// Dirichlet kernel (1/m)·Σ_k exp(−2πikΔ/N).
    #[test]
    #[allow(clippy::excessive_precision)] // frozen constants keep all digits
    fn column_coherence_matches_dirichlet_tabulation() {
        let phi = SensingMatrix::build(grid(150, 50)).unwrap();
        let inner = |l: usize, dl: usize| -> f64 {
            let (a, b) = (phi.column(l), phi.column(l + dl));
            let s: Complex64 = a.iter().zip(&b).map(|(&p, &q)| p.conj() * q).sum();
            s.norm() / phi.m() as f64
        };
        assert_abs_diff_eq!(inner(0, 1), 0.99934218546387699, epsilon = 1e-12);
        assert_abs_diff_eq!(inner(200, 1), 0.99934218546387699, epsilon = 1e-12);
        assert_abs_diff_eq!(inner(0, 50), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(inner(0, 100), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn unit_factor_matrix_is_scaled_unitary() {
        let phi = SensingMatrix::build(grid(32, 1)).unwrap();
        let m = phi.m();
        for a in 0..m {
            for b in 0..m {
                let s: Complex64 = (0..m).map(|k| phi.entry(k, a).conj() * phi.entry(k, b)).sum();
                let expect = if a == b { m as f64 } else { 0.0 };
                assert_abs_diff_eq!(s.norm(), expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn forward_and_adjoint_match_naive_products() {
        let phi = SensingMatrix::build(grid(11, 4)).unwrap();
        let mut rng = crate::harness::seeds::rng_from(7);
        let x: Vec<Complex64> = (0..phi.n())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let w: Vec<Complex64> = (0..phi.m())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();

        let y = phi.forward(&x);
        for (k, &yk) in y.iter().enumerate() {
            let naive: Complex64 = (0..phi.n()).map(|l| phi.entry(k, l) * x[l]).sum();
            assert_abs_diff_eq!((yk - naive).norm(), 0.0, epsilon = 1e-10);
        }
        let z = phi.adjoint(&w);
        for (l, &zl) in z.iter().enumerate() {
            let naive: Complex64 = (0..phi.m()).map(|k| phi.entry(k, l).conj() * w[k]).sum();
            assert_abs_diff_eq!((zl - naive).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn rows_are_orthogonal_with_norm_n() {
        // Φ Φ* = N·I underpins the basis-pursuit projection step.
        let phi = SensingMatrix::build(grid(13, 5)).unwrap();
        let n = phi.n() as f64;
        for a in 0..phi.m() {
            for b in 0..phi.m() {
                let s: Complex64 =
                    (0..phi.n()).map(|l| phi.entry(a, l) * phi.entry(b, l).conj()).sum();
                let expect = if a == b { n } else { 0.0 };
                assert_abs_diff_eq!(s.norm(), expect, epsilon = 1e-9 * n);
            }
        }
    }

    #[test]
    fn synthesized_spikes_respect_min_separation() {
        let g = grid(150, 50);
        for seed in 0..20 {
            let x = synthesize_spikes(g, 20, 4.0, &AmplitudeModel::default(), seed).unwrap();
            assert_eq!(x.sparsity(), 20);
            assert!(x.min_gap_fine().unwrap() >= 4 * 50);
            for &(_, a) in x.entries() {
                let mag = a.norm();
                assert!((1.0..=2.0).contains(&mag), "magnitude {mag} outside [1,2]");
            }
        }
    }

    #[test]
    fn single_spike_needs_no_separation() {
        let g = grid(16, 2);
        let x = synthesize_spikes(g, 1, 100.0, &AmplitudeModel::default(), 3).unwrap();
        assert_eq!(x.sparsity(), 1);
    }

    #[test]
    fn infeasible_packing_is_an_error() {
        let g = grid(16, 2);
        let err = synthesize_spikes(g, 10, 2.0, &AmplitudeModel::default(), 3).unwrap_err();
        assert!(matches!(err, ModelError::InfeasiblePacking { .. }));
    }

    #[test]
    fn explicit_positions_snap_to_expected_indices() {
        let g = grid(150, 50);
        let pos = [10.0, 10.3, 15.0, 20.0, 25.0, 25.3];
        let x = synthesize_spikes_at(g, &pos, &AmplitudeModel::default(), 1).unwrap();
        assert_eq!(x.indices(), vec![500, 515, 750, 1000, 1250, 1265]);
    }

    #[test]
    fn positive_real_phase_model_keeps_real_parts_positive() {
        let g = grid(150, 50);
        let model = AmplitudeModel { mag_range: [1.0, 2.0], phase: PhaseModel::PositiveReal };
        let x = synthesize_spikes_at(g, &[76.0, 76.5, 79.0, 80.0, 81.0], &model, 9).unwrap();
        assert!(x.entries().iter().all(|&(_, a)| a.re > 0.0));
    }

    #[test]
    fn noiseless_measurement_is_exact() {
        let g = grid(32, 4);
        let x = synthesize_spikes(g, 3, 2.0, &AmplitudeModel::default(), 5).unwrap();
        let phi = SensingMatrix::build(g).unwrap();
        let meas = measure(&phi, &x, f64::INFINITY, 11).unwrap();
        assert_eq!(meas.y, phi.forward(&x.dense()));
        assert_eq!(meas.noise_norm, 0.0);
    }

    #[test]
    fn noise_norm_hits_target_exactly() {
        let g = grid(64, 4);
        let x = synthesize_spikes(g, 5, 2.0, &AmplitudeModel::default(), 5).unwrap();
        let phi = SensingMatrix::build(g).unwrap();
        let y0 = phi.forward(&x.dense());
        for snr in [20.0, 10.0] {
            let meas = measure(&phi, &x, snr, 17).unwrap();
            let e: Vec<Complex64> = meas.y.iter().zip(&y0).map(|(&a, &b)| a - b).collect();
            assert_abs_diff_eq!(l2_norm(&e) / l2_norm(&y0), 1.0 / snr, epsilon = 1e-14);
            assert_abs_diff_eq!(meas.noise_norm, l2_norm(&y0) / snr, epsilon = 0.0);
        }
    }

    #[test]
    fn measurement_is_reproducible_and_seed_sensitive() {
        let g = grid(32, 4);
        let x = synthesize_spikes(g, 3, 2.0, &AmplitudeModel::default(), 5).unwrap();
        let phi = SensingMatrix::build(g).unwrap();
        let a = measure(&phi, &x, 20.0, 1).unwrap();
        let b = measure(&phi, &x, 20.0, 1).unwrap();
        let c = measure(&phi, &x, 20.0, 2).unwrap();
        assert_eq!(a.y, b.y);
        assert_ne!(a.y, c.y);
        // Exact rescaling makes the noise norm seed-invariant.
        assert_abs_diff_eq!(a.noise_norm, c.noise_norm, epsilon = 0.0);
    }

    #[test]
    fn zero_signal_with_finite_snr_is_an_error() {
        let g = grid(8, 2);
        // A valid spike train is never all-zero, so drive measure() with an
        // empty train instead.
        let x = SpikeTrain::new(g, vec![]).unwrap();
        let phi = SensingMatrix::build(g).unwrap();
        assert!(matches!(measure(&phi, &x, 20.0, 0), Err(ModelError::ZeroSignalNoise)));
    }

    #[test]
    fn oversized_instance_is_rejected() {
        let g = GridSpec::new(1 << 14, 1 << 13).unwrap();
        assert!(matches!(
            SensingMatrix::build(g),
            Err(ModelError::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn spike_train_validation_rejects_bad_entries() {
        let g = grid(8, 2);
        let one = Complex64::new(1.0, 0.0);
        assert!(SpikeTrain::new(g, vec![(3, one), (3, one)]).is_err());
        assert!(SpikeTrain::new(g, vec![(5, one), (3, one)]).is_err());
        assert!(SpikeTrain::new(g, vec![(16, one)]).is_err());
        assert!(SpikeTrain::new(g, vec![(3, Complex64::default())]).is_err());
    }
}
