//! Configuration-driven experiment runner.
//!
//! An experiment is a grid of cells `(trial, F, SNR)`. Within a trial, the
//! spike positions and amplitudes are drawn once — in continuous `ℓ` units,
//! so the same physical instance snaps onto every `F`'s fine grid — and all
//! algorithms see the identical measurement vector, making per-cell
//! comparisons paired. Noise is redrawn per cell from its own seed stream.
//!
//! Cells are independent and run in parallel; each row is written to a
//! pre-assigned slot, so the output order is canonical (trial-major, then
//! `F`, then SNR, then algorithm, in config order) regardless of thread
//! count. Per-row failures (e.g. a solver exhausting its candidate pool)
//! are recorded in the row itself and never abort the batch.

pub mod config;
pub mod pla;
pub mod seeds;
pub mod table;

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bands::{self, BandError, BandRadius};
use crate::metrics::{self, Kernel};
use crate::model::{self, GridSpec, ModelError, Placement, SensingMatrix, SpikeTrain};
use crate::solvers::{self, Algorithm, RecoveredSignal};
use crate::Complex64;

pub use config::{BandRadiusConfig, BpdnConfig, ExperimentConfig};
pub use pla::estimate_pla_exponent;
pub use table::{emit_results, AggregateRow, ResultRow, ResultTable, RowOutcome};

/// Default factor grid for [`sweep_superresolution_factor`] when the config
/// does not already specify a sweep.
pub const DEFAULT_SWEEP_F_GRID: [usize; 9] = [2, 5, 10, 15, 20, 25, 30, 40, 50];

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("could not parse config: {0}")]
    ConfigParse(#[from] toml::de::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Band(#[from] BandError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("power-law fit: {0}")]
    Pla(String),
    #[error("result table: {0}")]
    Table(String),
}

/// One trial's physical instance, prior to snapping onto any grid.
struct TrialInstance {
    positions_ell: Vec<f64>,
    amplitudes: Vec<Complex64>,
}

fn draw_instances(cfg: &ExperimentConfig) -> Result<Vec<TrialInstance>, HarnessError> {
    let f_pad = *cfg.f_list.iter().min().expect("validated nonempty");
    (0..cfg.trials)
        .map(|t| {
            let mut rng = seeds::rng_from(seeds::instance_seed(cfg.master_seed, t as u64));
            match &cfg.placement {
                Placement::Random { min_sep } => {
                    let (positions_ell, amplitudes) = model::sample_instance(
                        f_pad,
                        cfg.m,
                        cfg.s,
                        *min_sep,
                        &cfg.amplitude_model,
                        &mut rng,
                    )?;
                    Ok(TrialInstance { positions_ell, amplitudes })
                }
                Placement::Explicit { positions } => {
                    let amplitudes = cfg.amplitude_model.sample(cfg.s, &mut rng);
                    Ok(TrialInstance { positions_ell: positions.clone(), amplitudes })
                }
            }
        })
        .collect()
}

/// Run the experiment described by `cfg`. Deterministic end to end for a
/// fixed `(config, master_seed)` up to wall-clock runtime fields.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    cfg.validate()?;
    let instances = draw_instances(cfg)?;
    let matrices: Vec<SensingMatrix> = cfg
        .f_list
        .iter()
        .map(|&f| Ok(SensingMatrix::build(GridSpec::new(cfg.m, f)?)?))
        .collect::<Result<_, HarnessError>>()?;
    let radii: Vec<BandRadius> = match cfg.band_radius {
        BandRadiusConfig::Explicit(r) => vec![BandRadius::explicit(r); cfg.f_list.len()],
        BandRadiusConfig::Auto => cfg
            .f_list
            .iter()
            .map(|&f| Ok(bands::default_band_radius(cfg.min_separation_ell(), f)?))
            .collect::<Result<_, HarnessError>>()?,
    };

    // Canonical cell order: trial-major, then F, then SNR.
    let mut cells = Vec::with_capacity(cfg.trials * cfg.f_list.len() * cfg.snr_list.len());
    for t in 0..cfg.trials {
        for fi in 0..cfg.f_list.len() {
            for si in 0..cfg.snr_list.len() {
                cells.push((t, fi, si));
            }
        }
    }
    // Indexed parallel map keeps cell results in their slot order; the
    // flatten below is sequential, so row order never depends on timing.
    let per_cell: Vec<Vec<ResultRow>> = cells
        .par_iter()
        .map(|&(t, fi, si)| run_cell(cfg, &instances[t], &matrices[fi], radii[fi], t, fi, si))
        .collect();
    let rows: Vec<ResultRow> = per_cell.into_iter().flatten().collect();

    Ok(ResultTable {
        f_list: cfg.f_list.clone(),
        snr_list: cfg.snr_list.clone(),
        algorithms: cfg.algorithms.clone(),
        eta_list: cfg.eta_list.clone(),
        rows,
    })
}

/// Sweep over the super-resolution factor. Uses the config's `F_list` when
/// it already describes a sweep (two or more factors); otherwise substitutes
/// [`DEFAULT_SWEEP_F_GRID`].
pub fn sweep_superresolution_factor(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    if cfg.f_list.len() >= 2 {
        run_experiment(cfg)
    } else {
        let mut sweep = cfg.clone();
        sweep.f_list = DEFAULT_SWEEP_F_GRID.to_vec();
        run_experiment(&sweep)
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed())
}

/// Solve the cell's BPDN problem once; `bp` and `bp_blot` rows share it.
/// Errors are stringified so both consumers can report them.
#[allow(clippy::type_complexity)]
fn bp_shared<'c>(
    cache: &'c mut Option<(Result<RecoveredSignal, String>, Duration)>,
    cfg: &ExperimentConfig,
    phi: &SensingMatrix,
    y: &[Complex64],
    noise_norm: f64,
) -> &'c (Result<RecoveredSignal, String>, Duration) {
    if cache.is_none() {
        let settings = cfg.bpdn.settings_for_noise(noise_norm);
        let (res, dur) = timed(|| solvers::bpdn(phi, y, &settings));
        *cache = Some((res.map_err(|e| e.to_string()), dur));
    }
    cache.as_ref().expect("just filled")
}

fn run_cell(
    cfg: &ExperimentConfig,
    inst: &TrialInstance,
    phi: &SensingMatrix,
    radius: BandRadius,
    trial: usize,
    f_idx: usize,
    snr_idx: usize,
) -> Vec<ResultRow> {
    let f = cfg.f_list[f_idx];
    let snr = cfg.snr_list[snr_idx];
    let stub = |outcome: RowOutcome| ResultRow { trial, algorithm: Algorithm::Omp, f, snr, outcome };
    let all_failed = |msg: String| -> Vec<ResultRow> {
        cfg.algorithms
            .iter()
            .map(|&algorithm| ResultRow {
                algorithm,
                ..stub(RowOutcome::Failed { error: msg.clone() })
            })
            .collect()
    };

    let x = match SpikeTrain::from_positions_ell(phi.grid(), &inst.positions_ell, &inst.amplitudes)
    {
        Ok(x) => x,
        Err(e) => return all_failed(e.to_string()),
    };
    let seed = seeds::noise_seed(cfg.master_seed, trial as u64, f_idx as u64, snr_idx as u64);
    let meas = match model::measure(phi, &x, snr, seed) {
        Ok(m) => m,
        Err(e) => return all_failed(e.to_string()),
    };
    let x_dense = x.dense();
    let x_support = x.indices();

    let mut bp_cache: Option<(Result<RecoveredSignal, String>, Duration)> = None;
    let mut rows = Vec::with_capacity(cfg.algorithms.len());
    for &algorithm in &cfg.algorithms {
        let (result, runtime): (Result<RecoveredSignal, String>, Duration) = match algorithm {
            Algorithm::Omp => {
                let (r, d) = timed(|| solvers::omp(phi, &meas.y, cfg.s));
                (r.map_err(|e| e.to_string()), d)
            }
            Algorithm::Bloomp => {
                let (r, d) = timed(|| solvers::bloomp(phi, &meas.y, cfg.s, radius));
                (r.map_err(|e| e.to_string()), d)
            }
            Algorithm::Bp => {
                let (r, d) = bp_shared(&mut bp_cache, cfg, phi, &meas.y, meas.noise_norm);
                (r.clone(), *d)
            }
            Algorithm::BpBlot => {
                let (bp_res, bp_dur) = {
                    let (r, d) = bp_shared(&mut bp_cache, cfg, phi, &meas.y, meas.noise_norm);
                    (r.clone(), *d)
                };
                match bp_res {
                    Ok(bp_sig) => {
                        let (blot_res, blot_dur) = timed(|| {
                            solvers::blot(&bp_sig.coefficients, phi, &meas.y, cfg.s, radius)
                        });
                        let merged = blot_res.map(|mut out| {
                            for &flag in &bp_sig.flags {
                                out.push_flag(flag);
                            }
                            out
                        });
                        (merged.map_err(|e| e.to_string()), bp_dur + blot_dur)
                    }
                    Err(e) => (Err(e), bp_dur),
                }
            }
        };
        let outcome = match result {
            Ok(sig) => match metrics::evaluate(
                phi,
                &x_dense,
                &x_support,
                &meas.y,
                &sig.coefficients,
                &sig.support,
                &cfg.eta_list,
                Kernel::Tent,
            ) {
                Ok(mut record) => {
                    record.runtime = runtime;
                    RowOutcome::Evaluated { record, flags: sig.flags }
                }
                Err(e) => RowOutcome::Failed { error: e.to_string() },
            },
            Err(error) => RowOutcome::Failed { error },
        };
        rows.push(ResultRow { trial, algorithm, f, snr, outcome });
    }
    rows
}
