//! Recovery algorithms: greedy pursuit with band exclusion and local
//! optimization, basis-pursuit denoising, and their compositions.
//!
//! Every solver returns a [`RecoveredSignal`]: a dense coefficient vector on
//! the fine grid together with its support, the achieved data residual, and
//! any quality flags raised along the way. Solvers are deterministic — same
//! inputs, same output, bit for bit — which the test suite relies on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

mod bpdn;
mod greedy;
mod leastsq;

pub use bpdn::{bpdn, BpdnSettings};
pub use greedy::{
    blot, bloomp, bp_blot, local_optimization, local_optimization_until_stable, omp,
    LocalOptOutcome,
};
pub use leastsq::least_squares_on_support;

/// The recovery algorithms the harness can run, in their CSV/config names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Orthogonal matching pursuit.
    Omp,
    /// Band-excluded OMP with local optimization.
    Bloomp,
    /// Basis-pursuit denoising.
    Bp,
    /// Band-restricted thresholding applied to the basis-pursuit solution.
    BpBlot,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Omp => "omp",
            Algorithm::Bloomp => "bloomp",
            Algorithm::Bp => "bp",
            Algorithm::BpBlot => "bp_blot",
        }
    }

    pub const ALL: [Algorithm; 4] =
        [Algorithm::Omp, Algorithm::Bloomp, Algorithm::Bp, Algorithm::BpBlot];
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "omp" => Ok(Algorithm::Omp),
            "bloomp" => Ok(Algorithm::Bloomp),
            "bp" => Ok(Algorithm::Bp),
            "bp_blot" => Ok(Algorithm::BpBlot),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

/// Conditions a solver wants to report without failing the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverFlag {
    /// Iterative solve hit its iteration cap before meeting tolerances; the
    /// best (feasible) iterate was returned.
    Unconverged,
    /// Support columns were numerically rank deficient; coefficients are the
    /// least-norm minimizer.
    LeastNormFallback,
    /// Thresholding ran out of out-of-band candidates and padded the support
    /// with the largest remaining magnitudes regardless of band.
    BandPadded,
}

impl SolverFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverFlag::Unconverged => "unconverged",
            SolverFlag::LeastNormFallback => "least_norm_fallback",
            SolverFlag::BandPadded => "band_padded",
        }
    }
}

impl std::fmt::Display for SolverFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A solver's answer: dense coefficients plus bookkeeping.
#[derive(Debug, Clone)]
pub struct RecoveredSignal {
    /// Length-`N` coefficient vector on the fine grid; zero off the support.
    pub coefficients: Vec<Complex64>,
    /// Sorted indices of the (potentially) nonzero coefficients.
    pub support: Vec<usize>,
    /// `‖Φ·coefficients − y‖₂` at return.
    pub residual_norm: f64,
    /// Deduplicated, in order of first occurrence.
    pub flags: Vec<SolverFlag>,
}

impl RecoveredSignal {
    pub(crate) fn push_flag(&mut self, flag: SolverFlag) {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
    }

    pub fn is_unconverged(&self) -> bool {
        self.flags.contains(&SolverFlag::Unconverged)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SolverError {
    #[error("support size {size} exceeds the number of measurements {m}")]
    SupportTooLarge { size: usize, m: usize },
    #[error("support indices must be sorted, unique, and on the fine grid")]
    InvalidSupport,
    #[error("local optimization requires a nonempty starting support")]
    EmptyStartSupport,
    #[error(
        "band exclusion exhausted the candidate pool after {selected} of {requested} selections"
    )]
    SelectionPoolExhausted { selected: usize, requested: usize },
    #[error("target sparsity must be positive and at most m = {m}")]
    InvalidSparsity { m: usize },
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),
}
