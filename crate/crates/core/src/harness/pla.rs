//! Power-law amplification fit: the exponent α in `error ≈ c·F^α`,
//! estimated as the least-squares slope of `log(error)` against `log(F)`.

use crate::harness::HarnessError;

/// Least-squares slope of `ln(errors)` vs `ln(factors)`.
///
/// Requires equally long lists with at least two entries, strictly positive
/// errors, positive factors, and at least two distinct factors.
pub fn estimate_pla_exponent(errors: &[f64], factors: &[f64]) -> Result<f64, HarnessError> {
    if errors.len() != factors.len() {
        return Err(HarnessError::Pla(format!(
            "length mismatch: {} errors vs {} factors",
            errors.len(),
            factors.len()
        )));
    }
    if errors.len() < 2 {
        return Err(HarnessError::Pla("need at least two points".into()));
    }
    if errors.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(HarnessError::Pla("errors must be positive and finite".into()));
    }
    if factors.iter().any(|&f| !(f > 0.0 && f.is_finite())) {
        return Err(HarnessError::Pla("factors must be positive and finite".into()));
    }
    let n = errors.len() as f64;
    let lx: Vec<f64> = factors.iter().map(|&f| f.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|&e| e.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|&x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::Pla("factors must not all coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
