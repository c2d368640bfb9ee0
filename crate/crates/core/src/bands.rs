//! Coherence bands, band-radius rules, and the Rayleigh index.
//!
//! For super-resolution factors `F > 1`, sensing-matrix columns within about
//! one Rayleigh length of each other are nearly parallel, so residual
//! correlations cannot distinguish them. A *coherence band* around index `j`
//! is the set of fine-grid indices within a fixed radius of `j`; greedy
//! selection excludes the bands of already-chosen indices, and local
//! optimization confines per-spike moves to the spike's own band.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BandError {
    #[error(
        "minimum separation {min_sep}ℓ at factor {f} floors to a zero band radius; \
         band exclusion would be degenerate"
    )]
    DegenerateRadius { min_sep: f64, f: usize },
}

/// Where a band radius came from. The radius itself is in fine-grid steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusOrigin {
    /// One Rayleigh length (`F` fine steps): the default for well-separated
    /// spikes.
    Rayleigh,
    /// Half the minimum spike separation, for sub-Rayleigh configurations.
    HalfMinSep,
    /// Caller-specified.
    Explicit,
}

/// Exclusion radius for coherence bands, in fine-grid steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandRadius {
    radius_fine: usize,
    origin: RadiusOrigin,
}

impl BandRadius {
    pub fn explicit(radius_fine: usize) -> Self {
        BandRadius { radius_fine, origin: RadiusOrigin::Explicit }
    }

    pub fn fine(&self) -> usize {
        self.radius_fine
    }

    pub fn origin(&self) -> RadiusOrigin {
        self.origin
    }
}

/// Default radius rule: spikes separated by at least one Rayleigh length use
/// a full-`ℓ` band (`F` steps); closer spacings use half the minimum
/// separation, floored to whole fine-grid steps. Flooring is conservative —
/// the exclusion zone never exceeds half the separation, so a band around
/// one true spike cannot swallow its neighbour.
pub fn default_band_radius(min_sep_ell: f64, f: usize) -> Result<BandRadius, BandError> {
    if min_sep_ell >= 1.0 {
        return Ok(BandRadius { radius_fine: f, origin: RadiusOrigin::Rayleigh });
    }
    let radius = (min_sep_ell * f as f64 / 2.0).floor() as usize;
    if radius == 0 {
        return Err(BandError::DegenerateRadius { min_sep: min_sep_ell, f });
    }
    Ok(BandRadius { radius_fine: radius, origin: RadiusOrigin::HalfMinSep })
}

/// The band around index `j`: all grid indices within the radius, clamped at
/// the grid boundary (spike positions live on a segment, not a circle).
/// Returned as an inclusive index interval.
pub fn band(j: usize, r: BandRadius, n: usize) -> std::ops::RangeInclusive<usize> {
    debug_assert!(j < n);
    let lo = j.saturating_sub(r.fine());
    let hi = (j + r.fine()).min(n - 1);
    lo..=hi
}

/// Union of bands over a support set, as a boolean exclusion mask of
/// length `n`.
pub fn band_mask(support: &[usize], r: BandRadius, n: usize) -> Vec<bool> {
    let mut mask = vec![false; n];
    mark_bands(support, r, &mut mask);
    mask
}

/// Mark the bands of `support` in an existing mask (entries stay `true` once
/// set, so repeated calls accumulate the union).
pub fn mark_bands(support: &[usize], r: BandRadius, mask: &mut [bool]) {
    let n = mask.len();
    for &j in support {
        for slot in &mut mask[band(j, r, n)] {
            *slot = true;
        }
    }
}

/// Union of bands over a support set, as a sorted index list.
pub fn band_of_set(support: &[usize], r: BandRadius, n: usize) -> Vec<usize> {
    let mask = band_mask(support, r, n);
    (0..n).filter(|&i| mask[i]).collect()
}

/// Rayleigh index of a spike configuration (positions in `ℓ` units): the
/// smallest `r ≥ 1` such that every half-open window of length `4rℓ`
/// contains at most `r` spikes. Well-separated sets (pairwise gaps ≥ 4ℓ)
/// have index 1; tighter clusters score higher.
///
/// Only windows starting at a spike need checking: sliding a window left
/// until its left edge hits a spike never decreases the count, so the
/// supremum over all windows is attained on this finite family.
pub fn rayleigh_index(positions_ell: &[f64]) -> usize {
    assert!(!positions_ell.is_empty(), "rayleigh_index of an empty set");
    debug_assert!(
        positions_ell.windows(2).all(|w| w[0] < w[1]),
        "positions must be sorted and distinct"
    );
    let s = positions_ell.len();
    'candidate: for r in 1..=s {
        let window = 4.0 * r as f64;
        for (i, &start) in positions_ell.iter().enumerate() {
            // Count spikes in [start, start + window).
            let count = positions_ell[i..]
                .iter()
                .take_while(|&&p| p - start < window)
                .count();
            if count > r {
                continue 'candidate;
            }
        }
        return r;
    }
    s // every window of length 4s holds at most s spikes trivially
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(range: std::ops::RangeInclusive<usize>) -> Vec<usize> {
        range.collect()
    }

    #[test]
    fn band_is_a_clamped_interval_containing_its_center() {
        let r = BandRadius::explicit(50);
        assert_eq!(collect(band(100, r, 7500)), (50..=150).collect::<Vec<_>>());
        assert_eq!(collect(band(10, r, 7500)), (0..=60).collect::<Vec<_>>());
        assert_eq!(collect(band(7499, r, 7500)), (7449..=7499).collect::<Vec<_>>());
        for j in [0usize, 10, 100, 7499] {
            assert!(band(j, r, 7500).contains(&j));
        }
    }

    #[test]
    fn band_cardinality_is_radius_bound() {
        let n = 200;
        for radius in [0usize, 1, 5, 50] {
            let r = BandRadius::explicit(radius);
            for j in 0..n {
                let len = band(j, r, n).count();
                assert!(len <= 2 * radius + 1);
                assert!(len >= radius.min(j + 1).max(1));
            }
        }
    }

    #[test]
    fn band_of_set_unions_disjoint_and_overlapping_bands() {
        let r = BandRadius::explicit(50);
        assert_eq!(band_of_set(&[], r, 7500), Vec::<usize>::new());

        let disjoint = band_of_set(&[100, 400], r, 7500);
        let expect: Vec<usize> = (50..=150).chain(350..=450).collect();
        assert_eq!(disjoint, expect);

        let merged = band_of_set(&[100, 160], r, 7500);
        let expect: Vec<usize> = (50..=210).collect();
        assert_eq!(merged, expect);
    }

    #[test]
    fn default_radius_uses_rayleigh_rule_at_or_above_one_ell() {
        let r = default_band_radius(4.0, 50).unwrap();
        assert_eq!((r.fine(), r.origin()), (50, RadiusOrigin::Rayleigh));
        let r = default_band_radius(1.0, 50).unwrap();
        assert_eq!((r.fine(), r.origin()), (50, RadiusOrigin::Rayleigh));
    }

    #[test]
    fn default_radius_floors_half_separation_below_one_ell() {
        let r = default_band_radius(0.3, 50).unwrap();
        assert_eq!((r.fine(), r.origin()), (7, RadiusOrigin::HalfMinSep));
        let r = default_band_radius(0.5, 50).unwrap();
        assert_eq!((r.fine(), r.origin()), (12, RadiusOrigin::HalfMinSep));
    }

    #[test]
    fn degenerate_radius_is_an_error() {
        assert!(matches!(
            default_band_radius(0.01, 50),
            Err(BandError::DegenerateRadius { .. })
        ));
    }

    #[test]
    fn well_separated_sets_have_index_one() {
        assert_eq!(rayleigh_index(&[3.0]), 1);
        assert_eq!(rayleigh_index(&[0.0, 4.0, 8.0, 30.0]), 1);
        assert_eq!(rayleigh_index(&[0.0, 5.5, 100.0]), 1);
    }

    #[test]
    fn clustered_sets_score_their_known_indices() {
        assert_eq!(rayleigh_index(&[76.0, 76.5, 79.0, 80.0, 81.0]), 5);
        assert_eq!(rayleigh_index(&[10.0, 10.3, 15.0, 20.0, 25.0, 25.3]), 6);
    }

    #[test]
    fn rayleigh_index_is_translation_invariant() {
        let base = [10.0, 10.3, 15.0, 20.0, 25.0, 25.3];
        let idx = rayleigh_index(&base);
        for shift in [-10.0, 3.25, 1000.0] {
            let moved: Vec<f64> = base.iter().map(|p| p + shift).collect();
            assert_eq!(rayleigh_index(&moved), idx);
        }
    }
}
