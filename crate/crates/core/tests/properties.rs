//! Property tests: structural invariants that must hold for arbitrary valid
//! inputs, checked on randomized instances. Case counts are kept modest for
//! the properties that run solvers; combinatorial checks use the default.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use superres_core::bands::{band, band_mask, rayleigh_index, BandRadius};
use superres_core::harness::seeds;
use superres_core::metrics::{
    bottleneck_distance, filter_signal, filtered_error, hausdorff_distance, unfiltered_error,
    FilterSpec, Kernel,
};
use superres_core::model::{measure, synthesize_spikes, AmplitudeModel, GridSpec, SensingMatrix};
use superres_core::solvers::{bloomp, bpdn, local_optimization, omp, BpdnSettings};

fn draw_complex(rng: &mut impl Rng, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

/// A pair of equally sized sorted index sets drawn from `0..n`.
fn equal_size_pair(n: usize, kmax: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1..=kmax).prop_flat_map(move |k| {
        (
            proptest::collection::btree_set(0..n, k),
            proptest::collection::btree_set(0..n, k),
        )
            .prop_map(|(a, b)| (a.into_iter().collect(), b.into_iter().collect()))
    })
}

// ── sensing matrix ──────────────────────────────────────────────────────

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_and_adjoint_are_adjoint(
        m in 4usize..20,
        f in 1usize..5,
        seed in 0u64..10_000,
    ) {
        let g = GridSpec::new(m, f).unwrap();
        let phi = SensingMatrix::build(g).unwrap();
        let mut rng = seeds::rng_from(seed);
        let x = draw_complex(&mut rng, g.n());
        let w = draw_complex(&mut rng, m);
        let lhs: Complex64 = phi
            .forward(&x)
            .iter()
            .zip(&w)
            .map(|(&a, &b)| a * b.conj())
            .sum();
        let rhs: Complex64 = x
            .iter()
            .zip(&phi.adjoint(&w))
            .map(|(&a, &b)| a * b.conj())
            .sum();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
    }

    #[test]
    fn rows_are_orthogonal_with_norm_n(m in 2usize..12, f in 1usize..5) {
        let g = GridSpec::new(m, f).unwrap();
        let phi = SensingMatrix::build(g).unwrap();
        let n = g.n();
        for k1 in 0..m {
            for k2 in 0..m {
                let dot: Complex64 =
                    (0..n).map(|l| phi.entry(k1, l) * phi.entry(k2, l).conj()).sum();
                let expect = if k1 == k2 { n as f64 } else { 0.0 };
                prop_assert!(
                    (dot - expect).norm() <= 1e-9 * n as f64,
                    "rows {},{}: {}", k1, k2, dot
                );
            }
        }
    }
}

// ── bands ───────────────────────────────────────────────────────────────

proptest! {
    #[test]
    fn bands_contain_their_center_and_grow_with_radius(
        (n, j) in (1usize..500).prop_flat_map(|n| (Just(n), 0..n)),
        r1 in 1usize..40,
        extra in 0usize..40,
    ) {
        let small = band(j, BandRadius::explicit(r1), n);
        let large = band(j, BandRadius::explicit(r1 + extra), n);
        prop_assert!(small.contains(&j));
        prop_assert!(large.start() <= small.start() && small.end() <= large.end());
        prop_assert!(small.clone().count() <= 2 * r1 + 1);
    }

    #[test]
    fn band_mask_is_the_union_of_member_bands(
        n in 1usize..300,
        r in 1usize..20,
        raw_support in proptest::collection::btree_set(0usize..300, 0..6),
    ) {
        let sup: Vec<usize> = raw_support.into_iter().filter(|&i| i < n).collect();
        let radius = BandRadius::explicit(r);
        let mask = band_mask(&sup, radius, n);
        for (i, &bit) in mask.iter().enumerate() {
            let member = sup.iter().any(|&j| band(j, radius, n).contains(&i));
            prop_assert_eq!(bit, member, "index {}", i);
        }
    }

    #[test]
    fn rayleigh_index_matches_naive_window_count(
        raw in proptest::collection::btree_set(0u32..4000, 1..10),
        shift in 0.0f64..50.0,
    ) {
        // Work from coarse rationals so window membership is unambiguous.
        let positions: Vec<f64> = raw.iter().map(|&q| q as f64 / 10.0).collect();
        let got = rayleigh_index(&positions);

        // Naive oracle: smallest r ≥ 1 such that every half-open window
        // [t, t + 4r·ℓ) anchored at a spike holds at most r spikes.
        let naive = (1..)
            .find(|&r| {
                positions.iter().all(|&t| {
                    positions
                        .iter()
                        .filter(|&&u| u >= t && u < t + 4.0 * r as f64)
                        .count()
                        <= r
                })
            })
            .unwrap();
        prop_assert_eq!(got, naive);

        // Translation invariance.
        let shifted: Vec<f64> = positions.iter().map(|&p| p + shift).collect();
        prop_assert_eq!(rayleigh_index(&shifted), got);
    }
}

// ── metrics ─────────────────────────────────────────────────────────────

proptest! {
    #[test]
    fn kernel_weights_are_a_symmetric_unit_mass(
        eta in 0.0f64..2.0,
        f in 1usize..60,
        boxcar in proptest::bool::ANY,
    ) {
        let kernel = if boxcar { Kernel::Boxcar } else { Kernel::Tent };
        let spec = FilterSpec::new(eta, kernel, f).unwrap();
        let w = spec.weights();
        prop_assert_eq!(w.len(), 2 * spec.eta_fine() + 1);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for (a, b) in w.iter().zip(w.iter().rev()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn filtering_never_increases_energy(
        x in complex_vec(80),
        eta in 0.0f64..1.5,
        f in 1usize..40,
    ) {
        // Convolution with a nonnegative unit-mass kernel (clipped at the
        // edges) is an ℓ² contraction.
        let spec = FilterSpec::new(eta, Kernel::Tent, f).unwrap();
        let fx = filter_signal(&x, &spec);
        let before: f64 = x.iter().map(|c| c.norm_sqr()).sum();
        let after: f64 = fx.iter().map(|c| c.norm_sqr()).sum();
        prop_assert!(after <= before * (1.0 + 1e-12));
    }

    #[test]
    fn zero_eta_filtered_error_is_bitwise_unfiltered(
        x in complex_vec(50),
        xh in complex_vec(50),
    ) {
        prop_assume!(x.iter().any(|c| c.norm_sqr() > 0.0));
        let spec = FilterSpec::new(0.0, Kernel::Tent, 50).unwrap();
        let a = filtered_error(&xh, &x, &spec).unwrap();
        let b = unfiltered_error(&xh, &x).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn bottleneck_matches_permutation_brute_force(
        (s1, s2) in equal_size_pair(120, 6),
        f in 1usize..60,
    ) {
        let got = bottleneck_distance(&s1, &s2, f).unwrap();

        use itertools::Itertools;
        let best = (0..s2.len())
            .permutations(s2.len())
            .map(|perm| {
                s1.iter()
                    .zip(perm)
                    .map(|(&a, idx)| (a as f64 - s2[idx] as f64).abs() / f as f64)
                    .fold(0.0f64, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!((got - best).abs() <= 1e-12, "sorted {} vs brute {}", got, best);
    }

    #[test]
    fn hausdorff_never_exceeds_bottleneck(
        (s1, s2) in equal_size_pair(200, 8),
        f in 1usize..60,
    ) {
        let b = bottleneck_distance(&s1, &s2, f).unwrap();
        let h = hausdorff_distance(&s1, &s2, f).unwrap();
        prop_assert!(h <= b + 1e-12, "hausdorff {} > bottleneck {}", h, b);
    }

    #[test]
    fn mismatched_cardinalities_have_no_bottleneck(
        s1 in proptest::collection::btree_set(0usize..100, 1..5),
        s2 in proptest::collection::btree_set(0usize..100, 1..5),
        f in 1usize..10,
    ) {
        let s1: Vec<usize> = s1.into_iter().collect();
        let s2: Vec<usize> = s2.into_iter().collect();
        prop_assume!(s1.len() != s2.len());
        prop_assert_eq!(bottleneck_distance(&s1, &s2, f), None);
        prop_assert!(hausdorff_distance(&s1, &s2, f).is_some());
    }
}

// ── solvers ─────────────────────────────────────────────────────────────

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn local_optimization_trail_is_monotone_on_noisy_data(
        seed in 0u64..10_000,
        snr in 1.0f64..50.0,
    ) {
        let g = GridSpec::new(24, 6).unwrap();
        let phi = SensingMatrix::build(g).unwrap();
        let x = synthesize_spikes(g, 4, 1.0, &AmplitudeModel::default(), seed).unwrap();
        let meas = measure(&phi, &x, snr, seed ^ 0xabcd).unwrap();
        // A deliberately wrong starting support.
        let s0: Vec<usize> = vec![3, 40, 77, 120];
        let out = local_optimization(&phi, &meas.y, &s0, BandRadius::explicit(6)).unwrap();
        for w in out.residual_trail.windows(2) {
            prop_assert!(w[1] <= w[0], "residual rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn bpdn_iterates_are_always_feasible(
        seed in 0u64..10_000,
        snr in 2.0f64..100.0,
        cap in 5usize..60,
    ) {
        // Even with the iteration budget cut absurdly short, the reported
        // point must satisfy the data constraint: feasibility comes from
        // the projection, not from convergence.
        let g = GridSpec::new(16, 4).unwrap();
        let phi = SensingMatrix::build(g).unwrap();
        let x = synthesize_spikes(g, 3, 1.0, &AmplitudeModel::default(), seed).unwrap();
        let meas = measure(&phi, &x, snr, seed ^ 0x77).unwrap();
        let mut settings = BpdnSettings::with_epsilon(meas.noise_norm);
        settings.max_iterations = cap;
        let sol = bpdn(&phi, &meas.y, &settings).unwrap();
        let r_sq: f64 = phi
            .forward(&sol.coefficients)
            .iter()
            .zip(&meas.y)
            .map(|(&a, &b)| (b - a).norm_sqr())
            .sum();
        let rnorm = r_sq.sqrt();
        prop_assert!(
            rnorm <= settings.epsilon * (1.0 + 1e-9) + 1e-12,
            "infeasible: ‖r‖ = {} > ε = {}", rnorm, settings.epsilon
        );
    }

    #[test]
    fn pursuits_are_bitwise_deterministic(seed in 0u64..10_000) {
        let g = GridSpec::new(20, 5).unwrap();
        let phi = SensingMatrix::build(g).unwrap();
        let x = synthesize_spikes(g, 4, 1.0, &AmplitudeModel::default(), seed).unwrap();
        let meas = measure(&phi, &x, 10.0, seed ^ 0x5a5a).unwrap();
        let radius = BandRadius::explicit(5);

        let a1 = omp(&phi, &meas.y, 4).unwrap();
        let a2 = omp(&phi, &meas.y, 4).unwrap();
        prop_assert_eq!(&a1.support, &a2.support);
        for (p, q) in a1.coefficients.iter().zip(&a2.coefficients) {
            prop_assert_eq!(p.re.to_bits(), q.re.to_bits());
            prop_assert_eq!(p.im.to_bits(), q.im.to_bits());
        }

        let b1 = bloomp(&phi, &meas.y, 4, radius).unwrap();
        let b2 = bloomp(&phi, &meas.y, 4, radius).unwrap();
        prop_assert_eq!(&b1.support, &b2.support);

        let settings = BpdnSettings::with_epsilon(meas.noise_norm);
        let c1 = bpdn(&phi, &meas.y, &settings).unwrap();
        let c2 = bpdn(&phi, &meas.y, &settings).unwrap();
        for (p, q) in c1.coefficients.iter().zip(&c2.coefficients) {
            prop_assert_eq!(p.re.to_bits(), q.re.to_bits());
            prop_assert_eq!(p.im.to_bits(), q.im.to_bits());
        }
    }
}
