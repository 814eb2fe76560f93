use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wsmf::io::{encode_csv, encode_raw, parse_csv, parse_raw};
use wsmf::multiscale::{
    coefficient_field, p_leaders, theta_omega_leaders, wavelet_leaders, FieldKind, GrowthPair, MultiscaleField,
};
use wsmf::report::num;
use wsmf::scaling::{estimate_hmin, scaling_function, structure_functions, MomentGrid, ScalingFunction};
use wsmf::sparsity::sparsity_split_over;
use wsmf::spectrum::{legendre_transform, linspace, QRestriction};
use wsmf::wavelet::{decompose_full, pseudo_fractional_integrate, CoefficientPyramid, Scale, Signal, WaveletSpec};
use wsmf::Error;

fn pyramid(seed: u64, j_coarse: Scale, levels: usize) -> CoefficientPyramid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..levels)
        .map(|i| {
            let n = 1usize << (j_coarse as usize + i);
            let coeffs = (0..n)
                .map(|_| {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    sign * rng.random_range(-8.0f64..4.0).exp2()
                })
                .collect();
            (coeffs, rng.random_range(n.div_ceil(2)..=n))
        })
        .collect();
    CoefficientPyramid::from_levels_with_interior(j_coarse, data).unwrap()
}

fn masked(p: &CoefficientPyramid, j: Scale, k: usize) -> f64 {
    p.level(j).unwrap().masked_abs(k)
}

fn assert_dominates(field: &MultiscaleField, p: &CoefficientPyramid) {
    for level in &field.levels {
        for (i, v) in level.values.iter().enumerate() {
            assert!(*v >= masked(p, level.j, level.position(i)));
        }
    }
}

fn random_signal(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0, r in 1usize..=8) {
        let n = 1 << 10;
        let f = random_signal(seed, n);
        let g = random_signal(seed ^ 0x9e37, n);
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let spec = WaveletSpec::daubechies(r).unwrap();
        let pf = decompose_full(&Signal::new("f", f).unwrap(), &spec).unwrap();
        let pg = decompose_full(&Signal::new("g", g).unwrap(), &spec).unwrap();
        let pm = decompose_full(&Signal::new("m", mix).unwrap(), &spec).unwrap();
        for ((lf, lg), lm) in pf.levels().iter().zip(pg.levels()).zip(pm.levels()) {
            for k in 0..lm.interior {
                let want = a * lf.coeffs[k] + b * lg.coeffs[k];
                prop_assert!((lm.coeffs[k] - want).abs() <= 1e-10 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn leaders_dominate_coefficients(seed in any::<u64>(), jc in 0i32..3, levels in 3usize..8) {
        let p = pyramid(seed, jc, levels);
        assert_dominates(&wavelet_leaders(&p).unwrap(), &p);
        assert_dominates(&theta_omega_leaders(&p, &GrowthPair::default()).unwrap(), &p);
        assert_dominates(&p_leaders(&p, 1.5).unwrap(), &p);
    }

    #[test]
    fn larger_neighbourhoods_never_decrease(
        seed in any::<u64>(),
        beta in 0.0f64..0.9,
        dbeta in 0.0f64..0.09,
        a in 0.0f64..1.5,
        da in 0.0f64..1.0,
    ) {
        let p = pyramid(seed, 1, 7);
        let small = theta_omega_leaders(&p, &GrowthPair::power(beta, a).unwrap()).unwrap();
        let large_depth = theta_omega_leaders(&p, &GrowthPair::power(beta + dbeta, a).unwrap()).unwrap();
        let large_width = theta_omega_leaders(&p, &GrowthPair::power(beta, a + da).unwrap()).unwrap();
        for (s, l) in small.levels.iter().zip(&large_depth.levels) {
            // equal β keeps strides equal; compare at common positions
            for (i, v) in s.values.iter().enumerate() {
                prop_assert!(l.values[i] >= *v);
            }
        }
        for (s, l) in small.levels.iter().zip(&large_width.levels) {
            for (i, v) in l.values.iter().enumerate() {
                let k = l.position(i);
                // the smaller neighbourhood evaluated at k is within the larger one
                if k % s.stride == 0 {
                    prop_assert!(*v >= s.values[k / s.stride]);
                }
            }
        }
    }

    #[test]
    fn multiscale_quantities_scale_with_coefficients(seed in any::<u64>(), lambda in 1e-3f64..1e3, p_exp in 0.3f64..3.0) {
        let p = pyramid(seed, 1, 6);
        let scaled = p.map_coefficients(|_, c| lambda * c);
        let pairs = [
            (wavelet_leaders(&p).unwrap(), wavelet_leaders(&scaled).unwrap()),
            (p_leaders(&p, p_exp).unwrap(), p_leaders(&scaled, p_exp).unwrap()),
            (
                theta_omega_leaders(&p, &GrowthPair::default()).unwrap(),
                theta_omega_leaders(&scaled, &GrowthPair::default()).unwrap(),
            ),
            (coefficient_field(&p), coefficient_field(&scaled)),
        ];
        for (base, s) in &pairs {
            for (lb, ls) in base.levels.iter().zip(&s.levels) {
                for (b, v) in lb.values.iter().zip(&ls.values) {
                    prop_assert!((v - lambda * b).abs() <= 1e-12 * (lambda * b).abs());
                }
            }
        }
    }

    #[test]
    fn fractional_integration_shifts_zeta_and_hmin(seed in any::<u64>(), s in -2.0f64..2.0) {
        let p = pyramid(seed, 2, 8);
        let grid = MomentGrid::linspace(0.2, 5.0, 12).unwrap();
        let (j1, j2) = (3, 9);
        let zeta = |p: &CoefficientPyramid| {
            scaling_function(&structure_functions(&coefficient_field(p), &grid).unwrap(), j1, j2).unwrap()
        };
        let ps = pseudo_fractional_integrate(&p, s).unwrap();
        for (a, b) in zeta(&p).estimates.iter().zip(&zeta(&ps).estimates) {
            prop_assert!((b.exponent - a.exponent - s * a.q).abs() <= 1e-9);
        }
        let shift = estimate_hmin(&ps, j1, j2).unwrap() - estimate_hmin(&p, j1, j2).unwrap();
        prop_assert!((shift - s).abs() <= 1e-9);
    }

    #[test]
    fn legendre_spectra_are_concave_and_capped(values in prop::collection::vec(-4.0f64..4.0, 3..24)) {
        let q = linspace(-6.0, 6.0, values.len());
        let table = ScalingFunction::from_table(FieldKind::Leaders, &q, &values).unwrap();
        let h = linspace(-3.0, 3.0, 301);
        match legendre_transform(&table, &h, QRestriction::AllQ) {
            Ok(sp) => {
                prop_assert!(sp.d.iter().all(|d| *d <= 1.0));
                prop_assert!(sp.max_second_difference() <= 1e-9);
            }
            Err(e) => prop_assert!(matches!(e, Error::EmptySpectrum)),
        }
    }

    #[test]
    fn concave_scaling_functions_peak_at_one(mut slopes in prop::collection::vec(-2.0f64..2.0, 2..20)) {
        // ζ(0) = 0 with decreasing increments: L reaches 1 at the slope through q = 0
        slopes.sort_by(|a, b| b.total_cmp(a));
        let half = slopes.len() / 2;
        let q: Vec<f64> = (0..=slopes.len()).map(|i| i as f64 - half as f64).collect();
        let mut zeta = vec![0.0; q.len()];
        for i in half + 1..q.len() {
            zeta[i] = zeta[i - 1] + slopes[i - 1];
        }
        for i in (0..half).rev() {
            zeta[i] = zeta[i + 1] - slopes[i];
        }
        let table = ScalingFunction::from_table(FieldKind::Leaders, &q, &zeta).unwrap();
        let mut h = linspace(-2.0, 2.0, 401);
        h.push(slopes[half]);
        h.sort_by(f64::total_cmp);
        let sp = legendre_transform(&table, &h, QRestriction::AllQ).unwrap();
        prop_assert!(sp.max_second_difference() <= 1e-9);
        prop_assert!((sp.max_d() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn positive_only_spectra_are_nondecreasing(values in prop::collection::vec(-4.0f64..4.0, 2..16)) {
        let q = linspace(0.1, 6.0, values.len());
        let table = ScalingFunction::from_table(FieldKind::Coefficients, &q, &values).unwrap();
        let h = linspace(-3.0, 3.0, 201);
        match legendre_transform(&table, &h, QRestriction::PositiveOnly) {
            Ok(sp) => {
                for w in sp.d.windows(2) {
                    prop_assert!(w[1] >= w[0]);
                }
            }
            Err(e) => prop_assert!(matches!(e, Error::EmptySpectrum)),
        }
    }

    #[test]
    fn larger_budgets_absorb_more(seed in any::<u64>(), q in 0.5f64..3.0, c in 0.01f64..2.0, factor in 1.0f64..8.0) {
        let p = pyramid(seed, 2, 9);
        let small = sparsity_split_over(&p, q, c, None).unwrap();
        let large = sparsity_split_over(&p, q, c * factor, None).unwrap();
        for (a, b) in small.levels.iter().zip(&large.levels) {
            prop_assert!(b.absorbed >= a.absorbed);
        }
    }

    #[test]
    fn report_numbers_round_trip(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let text = num::format(v);
        let back: f64 = text.parse().unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn signal_files_round_trip(seed in any::<u64>(), channels in 1usize..4, n in 1usize..64) {
        let signals: Vec<Signal> = (0..channels)
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(c as u64));
                let x = (0..n).map(|_| rng.random_range(-1e6..1e6) * rng.random_range(-30.0f64..30.0).exp2()).collect();
                Signal::new(format!("c{c}"), x).unwrap()
            })
            .collect();
        let (_, raw) = parse_raw(&encode_raw(&signals).unwrap()).unwrap();
        let (labels, csv) = parse_csv(&encode_csv(&signals).unwrap()).unwrap();
        for (i, s) in signals.iter().enumerate() {
            prop_assert_eq!(&raw[i][..], s.samples());
            prop_assert_eq!(&csv[i][..], s.samples());
            prop_assert_eq!(&labels[i], s.label());
        }
    }
}

/// δ never grows with the budget when the excess counts are monotone in j.
#[test]
fn larger_budgets_do_not_raise_delta_on_lacunary_mixtures() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let density = rng.random_range(0.2..0.8);
        let levels = (2..=14)
            .map(|j| {
                let n = 1usize << j;
                let spikes = (density * j as f64).exp2().round().max(1.0) as usize;
                let mut level: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1e-4)).collect();
                for i in 0..spikes {
                    level[i * n / spikes] = rng.random_range(0.5..2.0);
                }
                level
            })
            .collect();
        let p = CoefficientPyramid::from_levels(2, levels).unwrap();
        let mut last = f64::INFINITY;
        for c in [0.05, 0.2, 1.0, 5.0] {
            let delta = sparsity_split_over(&p, 2.0, c, Some((6, 14))).unwrap().delta;
            assert!(delta <= last + 1e-12, "seed {seed}: delta {delta} after {last}");
            last = delta;
        }
    }
}
