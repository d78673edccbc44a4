use std::sync::OnceLock;

use proptest::prelude::*;
use rug::ops::Pow;
use rug::{Float, Rational};

use multicrit::circlemap::{
    build_piecewise_canonical, build_rotation, build_sine_family, tune_omega, CriticalSpec,
    MapModel, TuneOptions,
};
use multicrit::conjugacy::{build_conjugacy, qs_constant, ConjugacyTable};
use multicrit::crossratio::{a_from_lengths, b_from_lengths, distortion_on_line, mobius};
use multicrit::error::Error;
use multicrit::num::{ccw, golden, real};
use multicrit::parabolic::{balanced_decomposition, order, yoccoz_fit};
use multicrit::partition::build_partition;
use multicrit::rotation::{expand, ContinuedFraction};

const P: u32 = 256;

fn sine() -> &'static MapModel {
    static F: OnceLock<MapModel> = OnceLock::new();
    F.get_or_init(|| {
        tune_omega(
            &build_sine_family(1, &real(P, 0), P).unwrap(),
            &golden(P),
            &TuneOptions {
                tol: 1e-40,
                max_iterates: 3000,
            },
        )
        .unwrap()
    })
}

fn bicritical(c1: f64) -> MapModel {
    let p = 128;
    let spec = |c: f64| CriticalSpec {
        position: real(p, c),
        exponent: real(p, 3),
        half_width: Some(real(p, 0.1)),
        slope: None,
    };
    let m = build_piecewise_canonical(&[spec(0.0), spec(c1)], &real(p, 0), p).unwrap();
    tune_omega(
        &m,
        &golden(p),
        &TuneOptions {
            tol: 1e-30,
            max_iterates: 3000,
        },
    )
    .unwrap()
}

fn identity_table() -> &'static ConjugacyTable {
    static H: OnceLock<ConjugacyTable> = OnceLock::new();
    H.get_or_init(|| build_conjugacy(sine(), sine(), 2584).unwrap())
}

fn mixed_table() -> &'static ConjugacyTable {
    static H: OnceLock<ConjugacyTable> = OnceLock::new();
    H.get_or_init(|| build_conjugacy(&bicritical(0.5), &bicritical(0.37), 2584).unwrap())
}

fn rel(a: &Float, b: &Float) -> f64 {
    (Float::with_val(P, a - b) / b).abs().to_f64()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reciprocal_b_is_one_plus_a(l in 1e-6f64..1.0, m in 1e-6f64..1.0, r in 1e-6f64..1.0) {
        let (l, m, r) = (real(P, l), real(P, m), real(P, r));
        let a = a_from_lengths(&l, &m, &r).unwrap();
        let b = b_from_lengths(&l, &m, &r).unwrap();
        let inv = Float::with_val(P, 1u32 / &b);
        prop_assert!(rel(&inv, &Float::with_val(P, &a + 1u32)) < 1e-60);
    }

    #[test]
    fn mobius_maps_preserve_b(x in prop::array::uniform4(0.0f64..1.0), a in 0.5f64..2.0, b in -1.0f64..1.0, c in -0.5f64..0.5) {
        let mut xs = x;
        xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
        prop_assume!(xs.windows(2).all(|w| w[1] - w[0] > 1e-6));
        let coef = [real(P, a), real(P, b), real(P, c), real(P, 1.0 + c.abs())];
        let det = Float::with_val(P, &coef[0] * &coef[3]) - Float::with_val(P, &coef[1] * &coef[2]);
        prop_assume!(det > 0u32);
        let pts: Vec<Float> = xs.iter().map(|&v| real(P, v)).collect();
        let d = distortion_on_line(|y| mobius(&coef, y), &pts[0], &pts[1], &pts[2], &pts[3]).unwrap();
        prop_assert!(Float::with_val(P, d - 1u32).abs().to_f64() < 1e-50);
    }

    #[test]
    fn expansion_recovers_quotients(q in prop::collection::vec(1u64..50, 1..10)) {
        let cf = ContinuedFraction::from_quotients(&q).unwrap();
        let back = expand(&cf.value_with_golden_tail(P), q.len()).unwrap();
        prop_assert_eq!(&back.partial_quotients[..q.len()], &q[..]);
    }

    #[test]
    fn rotation_partition_tiles_with_two_lengths(q in prop::collection::vec(1u64..6, 8..9), n in 1usize..7) {
        let rho = ContinuedFraction::from_quotients(&q).unwrap().value_with_golden_tail(P);
        let part = build_partition(&build_rotation(&rho, P).unwrap(), 0, n).unwrap();
        let total = part.total_length();
        prop_assert!(Float::with_val(P, total - 1u32).abs().to_f64() < 1e-60);
        let mut lens: Vec<f64> = part.atoms.iter().map(|a| a.arc.len_f64()).collect();
        lens.sort_by(|u, v| u.partial_cmp(v).unwrap());
        lens.dedup_by(|u, v| (*u - *v).abs() < 1e-12);
        prop_assert!(lens.len() <= 2);
    }

    #[test]
    fn partitions_of_a_critical_map_cover_the_circle(n in 1usize..10) {
        let part = build_partition(sine(), 0, n).unwrap();
        prop_assert!(Float::with_val(P, part.total_length() - 1u32).abs().to_f64() < 1e-60);
        prop_assert_eq!(part.atoms.len() as u64, part.q_n + part.q_next);
    }

    #[test]
    fn identity_conjugacy_has_unit_ratio(x in 0.0f64..1.0, t in 0.01f64..0.1) {
        let h = identity_table();
        if let Some(k) = h.k_ratio(x, t) {
            prop_assert!((k - 1.0).abs() < 1e-9);
        }
        prop_assert!((h.eval(x) - x).abs() < 1e-12);
    }

    #[test]
    fn conjugacy_preserves_order(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let h = mixed_table();
        prop_assume!((x - y).abs() > 1e-9);
        let (hx, hy) = (h.eval(x), h.eval(y));
        prop_assert_eq!(x < y, hx < hy);
    }

    #[test]
    fn balanced_decompositions_tile(ell in 1usize..2000) {
        let dec = balanced_decomposition(ell).unwrap();
        prop_assert!(dec.is_exact_tiling());
    }

    #[test]
    fn exact_parabolic_model_has_slope_minus_two(ell in 8usize..300) {
        let lens: Vec<f64> = (1..=ell).map(|nu| 1.0 / (order(nu, ell) as f64).powi(2)).collect();
        prop_assert!((yoccoz_fit(&lens).unwrap().slope + 2.0).abs() < 1e-10);
    }

    #[test]
    fn short_chains_are_rejected(ell in 0usize..8) {
        let lens = vec![1.0; ell];
        prop_assert!(matches!(yoccoz_fit(&lens), Err(Error::TooShort(n)) if n == ell));
    }

    #[test]
    fn qs_constant_exponent_is_minimal(a in 2usize..12, rho_n in 1i64..20, lam_n in 0i64..8) {
        let k = qs_constant(a, &Rational::from(rho_n), &Rational::from((lam_n, 8))).unwrap();
        let quarter = Rational::from((1, 4));
        let at = |p: u32| k.beta.clone().pow(p as i32) * &k.rho1;
        prop_assert!(at(k.p) < quarter);
        prop_assert!(k.p == 0 || at(k.p - 1) >= quarter);
    }

    #[test]
    fn ccw_lengths_complement(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        prop_assume!((x - y).abs() > 1e-12);
        let s = ccw(&real(P, x), &real(P, y)) + ccw(&real(P, y), &real(P, x));
        prop_assert!(Float::with_val(P, s - 1u32).abs().to_f64() < 1e-60);
    }
}
