//! Fixed reference values: closed forms, published constants, and numbers
//! computed once with an independent arbitrary-precision script.

use rug::{Float, Rational};

use multicrit::circlemap::{build_rotation, build_sine_family, tune_omega, TuneOptions};
use multicrit::conjugacy::qs_constant;
use multicrit::crossratio::{a_from_lengths, b_from_lengths};
use multicrit::num::{golden, pi, real};
use multicrit::partition::build_partition;

const P: u32 = 256;

fn close(x: &Float, want: &str, tol: f64) -> bool {
    let w = Float::with_val(P, Float::parse(want).unwrap());
    (Float::with_val(P, x - &w) / &w).abs().to_f64() < tol
}

#[test]
fn sine_schwarzian_at_quarter_turn() {
    // f' = 1, f'' = 2π, f''' = 0 at x = 1/4, so Sf = -(3/2)(2π)².
    let f = build_sine_family(1, &real(P, 0.3), P).unwrap();
    let s = f.schwarzian(&real(P, 0.25)).unwrap();
    let want = Float::with_val(P, pi(P).square() * -6i32);
    assert!((Float::with_val(P, &s - &want) / &want).abs().to_f64() < 1e-60);
}

#[test]
fn golden_rotation_atom_lengths() {
    // ‖q_n ρ‖ for n = 10, 11 (q = 89, 144), 45 digits.
    let long = "0.00502499874064149020822825854179247710751700271";
    let short = "0.00310562001514185853949585134811104827547810797";
    let part = build_partition(&build_rotation(&golden(P), P).unwrap(), 0, 10).unwrap();
    assert_eq!(part.atoms.len(), 89 + 144);
    for a in &part.atoms {
        assert!(close(&a.arc.length, long, 1e-40) || close(&a.arc.length, short, 1e-40));
    }
}

#[test]
fn golden_mean_sine_parameter() {
    // Critical sine map x + Ω - sin(2πx)/2π at golden-mean rotation: Ω = 0.606661063470...
    let f = tune_omega(
        &build_sine_family(1, &real(P, 0), P).unwrap(),
        &golden(P),
        &TuneOptions {
            tol: 1e-40,
            max_iterates: 30_000,
        },
    )
    .unwrap();
    assert!(
        (f.omega.to_f64() - 0.606_661_063_470).abs() < 5e-9,
        "Ω = {}",
        f.omega.to_f64()
    );
}

#[test]
fn cross_ratios_of_a_fixed_triple() {
    let (l, m, r) = (real(P, 0.2), real(P, 0.5), real(P, 0.3));
    let a = a_from_lengths(&l, &m, &r).unwrap();
    let b = b_from_lengths(&l, &m, &r).unwrap();
    assert!(close(&a, "8.33333333333333333333333333333333333333", 1e-15));
    assert!(close(
        &b,
        "0.107142857142857142857142857142857142857",
        1e-15
    ));
}

#[test]
fn worked_constant_example() {
    let k = qs_constant(7, &Rational::from(2), &Rational::from((1, 2))).unwrap();
    assert_eq!(k.p, 22);
    assert_eq!(k.rho1, 1344);
    assert_eq!(k.triple(), (7, 22, Rational::from((5, 2))));
}
