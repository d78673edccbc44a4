//! Small helpers around MPFR floats.

use rug::float::{Constant, Round};
use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};

pub const DEFAULT_PRECISION: u32 = 256;
pub const MIN_PRECISION: u32 = 64;

pub fn real<T>(prec: u32, v: T) -> Float
where
    Float: rug::Assign<T>,
{
    Float::with_val(prec, v)
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// (√5 − 1)/2.
pub fn golden(prec: u32) -> Float {
    let s = Float::with_val(prec + 8, 5).sqrt();
    Float::with_val(prec, (s - 1u32) / 2u32)
}

/// Fractional part in [0, 1).
pub fn frac(x: &Float) -> Float {
    let mut f = x.clone() - x.clone().floor();
    if f >= 1u32 {
        f -= 1u32;
    }
    f
}

/// Counterclockwise distance from `a` to `b` on R/Z, in [0, 1).
pub fn ccw(a: &Float, b: &Float) -> Float {
    frac(&(b.clone() - a))
}

/// Signed representative of `b − a` in [−1/2, 1/2).
pub fn signed_gap(a: &Float, b: &Float) -> Float {
    let mut d = ccw(a, b);
    if d >= 0.5f64 {
        d -= 1u32;
    }
    d
}

pub fn to_decimal(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }

    x.to_string_radix_round(10, Some(digits.max(1)), Round::Nearest)
}

pub fn parse_real(s: &str, prec: u32) -> Result<Float> {
    let t = s.trim();
    let parsed = Float::parse(t).map_err(|e| Error::InvalidInput(format!("{t:?}: {e}")))?;
    Ok(Float::with_val(prec, parsed))
}

pub fn powf(x: &Float, e: &Float) -> Float {
    x.clone().pow(e)
}

pub fn check_precision(prec: u32) -> Result<()> {
    if prec < MIN_PRECISION {
        return Err(Error::InvalidInput(format!(
            "precision {prec} below the minimum {MIN_PRECISION} bits"
        )));
    }
    Ok(())
}

/// log2 of |x| as f64, −inf for zero.
pub fn log2_abs(x: &Float) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = x.to_f64_exp();
    m.abs().log2() + e as f64
}

pub fn max_f(a: Float, b: Float) -> Float {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn min_f(a: Float, b: Float) -> Float {
    if a <= b {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_and_ccw_wrap() {
        let p = 128;
        let a = real(p, 0.9);
        let b = real(p, 0.1);
        let d = ccw(&a, &b);
        assert!((d.to_f64() - 0.2).abs() < 1e-15);
        assert!((signed_gap(&b, &a).to_f64() + 0.2).abs() < 1e-15);
        assert_eq!(frac(&real(p, -0.25)).to_f64(), 0.75);
    }

    #[test]
    fn golden_satisfies_quadratic() {
        let g = golden(256);
        let r = g.clone() * &g + &g - 1u32;
        assert!(log2_abs(&r) < -250.0);
    }

    #[test]
    fn decimal_round_trip() {
        let x = parse_real("0.1234567890123456789012345678901234567890", 256).unwrap();
        let s = to_decimal(&x, 40);
        let y = parse_real(&s, 256).unwrap();
        assert!(log2_abs(&(x - y)) < -130.0);
    }
}
