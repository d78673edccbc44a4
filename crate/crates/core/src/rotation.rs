//! Continued fractions, return times and rotation-number estimation.
//!
//! The convention throughout is ρ = 1/(a₀ + 1/(a₁ + …)) with
//! q₀ = 1, q₁ = a₀ and q_{n+1} = a_n q_n + q_{n−1}.

use rug::Float;

use crate::error::{Error, Result};
use crate::num::{golden, log2_abs};

/// Quotients larger than this are read as a sign of rationality.
pub const DEFAULT_QUOTIENT_CAP: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuedFraction {
    pub partial_quotients: Vec<u64>,
    /// q₀, q₁, … with one entry per stored partial quotient.
    pub return_times: Vec<u64>,
    /// p₀ = 0, p₁ = 1, p_{n+1} = a_n p_n + p_{n−1}.
    pub convergent_numerators: Vec<u64>,
}

impl ContinuedFraction {
    pub fn from_quotients(a: &[u64]) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidInput("empty continued fraction".into()));
        }
        if a.contains(&0) {
            return Err(Error::InvalidInput(
                "partial quotients must be positive".into(),
            ));
        }
        let mut q = vec![1u64, a[0]];
        let mut p = vec![0u64, 1];
        for n in 1..a.len() {
            let next_q = a[n]
                .checked_mul(q[n])
                .and_then(|v| v.checked_add(q[n - 1]))
                .ok_or_else(|| Error::InvalidInput("return time overflows u64".into()))?;
            let next_p = a[n]
                .checked_mul(p[n])
                .and_then(|v| v.checked_add(p[n - 1]))
                .ok_or_else(|| Error::InvalidInput("convergent overflows u64".into()))?;
            q.push(next_q);
            p.push(next_p);
        }
        q.truncate(a.len());
        p.truncate(a.len());
        Ok(ContinuedFraction {
            partial_quotients: a.to_vec(),
            return_times: q,
            convergent_numerators: p,
        })
    }

    pub fn depth(&self) -> usize {
        self.partial_quotients.len()
    }

    /// Return time q_n; panics past the stored depth.
    pub fn q(&self, n: usize) -> u64 {
        self.return_times[n]
    }

    pub fn p(&self, n: usize) -> u64 {
        self.convergent_numerators[n]
    }

    pub fn a(&self, n: usize) -> u64 {
        self.partial_quotients[n]
    }

    /// Value of the finite expansion.
    pub fn value(&self, prec: u32) -> Float {
        tail_value(&self.partial_quotients, Float::with_val(prec, 0))
    }

    /// Value of the expansion continued by an infinite tail of ones.
    pub fn value_with_golden_tail(&self, prec: u32) -> Float {
        tail_value(&self.partial_quotients, golden(prec + 16))
    }

    /// Sign of q_n ρ − p_n for the number this expansion describes: positive for even n.
    pub fn side(n: usize) -> i32 {
        if n.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

fn tail_value(a: &[u64], tail: Float) -> Float {
    let prec = tail.prec();
    let mut x = tail;
    for &ak in a.iter().rev() {
        x += ak;
        x = Float::with_val(prec, 1u32 / &x);
    }
    x
}

/// First `depth` partial quotients of `rho` ∈ (0, 1).
pub fn expand(rho: &Float, depth: usize) -> Result<ContinuedFraction> {
    expand_with_cap(rho, depth, DEFAULT_QUOTIENT_CAP)
}

pub fn expand_with_cap(rho: &Float, depth: usize, cap: u64) -> Result<ContinuedFraction> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be positive".into()));
    }
    if *rho <= 0u32 || *rho >= 1u32 {
        return Err(Error::InvalidInput(
            "rotation number must lie in (0, 1)".into(),
        ));
    }
    let prec = rho.prec();
    let mut x = rho.clone();
    // log2 of the absolute error carried by the remainder x
    let mut err = -(prec as f64);
    let mut a = Vec::with_capacity(depth);
    for k in 0..depth {
        let lx = log2_abs(&x);
        if x.is_zero() || err >= lx - 1.0 {
            return Err(Error::RationalDetected {
                depth: k,
                quotient: "remainder lost".into(),
            });
        }
        let y = Float::with_val(prec, 1u32 / &x);
        err -= 2.0 * lx;
        let fl = y.clone().floor();
        let ak = fl.to_integer().expect("finite quotient");
        if ak > cap {
            return Err(Error::RationalDetected {
                depth: k,
                quotient: ak.to_string(),
            });
        }
        let ak = ak.to_u64().expect("quotient below cap fits u64");
        a.push(ak.max(1));
        x = y - fl;
        err = err.max(-(prec as f64) + log2_abs(&Float::with_val(prec, ak)).max(0.0));
    }
    ContinuedFraction::from_quotients(&a)
}

/// Rotation-number estimate with a certified Stern–Brocot bracket.
#[derive(Debug, Clone)]
pub struct RotationEstimate {
    pub value: Float,
    /// Bracket lower end as p/q.
    pub lower: (u64, u64),
    /// Bracket upper end as p/q.
    pub upper: (u64, u64),
    /// Common continued-fraction prefix of the bracket ends.
    pub prefix: Vec<u64>,
    /// Birkhoff average (F^N(x) − x)/N over the whole orbit.
    pub birkhoff: Float,
}

impl RotationEstimate {
    pub fn width(&self) -> f64 {
        self.upper.0 as f64 / self.upper.1 as f64 - self.lower.0 as f64 / self.lower.1 as f64
    }
}

/// Estimates the rotation number from a lifted orbit `lift[k] = F^k(x₀)`.
///
/// The bracket comes from mediant bisection: for each candidate p/q the sign
/// of F^q(x₀) − x₀ − p tells on which side the rotation number lies.
pub fn rotation_from_lift(lift: &[Float], tol: f64) -> Result<RotationEstimate> {
    if lift.len() < 2 {
        return Err(Error::InvalidInput("orbit too short".into()));
    }
    let n = lift.len() - 1;
    let x0 = &lift[0];
    let prec = x0.prec();
    let (mut lp, mut lq) = (0u64, 1u64);
    let (mut rp, mut rq) = (1u64, 1u64);
    // Shift the integer part so the bracket starts as [0, 1].
    let shift = {
        let d = Float::with_val(prec, &lift[1] - x0);
        d.floor().to_integer().unwrap()
    };
    let shift = shift.to_i64().unwrap_or(0);
    let side_shifted = |p: u64, q: u64| -> std::cmp::Ordering {
        let adj = Float::with_val(prec, &lift[q as usize] - x0) - (shift as f64) * q as f64;
        let d = adj - p;
        d.partial_cmp(&0u32).unwrap_or(std::cmp::Ordering::Equal)
    };
    loop {
        let mq = lq + rq;
        if mq as usize > n {
            break;
        }
        let mp = lp + rp;
        match side_shifted(mp, mq) {
            std::cmp::Ordering::Greater => {
                lp = mp;
                lq = mq;
            }
            std::cmp::Ordering::Less => {
                rp = mp;
                rq = mq;
            }
            std::cmp::Ordering::Equal => {
                lp = mp;
                lq = mq;
                rp = mp;
                rq = mq;
                break;
            }
        }
    }
    let birkhoff = Float::with_val(prec, &lift[n] - x0) / n as u64 - shift;
    let lo = Float::with_val(prec, lp) / lq;
    let hi = Float::with_val(prec, rp) / rq;
    let mut value = birkhoff.clone();
    if value < lo {
        value = lo.clone();
    }
    if value > hi {
        value = hi.clone();
    }
    let est = RotationEstimate {
        value: value + shift,
        lower: (lp, lq),
        upper: (rp, rq),
        prefix: common_prefix(lp, lq, rp, rq),
        birkhoff: birkhoff + shift,
    };
    if est.width() > tol {
        return Err(Error::NotConverged(format!(
            "bracket {lp}/{lq}..{rp}/{rq} wider than {tol:e} after {n} iterates"
        )));
    }
    Ok(est)
}

/// Exact continued fraction of p/q in the 1/(a₀ + …) convention.
pub fn rational_quotients(p: u64, q: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let (mut num, mut den) = (p, q);
    // value = num/den in (0,1]: next quotient is floor(den/num)
    while num != 0 {
        out.push(den / num);
        let r = den % num;
        den = num;
        num = r;
    }
    out
}

fn common_prefix(lp: u64, lq: u64, rp: u64, rq: u64) -> Vec<u64> {
    if lp == 0 || rp == 0 {
        return Vec::new();
    }
    let a = rational_quotients(lp, lq);
    let b = rational_quotients(rp, rq);
    let mut out = Vec::new();
    for (x, y) in a.iter().zip(b.iter()) {
        if x == y {
            out.push(*x);
        } else {
            break;
        }
    }
    // The last term of a finite expansion is ambiguous (… a = … (a−1), 1).
    let m = out
        .len()
        .min(a.len().saturating_sub(1))
        .min(b.len().saturating_sub(1));
    out.truncate(m);
    out
}

/// Parses "[1,1,1,40]" or "1,1,1,40" into partial quotients.
pub fn parse_prefix(s: &str) -> Result<Vec<u64>> {
    let t = s.trim().trim_start_matches('[').trim_end_matches(']');
    let mut out = Vec::new();
    for part in t.split(',') {
        let part = part.trim();
        if part.is_empty() || part == "..." || part == "…" {
            continue;
        }
        let v: u64 = part
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad partial quotient {part:?}")))?;
        if v == 0 {
            return Err(Error::InvalidInput(
                "partial quotients must be positive".into(),
            ));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::InvalidInput(
            "empty continued-fraction prefix".into(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::real;

    #[test]
    fn golden_expansion() {
        let cf = expand(&golden(256), 7).unwrap();
        assert_eq!(cf.partial_quotients, vec![1; 7]);
        assert_eq!(cf.return_times, vec![1, 1, 2, 3, 5, 8, 13]);
    }

    #[test]
    fn sqrt2_expansion() {
        let r = Float::with_val(256, 2).sqrt() - 1u32;
        let cf = expand(&r, 5).unwrap();
        assert_eq!(cf.partial_quotients, vec![2; 5]);
        assert_eq!(cf.return_times, vec![1, 2, 5, 12, 29]);
    }

    #[test]
    fn third_is_rational() {
        let r = Float::with_val(256, 1) / 3u32;
        assert!(matches!(
            expand(&r, 10),
            Err(Error::RationalDetected { .. })
        ));
        assert!(matches!(
            expand(&real(256, 0.5), 3),
            Err(Error::RationalDetected { .. })
        ));
    }

    #[test]
    fn golden_deep_expansion_then_value() {
        let g = golden(256);
        let cf = expand(&g, 60).unwrap();
        assert!(cf.partial_quotients.iter().all(|&a| a == 1));
        let back = cf.value_with_golden_tail(256);
        assert!(log2_abs(&(back - &g)) < -240.0);
    }

    #[test]
    fn golden_tail_prefix() {
        let cf = ContinuedFraction::from_quotients(&[1, 1, 1, 40]).unwrap();
        let v = cf.value_with_golden_tail(256);
        let back = expand(&v, 10).unwrap();
        assert_eq!(back.partial_quotients, vec![1, 1, 1, 40, 1, 1, 1, 1, 1, 1]);
        assert_eq!(back.return_times[..6], [1, 1, 2, 3, 122, 125]);
    }

    #[test]
    fn rational_quotients_of_convergent() {
        assert_eq!(rational_quotients(3, 5), vec![1, 1, 2]);
        assert_eq!(rational_quotients(1, 3), vec![3]);
    }

    #[test]
    fn parse_prefix_forms() {
        assert_eq!(
            parse_prefix("[1,1,1,40,1,1,...]").unwrap(),
            vec![1, 1, 1, 40, 1, 1]
        );
        assert!(parse_prefix("[]").is_err());
        assert!(parse_prefix("1,0").is_err());
    }
}
