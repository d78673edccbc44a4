//! Cross-ratios, their distortion under iterates, and a Koebe audit.
//!
//! For M ⋐ T with complementary components L and R:
//! a(M, T) = |M||T| / (|L||R|) and b(M, T) = |L||R| / (|L ∪ M||M ∪ R|).

use rug::Float;

use crate::arc::Arc;
use crate::circlemap::MapModel;
use crate::error::{Error, Result};
use crate::num::{ccw, frac, log2_abs, real};
use crate::partition::Skeleton;

#[derive(Debug, Clone)]
pub struct NestedPair {
    pub inner: Arc,
    pub outer: Arc,
}

impl NestedPair {
    pub fn new(inner: Arc, outer: Arc) -> Result<NestedPair> {
        let p = NestedPair { inner, outer };
        let (l, m, r) = p.pieces();
        if !(l > 0u32 && r > 0u32 && m > 0u32) {
            return Err(Error::DegeneratePair(
                "inner arc must sit strictly inside the outer arc".into(),
            ));
        }
        let total = Float::with_val(l.prec(), &l + &m) + &r;
        let dev = Float::with_val(l.prec(), &total - &p.outer.length).abs();
        if log2_abs(&dev) > log2_abs(&p.outer.length) - (l.prec() as f64) / 2.0 {
            return Err(Error::DegeneratePair(
                "inner arc is not contained in the outer arc".into(),
            ));
        }
        Ok(p)
    }

    /// Pair from four counterclockwise points t0 < m0 < m1 < t1.
    pub fn from_points(t0: &Float, m0: &Float, m1: &Float, t1: &Float) -> Result<NestedPair> {
        NestedPair::new(Arc::new(frac(m0), frac(m1)), Arc::new(frac(t0), frac(t1)))
    }

    /// Lengths |L|, |M|, |R|.
    pub fn pieces(&self) -> (Float, Float, Float) {
        let l = ccw(&self.outer.left, &self.inner.left);
        let r = ccw(&self.inner.right, &self.outer.right);
        (l, self.inner.length.clone(), r)
    }
}

/// a-cross-ratio of lengths |L|, |M|, |R|.
pub fn a_from_lengths(l: &Float, m: &Float, r: &Float) -> Result<Float> {
    if l.is_zero() || r.is_zero() {
        return Err(Error::DegeneratePair("a lateral component vanished".into()));
    }
    let p = l.prec();
    let t = Float::with_val(p, l + m) + r;
    let num = Float::with_val(p, m * &t);
    let den = Float::with_val(p, l * r);
    Ok(num / den)
}

/// b-cross-ratio of lengths |L|, |M|, |R|.
pub fn b_from_lengths(l: &Float, m: &Float, r: &Float) -> Result<Float> {
    if l.is_zero() || r.is_zero() {
        return Err(Error::DegeneratePair("a lateral component vanished".into()));
    }
    let p = l.prec();
    let num = Float::with_val(p, l * r);
    let lm = Float::with_val(p, l + m);
    let mr = Float::with_val(p, m + r);
    Ok(num / (lm * mr))
}

pub fn cross_ratio_a(p: &NestedPair) -> Result<Float> {
    let (l, m, r) = p.pieces();
    a_from_lengths(&l, &m, &r)
}

pub fn cross_ratio_b(p: &NestedPair) -> Result<Float> {
    let (l, m, r) = p.pieces();
    b_from_lengths(&l, &m, &r)
}

/// b for four increasing points on the line.
pub fn b_from_points(t0: &Float, m0: &Float, m1: &Float, t1: &Float) -> Result<Float> {
    let p = t0.prec();
    let l = Float::with_val(p, m0 - t0);
    let m = Float::with_val(p, m1 - m0);
    let r = Float::with_val(p, t1 - m1);
    if l <= 0u32 || m <= 0u32 || r <= 0u32 {
        return Err(Error::DegeneratePair("points are not increasing".into()));
    }
    b_from_lengths(&l, &m, &r)
}

/// Lifted images under F^k of the four points of the pair, as lengths (|L|, |M|, |R|).
fn image_pieces(map: &MapModel, k: usize, pair: &NestedPair) -> Result<(Float, Float, Float)> {
    let p = map.prec;
    let (l, m, r) = pair.pieces();
    let x0 = Float::with_val(p, &pair.outer.left);
    let x1 = Float::with_val(p, &x0 + &l);
    let x2 = Float::with_val(p, &x1 + &m);
    let x3 = Float::with_val(p, &x2 + &r);
    let mut xs = [x0, x1, x2, x3];
    for _ in 0..k {
        for x in xs.iter_mut() {
            *x = map.eval(x);
        }
    }
    let l2 = Float::with_val(p, &xs[1] - &xs[0]);
    let m2 = Float::with_val(p, &xs[2] - &xs[1]);
    let r2 = Float::with_val(p, &xs[3] - &xs[2]);
    let span = Float::with_val(p, &xs[3] - &xs[0]);
    if !(l2 > 0u32 && m2 > 0u32 && r2 > 0u32) || span >= 1u32 {
        return Err(Error::NonInjective(k));
    }
    Ok((l2, m2, r2))
}

/// D(f^k; M, T) = b(f^k M, f^k T) / b(M, T).
pub fn distortion(map: &MapModel, k: usize, pair: &NestedPair) -> Result<Float> {
    let (l, m, r) = pair.pieces();
    let before = b_from_lengths(&l, &m, &r)?;
    let (l2, m2, r2) = image_pieces(map, k, pair)?;
    let after = b_from_lengths(&l2, &m2, &r2)?;
    Ok(after / before)
}

/// Distortion of b under an arbitrary increasing map of the line.
pub fn distortion_on_line<F: Fn(&Float) -> Float>(
    f: F,
    t0: &Float,
    m0: &Float,
    m1: &Float,
    t1: &Float,
) -> Result<Float> {
    let before = b_from_points(t0, m0, m1, t1)?;
    let after = b_from_points(&f(t0), &f(m0), &f(m1), &f(t1))?;
    Ok(after / before)
}

/// Möbius map x ↦ (ax + b)/(cx + d).
pub fn mobius(coef: &[Float; 4], x: &Float) -> Float {
    let p = x.prec();
    let num = Float::with_val(p, &coef[0] * x) + &coef[1];
    let den = Float::with_val(p, &coef[2] * x) + &coef[3];
    num / den
}

/// Gauss–Legendre nodes and weights on [−1, 1], computed at precision `prec`.
pub fn gauss_legendre(n: usize, prec: u32) -> Vec<(Float, Float)> {
    let wp = prec + 32;
    let pi = crate::num::pi(wp);
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let guess = Float::with_val(wp, &pi * (4 * i as u32 - 1)) / (4 * n as u32 + 2);
        let mut x = guess.cos();
        let mut dp = real(wp, 0);
        for _ in 0..100 {
            let (p, d) = legendre(n, &x);
            let step = Float::with_val(wp, &p / &d);
            x -= &step;
            dp = d;
            if step.is_zero() || log2_abs(&step) < -(wp as f64) + 4.0 {
                break;
            }
        }
        let (_, d) = legendre(n, &x);
        dp = if d.is_zero() { dp } else { d };
        let x2 = Float::with_val(wp, &x * &x);
        let w = Float::with_val(wp, 2u32)
            / (Float::with_val(wp, 1u32 - x2) * Float::with_val(wp, &dp * &dp));
        out.push((Float::with_val(prec, &x), Float::with_val(prec, &w)));
    }
    out
}

fn legendre(n: usize, x: &Float) -> (Float, Float) {
    let p = x.prec();
    let mut p0 = real(p, 1);
    let mut p1 = x.clone();
    for k in 2..=n {
        let a = Float::with_val(p, x * &p1) * (2 * k as u32 - 1);
        let b = Float::with_val(p, &p0 * (k as u32 - 1));
        let p2 = (a - b) / k as u32;
        p0 = p1;
        p1 = p2;
    }
    let x2 = Float::with_val(p, x * x);
    let num = Float::with_val(p, x * &p1) - &p0;
    let d = num * n as u32 / (x2 - 1u32);
    (p1, d)
}

/// Adaptive Gauss–Legendre quadrature of `f` over [a, b].
pub fn integrate<F: Fn(&Float) -> Float>(f: &F, a: &Float, b: &Float, rel_tol: f64) -> Float {
    let prec = a.prec();
    let rule = gauss_legendre(20, prec);
    let whole = gl_panel(f, a, b, &rule);
    adapt(f, a, b, whole, &rule, rel_tol, 0)
}

fn gl_panel<F: Fn(&Float) -> Float>(f: &F, a: &Float, b: &Float, rule: &[(Float, Float)]) -> Float {
    let p = a.prec();
    let half = Float::with_val(p, b - a) / 2u32;
    let mid = Float::with_val(p, a + b) / 2u32;
    let mut s = real(p, 0);
    for (x, w) in rule {
        let t = Float::with_val(p, &half * x) + &mid;
        s += Float::with_val(p, w * &f(&t));
    }
    s * half
}

fn adapt<F: Fn(&Float) -> Float>(
    f: &F,
    a: &Float,
    b: &Float,
    whole: Float,
    rule: &[(Float, Float)],
    rel_tol: f64,
    depth: usize,
) -> Float {
    let p = a.prec();
    let mid = Float::with_val(p, a + b) / 2u32;
    let left = gl_panel(f, a, &mid, rule);
    let right = gl_panel(f, &mid, b, rule);
    let both = Float::with_val(p, &left + &right);
    let err = Float::with_val(p, &both - &whole).abs();
    let scale = Float::with_val(p, both.abs_ref());
    if depth >= 48 || err <= Float::with_val(p, &scale * rel_tol) {
        return both;
    }
    adapt(f, a, &mid, left, rule, rel_tol / 2.0, depth + 1)
        + adapt(f, &mid, b, right, rule, rel_tol / 2.0, depth + 1)
}

/// −∫_M |T| dx / ((x − t0)(t1 − x)), which equals log b(M, T).
pub fn poincare_log_b(t0: &Float, m0: &Float, m1: &Float, t1: &Float) -> Float {
    let p = t0.prec();
    let len = Float::with_val(p, t1 - t0);
    let g = |x: &Float| {
        let u = Float::with_val(p, x - t0);
        let v = Float::with_val(p, t1 - x);
        Float::with_val(p, &len / (u * v))
    };
    -integrate(&g, m0, m1, 2f64.powi(-(p as i32) / 2))
}

/// Number of arcs of the family that contain a common interior point, at most.
pub fn multiplicity(arcs: &[Arc]) -> usize {
    if arcs.is_empty() {
        return 0;
    }
    let origin = real(arcs[0].left.prec(), 0);
    // (position, +1 start / −1 end); ends sort before starts at equal positions
    let mut ev: Vec<(Float, i32)> = Vec::with_capacity(2 * arcs.len() + 2);
    let mut base = 0i32;
    for a in arcs {
        if a.length >= 1u32 {
            base += 1;
            continue;
        }
        let s = ccw(&origin, &a.left);
        let e = Float::with_val(s.prec(), &s + &a.length);
        if e > 1u32 {
            base += 1;
            ev.push((e - 1u32, -1));
            ev.push((s, 1));
        } else {
            ev.push((s, 1));
            ev.push((e, -1));
        }
    }
    ev.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
    let mut cur = base;
    let mut best = base;
    for (_, d) in ev {
        cur += d;
        best = best.max(cur);
    }
    best.max(0) as usize
}

#[derive(Debug, Clone)]
pub struct CriAudit {
    pub product: Float,
    pub multiplicity: usize,
    /// product^{1/m}; 1 when the family is empty.
    pub fitted_c: f64,
    pub factors: usize,
}

/// Products of one-step distortions D(f; f^j M, f^j T), j < k, over the given pairs.
pub fn cri_audit(map: &MapModel, items: &[(NestedPair, usize)]) -> Result<CriAudit> {
    let p = map.prec;
    let mut product = real(p, 1);
    let mut family = Vec::new();
    let mut factors = 0;
    for (pair, k) in items {
        let mut cur = pair.clone();
        for _ in 0..*k {
            family.push(cur.outer.clone());
            product *= distortion(map, 1, &cur)?;
            factors += 1;
            cur = push_forward(map, &cur);
        }
    }
    let m = multiplicity(&family);
    let fitted_c = if m == 0 {
        1.0
    } else {
        product.to_f64().powf(1.0 / m as f64)
    };
    Ok(CriAudit {
        product,
        multiplicity: m,
        fitted_c,
        factors,
    })
}

/// The pair (f(M), f(T)).
pub fn push_forward(map: &MapModel, pair: &NestedPair) -> NestedPair {
    let img = |x: &Float| frac(&map.eval(x));
    let t0 = img(&pair.outer.left);
    let t1 = img(&pair.outer.right);
    let m0 = img(&pair.inner.left);
    let m1 = img(&pair.inner.right);
    let mut outer = Arc::new(t0, t1);
    if pair.outer.length >= 1u32 {
        outer.length = real(map.prec, 1);
    }
    NestedPair {
        inner: Arc::new(m0, m1),
        outer,
    }
}

/// The pair used in the real-bounds argument at level n, based at c₀:
/// T = [f^{q_{n+1}}(c₀), f^{q_n}(c₀)] around c₀ and M = [c₀, f^{q_n + q_{n+1}}(c₀)].
pub fn level_pair(sk: &Skeleton, n: usize) -> Result<NestedPair> {
    let (qn, qn1) = (sk.q(n), sk.q(n + 1));
    let c = sk.point(0).clone();
    let a = sk.point(qn).clone();
    let b = sk.point(qn1).clone();
    let m = sk.point(qn + qn1).clone();
    if n.is_multiple_of(2) {
        NestedPair::new(Arc::new(c, m), Arc::new(b, a))
    } else {
        NestedPair::new(Arc::new(m, c), Arc::new(a, b))
    }
}

#[derive(Debug, Clone)]
pub struct KoebeReport {
    /// sup |Df^k| / inf |Df^k| over samples of M.
    pub ratio: f64,
    /// min(|f^k L|, |f^k R|) / |f^k M|.
    pub tau_observed: f64,
    pub tau_ok: bool,
    /// Σ_{j ≤ k} |f^j T|.
    pub total_length: f64,
}

pub fn koebe_check(map: &MapModel, k: usize, pair: &NestedPair, tau: f64) -> Result<KoebeReport> {
    let p = map.prec;
    let mut cur = pair.clone();
    let mut total = pair.outer.len_f64();
    for j in 0..k {
        if map.critical.iter().any(|c| cur.outer.contains(&c.position)) {
            return Err(Error::CriticalInside(j));
        }
        cur = push_forward(map, &cur);
        total += cur.outer.len_f64();
    }
    let (l2, m2, r2) = image_pieces(map, k, pair)?;
    let tau_observed = Float::with_val(p, crate::num::min_f(l2, r2) / &m2).to_f64();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let samples = 33;
    for s in 0..=samples {
        let t = real(p, s as f64 / samples as f64);
        let x = pair.inner.at(&t);
        let d = map.iterate_derivative(&x, k).abs();
        let l = log2_abs(&d);
        lo = lo.min(l);
        hi = hi.max(l);
    }
    let ratio = if k == 0 { 1.0 } else { (hi - lo).exp2() };
    Ok(KoebeReport {
        ratio,
        tau_observed,
        tau_ok: tau_observed >= tau,
        total_length: total,
    })
}

/// Largest half-size s (found by bisection) such that every pair T = [x, x + 3s·u],
/// M its middle third, placed at the sampled points `xs`, has D(f; M, T) < 1.
pub fn contraction_threshold(map: &MapModel, xs: &[Float], max_size: f64) -> Result<f64> {
    let p = map.prec;
    let contracts = |s: f64| -> Result<bool> {
        for x in xs {
            let t0 = Float::with_val(p, x);
            let step = real(p, s);
            let m0 = Float::with_val(p, &t0 + &step);
            let m1 = Float::with_val(p, &m0 + &step);
            let t1 = Float::with_val(p, &m1 + &step);
            let pair = NestedPair::from_points(&t0, &m0, &m1, &t1)?;
            if distortion(map, 1, &pair)? >= 1u32 {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if contracts(max_size)? {
        return Ok(max_size);
    }
    let (mut lo, mut hi) = (max_size * 2f64.powi(-40), max_size);
    if !contracts(lo)? {
        return Ok(0.0);
    }
    for _ in 0..50 {
        let mid = (lo * hi).sqrt();
        if contracts(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-6 {
            break;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlemap::{build_rotation, build_sine_family};
    use crate::num::golden;

    fn pts(v: [f64; 4]) -> [Float; 4] {
        v.map(|x| real(256, x))
    }

    #[test]
    fn symmetric_pair_values() {
        let l = real(256, 0.25);
        let m = real(256, 0.5);
        let a = a_from_lengths(&l, &m, &l).unwrap();
        let b = b_from_lengths(&l, &m, &l).unwrap();
        assert_eq!(a, 8);
        let inv = Float::with_val(256, 1u32 / &b);
        assert!(log2_abs(&(inv - 9u32)) < -250.0);
    }

    #[test]
    fn poincare_matches_log_b() {
        let [t0, m0, m1, t1] = pts([0.0, 0.25, 0.75, 1.0]);
        let lb = poincare_log_b(&t0, &m0, &m1, &t1);
        let want = -Float::with_val(256, 9).ln();
        assert!(log2_abs(&(lb - want)) < -100.0);
    }

    #[test]
    fn mobius_preserves_b() {
        let coef = [real(256, 2), real(256, 1), real(256, 0.5), real(256, 3)];
        let [t0, m0, m1, t1] = pts([0.1, 0.2, 0.5, 0.9]);
        let d = distortion_on_line(|x| mobius(&coef, x), &t0, &m0, &m1, &t1).unwrap();
        assert!(log2_abs(&(d - 1u32)) < -200.0);
    }

    #[test]
    fn rotation_distortion_is_one() {
        let r = build_rotation(&golden(256), 256).unwrap();
        let p = NestedPair::from_points(
            &real(256, 0.9),
            &real(256, 0.95),
            &real(256, 0.05),
            &real(256, 0.2),
        )
        .unwrap();
        let d = distortion(&r, 7, &p).unwrap();
        assert!(log2_abs(&(d - 1u32)) < -200.0);
    }

    #[test]
    fn negative_schwarzian_contracts() {
        let f = build_sine_family(1, &real(256, 0.1), 256).unwrap();
        let p = NestedPair::from_points(
            &real(256, 0.2),
            &real(256, 0.21),
            &real(256, 0.22),
            &real(256, 0.23),
        )
        .unwrap();
        assert!(distortion(&f, 1, &p).unwrap() < 1u32);
    }

    #[test]
    fn multiplicity_counts_overlaps() {
        let a = Arc::new(real(64, 0.1), real(64, 0.4));
        let b = Arc::new(real(64, 0.3), real(64, 0.6));
        let c = Arc::new(real(64, 0.4), real(64, 0.5));
        let d = Arc::new(real(64, 0.9), real(64, 0.35));
        assert_eq!(multiplicity(&[]), 0);
        assert_eq!(multiplicity(&[a.clone(), c.clone()]), 1);
        assert_eq!(multiplicity(&[a, b, c, d]), 3);
    }

    #[test]
    fn empty_audit() {
        let r = build_rotation(&golden(256), 256).unwrap();
        let a = cri_audit(&r, &[]).unwrap();
        assert_eq!(a.product, 1);
        assert_eq!(a.multiplicity, 0);
    }

    #[test]
    fn koebe_trivial_cases() {
        let r = build_rotation(&golden(256), 256).unwrap();
        let p = NestedPair::from_points(
            &real(256, 0.1),
            &real(256, 0.2),
            &real(256, 0.3),
            &real(256, 0.4),
        )
        .unwrap();
        assert_eq!(koebe_check(&r, 5, &p, 0.5).unwrap().ratio, 1.0);
        let f = build_sine_family(1, &real(256, 0.1), 256).unwrap();
        assert_eq!(koebe_check(&f, 0, &p, 0.5).unwrap().ratio, 1.0);
    }
}
