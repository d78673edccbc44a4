//! Multicritical circle map families.
//!
//! Every map is stored through its lift F: R → R with F(x + 1) = F(x) + 1.
//! Three families are available: the sine family with `m` cubic critical
//! points, a piecewise canonical family with exact power laws on windows
//! around each critical point, and rigid rotations.

use std::sync::{Arc as Shared, Mutex};

use rug::ops::Pow;
use rug::Float;

use crate::arc::Arc;
use crate::error::{Error, Result};
use crate::num::{ccw, check_precision, frac, pi, real};
use crate::rotation::{self, ContinuedFraction, RotationEstimate};

/// Value and first three derivatives of the lift at a point.
#[derive(Debug, Clone)]
pub struct Jet {
    pub f: Float,
    pub d1: Float,
    pub d2: Float,
    pub d3: Float,
}

#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub position: Float,
    pub exponent: Float,
    pub half_width: Float,
    /// Coefficient λ of the local form (canonical family only).
    pub slope: Option<Float>,
}

impl CriticalPoint {
    pub fn window(&self) -> Arc {
        let p = self.position.prec();
        let l = frac(&Float::with_val(p, &self.position - &self.half_width));
        let r = frac(&Float::with_val(p, &self.position + &self.half_width));
        Arc::new(l, r)
    }
}

/// Parameters for one critical point of the canonical family.
#[derive(Debug, Clone)]
pub struct CriticalSpec {
    pub position: Float,
    pub exponent: Float,
    pub half_width: Option<Float>,
    pub slope: Option<Float>,
}

#[derive(Debug, Clone)]
enum Piece {
    Window {
        c: Float,
        s: Float,
        lambda: Float,
        lo: Float,
    },
    /// Quintic in t = (x − lo)/h with coefficients for F − ω.
    Join {
        lo: Float,
        h: Float,
        coef: [Float; 6],
    },
}

impl Piece {
    fn lo(&self) -> &Float {
        match self {
            Piece::Window { lo, .. } | Piece::Join { lo, .. } => lo,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Canonical {
    start: Float,
    pieces: Vec<Piece>,
}

#[derive(Debug, Clone)]
pub enum Family {
    Sine { m: u32 },
    Canonical(Canonical),
    Rotation,
}

/// Record of a tuning run: how deep the rotation-number combinatorics is certified.
#[derive(Debug, Clone)]
pub struct Tuning {
    pub target: Float,
    /// Number of convergents p_n/q_n on the correct side of ρ(ω).
    pub certified_depth: usize,
    pub expansion: ContinuedFraction,
    pub omega_low: Float,
    pub omega_high: Float,
}

#[derive(Debug)]
pub struct Orbit {
    pub base: Float,
    /// f^k(base) reduced to [0, 1).
    pub points: Vec<Float>,
    /// Integer parts of the lifted orbit: F^k(base) = points[k] + winding[k].
    pub winding: Vec<i64>,
    /// Estimated number of correct bits at the end of the orbit.
    pub bits_left: f64,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lift(&self, k: usize) -> Float {
        Float::with_val(self.points[k].prec(), &self.points[k] + self.winding[k])
    }
}

#[derive(Debug, Clone)]
pub struct MapModel {
    pub family: Family,
    pub omega: Float,
    pub critical: Vec<CriticalPoint>,
    pub prec: u32,
    pub tuning: Option<Tuning>,
    cache: Shared<Mutex<Vec<Shared<Orbit>>>>,
}

impl MapModel {
    fn assemble(family: Family, omega: Float, critical: Vec<CriticalPoint>, prec: u32) -> MapModel {
        MapModel {
            family,
            omega: Float::with_val(prec, omega),
            critical,
            prec,
            tuning: None,
            cache: Shared::new(Mutex::new(Vec::new())),
        }
    }

    /// Same family with a different lift offset; orbit cache starts empty.
    pub fn with_omega(&self, omega: Float) -> MapModel {
        MapModel::assemble(self.family.clone(), omega, self.critical.clone(), self.prec)
    }

    pub fn n_critical(&self) -> usize {
        self.critical.len()
    }

    pub fn kind_name(&self) -> &'static str {
        match self.family {
            Family::Sine { .. } => "sine",
            Family::Canonical(_) => "canonical",
            Family::Rotation => "rotation",
        }
    }

    /// Lift F(x).
    pub fn eval(&self, x: &Float) -> Float {
        let p = self.prec;
        match &self.family {
            Family::Rotation => Float::with_val(p, x + &self.omega),
            Family::Sine { m } => {
                let k = Float::with_val(p, pi(p) * (2 * *m));
                let s = Float::with_val(p, x * &k).sin();
                Float::with_val(p, x + &self.omega) - s / k
            }
            Family::Canonical(c) => c.eval(x, p) + &self.omega,
        }
    }

    /// F and its first three derivatives.
    pub fn jet(&self, x: &Float) -> Jet {
        let p = self.prec;
        match &self.family {
            Family::Rotation => Jet {
                f: Float::with_val(p, x + &self.omega),
                d1: real(p, 1),
                d2: real(p, 0),
                d3: real(p, 0),
            },
            Family::Sine { m } => {
                let k = Float::with_val(p, pi(p) * (2 * *m));
                let mut s = Float::with_val(p, x * &k);
                let mut c = Float::new(p);
                s.sin_cos_mut(&mut c);
                let f = Float::with_val(p, x + &self.omega) - Float::with_val(p, &s / &k);
                let d1 = Float::with_val(p, 1u32 - &c);
                let d2 = Float::with_val(p, &k * &s);
                let d3 = Float::with_val(p, &k * &k) * &c;
                Jet { f, d1, d2, d3 }
            }
            Family::Canonical(cn) => {
                let mut j = cn.jet(x, p);
                j.f += &self.omega;
                j
            }
        }
    }

    /// Derivative of the given order, 1 to 3.
    pub fn deriv(&self, x: &Float, order: u32) -> Result<Float> {
        let j = self.jet(x);
        match order {
            1 => Ok(j.d1),
            2 => Ok(j.d2),
            3 => Ok(j.d3),
            _ => Err(Error::InvalidInput(format!(
                "derivative order {order} not in 1..=3"
            ))),
        }
    }

    /// Sf = f‴/f′ − (3/2)(f″/f′)².
    pub fn schwarzian(&self, x: &Float) -> Result<Float> {
        let p = self.prec;
        if let Family::Canonical(cn) = &self.family {
            if let Some((c, s)) = cn.window_at(x, p) {
                let d = Float::with_val(p, &cn.reduce(x, p).0 - c);
                if d.is_zero() {
                    return Err(Error::AtCriticalPoint);
                }
                let num = Float::with_val(p, s * s) - 1u32;
                let den = Float::with_val(p, &d * &d) * 2u32;
                return Ok(-(num / den));
            }
        }
        let j = self.jet(x);
        if j.d1.is_zero() {
            return Err(Error::AtCriticalPoint);
        }
        Ok(schwarzian_from_jet(&j))
    }

    /// Fast double-precision derivative, used for error tracking.
    pub fn d1_f64(&self, x: f64) -> f64 {
        match &self.family {
            Family::Rotation => 1.0,
            Family::Sine { m } => 1.0 - (2.0 * std::f64::consts::PI * *m as f64 * x).cos(),
            Family::Canonical(cn) => cn.d1_f64(x),
        }
    }

    /// Whether `x` is within `tol` of a declared critical point.
    pub fn near_critical(&self, x: &Float, tol: &Float) -> Option<usize> {
        for (i, c) in self.critical.iter().enumerate() {
            let d = crate::num::signed_gap(&c.position, x).abs();
            if d <= *tol {
                return Some(i);
            }
        }
        None
    }

    /// Index of the window containing `x`.
    pub fn window_index(&self, x: &Float) -> Option<usize> {
        self.critical.iter().position(|c| c.window().contains(x))
    }

    /// Points f⁰(x₀), …, fⁿ(x₀) reduced mod 1.
    pub fn iterate_orbit(&self, x0: &Float, n: usize) -> Result<Orbit> {
        let p = self.prec;
        let base = frac(&Float::with_val(p, x0));
        let mut points = Vec::with_capacity(n + 1);
        let mut winding = Vec::with_capacity(n + 1);
        points.push(base.clone());
        winding.push(0i64);
        let mut x = base.clone();
        let mut w = 0i64;
        let unit = 2f64.powi(-(p as i32));
        let mut err = unit;
        for k in 0..n {
            let d = self.d1_f64(x.to_f64()).abs();
            let y = self.eval(&x);
            let fl = y.clone().floor();
            let shift = fl.to_f64() as i64;
            x = y - fl;
            w += shift;
            err = err * d + unit;
            if err > 2f64.powi(-8) {
                return Err(Error::PrecisionExhausted {
                    iterate: k + 1,
                    bits_left: -err.log2(),
                });
            }
            points.push(x.clone());
            winding.push(w);
        }
        Ok(Orbit {
            base,
            points,
            winding,
            bits_left: -err.log2(),
        })
    }

    /// Orbit of critical point `k` with at least `n + 1` points, memoized.
    pub fn critical_orbit(&self, k: usize, n: usize) -> Result<Shared<Orbit>> {
        let base = self
            .critical
            .get(k)
            .map(|c| c.position.clone())
            .unwrap_or_else(|| real(self.prec, 0));
        self.cached_orbit(&base, n)
    }

    pub fn cached_orbit(&self, base: &Float, n: usize) -> Result<Shared<Orbit>> {
        {
            let cache = self.cache.lock().expect("orbit cache poisoned");
            for o in cache.iter() {
                if o.base == *base && o.len() > n {
                    return Ok(o.clone());
                }
            }
        }
        let orbit = Shared::new(self.iterate_orbit(base, n)?);
        let mut cache = self.cache.lock().expect("orbit cache poisoned");
        cache.retain(|o| o.base != *base);
        cache.push(orbit.clone());
        Ok(orbit)
    }

    /// Inverse of the lift by bisection, to about 1.5× the working precision's tolerance.
    pub fn inverse(&self, y: &Float) -> Float {
        let p = self.prec;
        let mut lo = Float::with_val(p, y - &self.omega) - 1u32;
        let mut hi = Float::with_val(p, y - &self.omega) + 1u32;
        for _ in 0..(p as usize + p as usize / 2 + 4) {
            let mid = Float::with_val(p, &lo + &hi) / 2u32;
            if self.eval(&mid) < *y {
                lo = mid;
            } else {
                hi = mid;
            }
            if Float::with_val(p, &hi - &lo).is_zero() {
                break;
            }
        }
        Float::with_val(p, &lo + &hi) / 2u32
    }

    /// f^k(x) on the circle, k ≥ 0 forward or k < 0 backward.
    /// F^k(x) on the lift.
    pub fn iterate_lift(&self, x: &Float, k: u64) -> Float {
        let mut y = Float::with_val(self.prec, x);
        for _ in 0..k {
            y = self.eval(&y);
        }
        y
    }

    pub fn iterate(&self, x: &Float, k: i64) -> Float {
        let mut y = Float::with_val(self.prec, x);
        if k >= 0 {
            for _ in 0..k {
                y = frac(&self.eval(&y));
            }
        } else {
            for _ in 0..(-k) {
                y = frac(&self.inverse(&y));
            }
        }
        y
    }

    /// Combinatorics of the map: the tuning target when tuned, the angle of a
    /// rotation, otherwise an orbit estimate.
    pub fn combinatorics(&self) -> Result<ContinuedFraction> {
        if let Some(t) = &self.tuning {
            return Ok(t.expansion.clone());
        }
        match self.family {
            Family::Rotation => {
                let w = frac(&self.omega);
                expansion_for_budget(&w, 1 << 20)
            }
            _ => {
                let est = rotation_number(self, 20_000, 1.0)?;
                if est.prefix.is_empty() {
                    return Err(Error::NotConverged(
                        "rotation number bracket too wide".into(),
                    ));
                }
                ContinuedFraction::from_quotients(&est.prefix)
            }
        }
    }

    /// Largest orbit index whose circular position is fixed by the known combinatorics.
    pub fn certified_orbit_length(&self) -> Option<u64> {
        let t = self.tuning.as_ref()?;
        let d = t.certified_depth.min(t.expansion.depth());
        if d < 2 {
            return Some(1);
        }
        Some(t.expansion.q(d - 1) + t.expansion.q(d - 2))
    }

    /// Derivative of f^k at x with the orbit, by the chain rule.
    pub fn iterate_derivative(&self, x: &Float, k: usize) -> Float {
        let mut y = Float::with_val(self.prec, x);
        let mut d = real(self.prec, 1);
        for _ in 0..k {
            let j = self.jet(&y);
            d *= &j.d1;
            y = frac(&j.f);
        }
        d
    }
}

pub fn schwarzian_from_jet(j: &Jet) -> Float {
    let p = j.d1.prec();
    let a = Float::with_val(p, &j.d3 / &j.d1);
    let b = Float::with_val(p, &j.d2 / &j.d1);
    a - Float::with_val(p, &b * &b) * 1.5f64
}

/// Sine family F(x) = x + ω − sin(2πmx)/(2πm).
pub fn build_sine_family(m: u32, omega: &Float, prec: u32) -> Result<MapModel> {
    if m == 0 {
        return Err(Error::InvalidInput("sine family needs m ≥ 1".into()));
    }
    check_precision(prec)?;
    let mut crit = Vec::new();
    let gap = 1.0 / m as f64;
    let w = (gap / 2.0).min(0.05);
    for k in 0..m {
        crit.push(CriticalPoint {
            position: Float::with_val(prec, k) / m,
            exponent: real(prec, 3),
            half_width: real(prec, w),
            slope: None,
        });
    }
    Ok(MapModel::assemble(
        Family::Sine { m },
        omega.clone(),
        crit,
        prec,
    ))
}

pub fn build_rotation(omega: &Float, prec: u32) -> Result<MapModel> {
    check_precision(prec)?;
    Ok(MapModel::assemble(
        Family::Rotation,
        omega.clone(),
        Vec::new(),
        prec,
    ))
}

/// Below this the derivative of a join counts as vanishing.
pub const JOIN_DERIVATIVE_FLOOR: f64 = 1e-9;

/// Piecewise canonical map: exact power law on each window, quintic joins in between.
pub fn build_piecewise_canonical(
    specs: &[CriticalSpec],
    omega: &Float,
    prec: u32,
) -> Result<MapModel> {
    check_precision(prec)?;
    if specs.is_empty() {
        return Err(Error::InvalidInput(
            "canonical family needs at least one critical point".into(),
        ));
    }
    let mut sorted: Vec<CriticalSpec> = specs
        .iter()
        .map(|s| CriticalSpec {
            position: frac(&Float::with_val(prec, &s.position)),
            exponent: Float::with_val(prec, &s.exponent),
            half_width: s.half_width.as_ref().map(|w| Float::with_val(prec, w)),
            slope: s.slope.as_ref().map(|l| Float::with_val(prec, l)),
        })
        .collect();
    sorted.sort_by(|a, b| a.position.partial_cmp(&b.position).unwrap());
    let n = sorted.len();
    for s in &sorted {
        if s.exponent <= 1u32 {
            return Err(Error::InvalidInput(
                "critical exponents must exceed 1".into(),
            ));
        }
        if let Some(l) = &s.slope {
            if *l <= 0u32 {
                return Err(Error::InvalidInput("window slopes must be positive".into()));
            }
        }
    }
    let mut crit = Vec::with_capacity(n);
    for i in 0..n {
        let w = match &sorted[i].half_width {
            Some(w) => {
                if *w <= 0u32 {
                    return Err(Error::InvalidInput(
                        "window half-width must be positive".into(),
                    ));
                }
                w.clone()
            }
            None => {
                let mut w = real(prec, 0.05);
                if n > 1 {
                    let next = ccw(&sorted[i].position, &sorted[(i + 1) % n].position);
                    let prev = ccw(&sorted[(i + n - 1) % n].position, &sorted[i].position);
                    let half = crate::num::min_f(next, prev) / 2u32;
                    if half < w {
                        w = half;
                    }
                }
                w
            }
        };
        let s = sorted[i].exponent.clone();
        let lambda = sorted[i]
            .slope
            .clone()
            .unwrap_or_else(|| edge_slope(&s, &w, 1.0));
        crit.push(CriticalPoint {
            position: sorted[i].position.clone(),
            exponent: s,
            half_width: w,
            slope: Some(lambda),
        });
    }
    for i in 0..n {
        let j = (i + 1) % n;
        let mut gap = ccw(&crit[i].position, &crit[j].position);
        if n == 1 {
            gap = real(prec, 1);
        }
        let need = Float::with_val(prec, &crit[i].half_width + &crit[j].half_width);
        if gap <= need {
            return Err(Error::WindowsOverlap(i, j));
        }
    }
    // Unset slopes start at unit edge derivative and are halved until every join is monotone.
    let mut edge = 1.0;
    let canon = loop {
        match Canonical::build(&crit, prec) {
            Ok(c) => break c,
            Err(Error::NonMonotoneJoin { .. })
                if edge > 1e-3 && sorted.iter().any(|s| s.slope.is_none()) =>
            {
                edge /= 2.0;
                for (c, sp) in crit.iter_mut().zip(&sorted) {
                    if sp.slope.is_none() {
                        c.slope = Some(edge_slope(&c.exponent, &c.half_width, edge));
                    }
                }
            }
            Err(e) => return Err(e),
        }
    };
    Ok(MapModel::assemble(
        Family::Canonical(canon),
        omega.clone(),
        crit,
        prec,
    ))
}

/// λ giving derivative `edge` at distance `w` from the critical point.
fn edge_slope(s: &Float, w: &Float, edge: f64) -> Float {
    let p = s.prec();
    let e = Float::with_val(p, s - 1u32);
    let wp = w.clone().pow(&e);
    Float::with_val(p, edge / (wp * s))
}

impl Canonical {
    fn build(crit: &[CriticalPoint], prec: u32) -> Result<Canonical> {
        let n = crit.len();
        let start = Float::with_val(prec, &crit[0].position - &crit[0].half_width);
        let mut pieces = Vec::with_capacity(2 * n);
        for i in 0..n {
            let c = crit[i].position.clone();
            let s = crit[i].exponent.clone();
            let lambda = crit[i].slope.clone().expect("canonical slope");
            let w = crit[i].half_width.clone();
            pieces.push(Piece::Window {
                c: c.clone(),
                s: s.clone(),
                lambda: lambda.clone(),
                lo: Float::with_val(prec, &c - &w),
            });
            let (c1, s1, l1, w1) = if i + 1 < n {
                (
                    crit[i + 1].position.clone(),
                    crit[i + 1].exponent.clone(),
                    crit[i + 1].slope.clone().unwrap(),
                    crit[i + 1].half_width.clone(),
                )
            } else {
                (
                    Float::with_val(prec, &crit[0].position + 1u32),
                    crit[0].exponent.clone(),
                    crit[0].slope.clone().unwrap(),
                    crit[0].half_width.clone(),
                )
            };
            let lo = Float::with_val(prec, &c + &w);
            let hi = Float::with_val(prec, &c1 - &w1);
            let h = Float::with_val(prec, &hi - &lo);
            let right = window_jet(&c, &s, &lambda, &w, prec);
            let mw1 = Float::with_val(prec, -&w1);
            let left = window_jet(&c1, &s1, &l1, &mw1, prec);
            let v0 = Float::with_val(prec, &c + &right.0);
            let v1 = Float::with_val(prec, &c1 + &left.0);
            if v1 <= v0 {
                return Err(Error::NonMonotoneJoin {
                    window: i,
                    min_derivative: 0.0,
                });
            }
            let coef = quintic_hermite(&v0, &right.1, &right.2, &v1, &left.1, &left.2, &h);
            let piece = Piece::Join { lo, h, coef };
            let min_d = join_min_derivative(&piece);
            if min_d < JOIN_DERIVATIVE_FLOOR {
                return Err(Error::NonMonotoneJoin {
                    window: i,
                    min_derivative: min_d,
                });
            }
            pieces.push(piece);
        }
        Ok(Canonical { start, pieces })
    }

    /// Reduces x into [start, start + 1), returning the reduced point and the shift.
    fn reduce(&self, x: &Float, prec: u32) -> (Float, Float) {
        let k = Float::with_val(prec, x - &self.start).floor();
        (Float::with_val(prec, x - &k), k)
    }

    fn locate(&self, y: &Float) -> usize {
        let mut lo = 0usize;
        let mut hi = self.pieces.len();
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.pieces[mid].lo() <= y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn window_at<'a>(&'a self, x: &Float, prec: u32) -> Option<(&'a Float, &'a Float)> {
        let (y, _) = self.reduce(x, prec);
        match &self.pieces[self.locate(&y)] {
            Piece::Window { c, s, .. } => Some((c, s)),
            Piece::Join { .. } => None,
        }
    }

    fn eval(&self, x: &Float, prec: u32) -> Float {
        self.jet_inner(x, prec, false).f
    }

    fn jet(&self, x: &Float, prec: u32) -> Jet {
        self.jet_inner(x, prec, true)
    }

    fn jet_inner(&self, x: &Float, prec: u32, derivs: bool) -> Jet {
        let (y, k) = self.reduce(x, prec);
        let piece = &self.pieces[self.locate(&y)];
        let mut j = match piece {
            Piece::Window { c, s, lambda, .. } => {
                let d = Float::with_val(prec, &y - c);
                if derivs {
                    let (v, d1, d2, d3) = window_jet(c, s, lambda, &d, prec);
                    Jet {
                        f: Float::with_val(prec, c + v),
                        d1,
                        d2,
                        d3,
                    }
                } else {
                    let f = Float::with_val(prec, c + window_value(s, lambda, &d, prec));
                    Jet {
                        f,
                        d1: real(prec, 0),
                        d2: real(prec, 0),
                        d3: real(prec, 0),
                    }
                }
            }
            Piece::Join { lo, h, coef } => {
                let t = Float::with_val(prec, &y - lo) / h;
                poly_jet(coef, &t, h, prec, derivs)
            }
        };
        j.f += &k;
        j
    }

    fn d1_f64(&self, x: f64) -> f64 {
        let start = self.start.to_f64();
        let y = x - (x - start).floor();
        let yf = real(53, y);
        let piece = &self.pieces[self.locate(&yf)];
        match piece {
            Piece::Window { c, s, lambda, .. } => {
                let d = (y - c.to_f64()).abs();
                let s = s.to_f64();
                lambda.to_f64() * s * d.powf(s - 1.0)
            }
            Piece::Join { lo, h, coef } => {
                let h = h.to_f64();
                let t = (y - lo.to_f64()) / h;
                let c: Vec<f64> = coef.iter().map(|v| v.to_f64()).collect();
                (c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])))) / h
            }
        }
    }
}

/// λ d|d|^{s−1} alone.
fn window_value(s: &Float, lambda: &Float, d: &Float, prec: u32) -> Float {
    let ad = Float::with_val(prec, d.abs_ref());
    let mag = match s.to_u32_saturating() {
        Some(k) if *s == k => ad.pow(k),
        _ => ad.pow(s),
    };
    let v = Float::with_val(prec, lambda * mag);
    if *d < 0u32 {
        -v
    } else {
        v
    }
}

/// λ d|d|^{s−1} and its first three derivatives in d.
fn window_jet(
    _c: &Float,
    s: &Float,
    lambda: &Float,
    d: &Float,
    prec: u32,
) -> (Float, Float, Float, Float) {
    if d.is_zero() {
        return (real(prec, 0), real(prec, 0), real(prec, 0), real(prec, 0));
    }
    let ad = Float::with_val(prec, d.abs_ref());
    let sgn = if *d < 0u32 { -1i32 } else { 1 };
    let sm1 = Float::with_val(prec, s - 1u32);
    let sm2 = Float::with_val(prec, s - 2u32);
    let p1 = ad.clone().pow(&sm1);
    let v = Float::with_val(prec, lambda * &p1) * &ad * sgn;
    let d1 = Float::with_val(prec, lambda * s) * &p1;
    let p2 = Float::with_val(prec, &p1 / &ad);
    let d2 = Float::with_val(prec, lambda * s) * &sm1 * &p2 * sgn;
    let p3 = Float::with_val(prec, &p2 / &ad);
    let d3 = Float::with_val(prec, lambda * s) * &sm1 * &sm2 * &p3;
    (v, d1, d2, d3)
}

/// Coefficients of the quintic on [0, 1] matching value, slope and curvature
/// at both ends; slopes are in x-units and rescaled by h.
fn quintic_hermite(
    v0: &Float,
    d0: &Float,
    e0: &Float,
    v1: &Float,
    d1: &Float,
    e1: &Float,
    h: &Float,
) -> [Float; 6] {
    let p = v0.prec();
    let h2 = Float::with_val(p, h * h);
    let c0 = v0.clone();
    let c1 = Float::with_val(p, d0 * h);
    let c2 = Float::with_val(p, e0 * &h2) / 2u32;
    let a = Float::with_val(p, v1 - &c0) - &c1 - &c2;
    let b = Float::with_val(p, d1 * h) - &c1 - Float::with_val(p, &c2 * 2u32);
    let cc = Float::with_val(p, e1 * &h2) - Float::with_val(p, &c2 * 2u32);
    let c3 = Float::with_val(p, &a * 10u32) - Float::with_val(p, &b * 4u32)
        + Float::with_val(p, &cc / 2u32);
    let c4 = Float::with_val(p, &b * 7u32) - Float::with_val(p, &a * 15u32) - &cc;
    let c5 = Float::with_val(p, &a * 6u32) - Float::with_val(p, &b * 3u32)
        + Float::with_val(p, &cc / 2u32);
    [c0, c1, c2, c3, c4, c5]
}

fn poly_jet(c: &[Float; 6], t: &Float, h: &Float, prec: u32, derivs: bool) -> Jet {
    let mut f = c[5].clone();
    for i in (0..5).rev() {
        f = f * t + &c[i];
    }
    if !derivs {
        return Jet {
            f,
            d1: real(prec, 0),
            d2: real(prec, 0),
            d3: real(prec, 0),
        };
    }
    let mut g1 = Float::with_val(prec, &c[5] * 5u32);
    for i in (1..5).rev() {
        g1 = g1 * t + Float::with_val(prec, &c[i] * i as u32);
    }
    let mut g2 = Float::with_val(prec, &c[5] * 20u32);
    for i in (2..5).rev() {
        g2 = g2 * t + Float::with_val(prec, &c[i] * (i * (i - 1)) as u32);
    }
    let mut g3 = Float::with_val(prec, &c[5] * 60u32);
    for i in (3..5).rev() {
        g3 = g3 * t + Float::with_val(prec, &c[i] * (i * (i - 1) * (i - 2)) as u32);
    }
    let h2 = Float::with_val(prec, h * h);
    let h3 = Float::with_val(prec, &h2 * h);
    Jet {
        f,
        d1: g1 / h,
        d2: g2 / h2,
        d3: g3 / h3,
    }
}

fn join_min_derivative(piece: &Piece) -> f64 {
    let Piece::Join { h, coef, .. } = piece else {
        return f64::INFINITY;
    };
    let c: Vec<f64> = coef.iter().map(|v| v.to_f64()).collect();
    let h = h.to_f64();
    let der = |t: f64| {
        (c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])))) / h
    };
    let n = 4096;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let v = der(t);
        if v < best.0 {
            best = (v, t);
        }
    }
    // golden-section polish around the sampled minimum
    let (mut a, mut b) = (
        (best.1 - 1.0 / n as f64).max(0.0),
        (best.1 + 1.0 / n as f64).min(1.0),
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if der(x1) < der(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    best.0.min(der(0.5 * (a + b)))
}

/// Options for [`tune_omega`].
#[derive(Debug, Clone)]
pub struct TuneOptions {
    /// Target width of the ω bracket.
    pub tol: f64,
    /// Longest orbit used to read the combinatorics.
    pub max_iterates: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            tol: 2f64.powi(-80),
            max_iterates: 50_000,
        }
    }
}

enum Verdict {
    Raise,
    Lower,
    Match,
}

/// Expansion of `target` deep enough that its last return time exceeds `budget`.
pub fn expansion_for_budget(target: &Float, budget: usize) -> Result<ContinuedFraction> {
    let mut depth = 2;
    loop {
        let cf = rotation::expand(target, depth)?;
        if cf.q(depth - 1) as usize > budget || depth > 400 {
            return ContinuedFraction::from_quotients(&cf.partial_quotients[..depth - 1]);
        }
        depth += 1;
    }
}

/// Verdict, depth reached and the displacement F^q(c₀) − c₀ at that depth.
fn classify(map: &MapModel, cf: &ContinuedFraction) -> (Verdict, usize, Float) {
    let p = map.prec;
    let x0 = map
        .critical
        .first()
        .map(|c| c.position.clone())
        .unwrap_or_else(|| real(p, 0));
    let mut x = x0.clone();
    let mut it = 0u64;
    for n in 0..cf.depth() {
        while it < cf.q(n) {
            x = map.eval(&x);
            it += 1;
        }
        let d = Float::with_val(p, &x - &x0) - cf.p(n);
        let want = ContinuedFraction::side(n);
        let got = if d > 0u32 {
            1
        } else if d < 0u32 {
            -1
        } else {
            0
        };
        if got != want {
            return (
                if want > 0 {
                    Verdict::Raise
                } else {
                    Verdict::Lower
                },
                n,
                d,
            );
        }
    }
    let moved = Float::with_val(p, &x - &x0);
    (Verdict::Match, cf.depth(), moved)
}

/// Bisects ω until ρ(ω) follows `target`'s combinatorics as far as the orbit
/// budget can see, or until the ω bracket is narrower than `tol`.
pub fn tune_omega(template: &MapModel, target: &Float, opts: &TuneOptions) -> Result<MapModel> {
    let p = template.prec;
    let target = Float::with_val(p, target);
    let cf = expansion_for_budget(&target, opts.max_iterates)?;
    if let Family::Rotation = template.family {
        let mut m = template.with_omega(target.clone());
        m.tuning = Some(Tuning {
            target: target.clone(),
            certified_depth: cf.depth(),
            expansion: cf,
            omega_low: target.clone(),
            omega_high: target,
        });
        return Ok(m);
    }
    let mut lo = real(p, 0);
    let mut hi = real(p, 1);
    if !matches!(
        classify(&template.with_omega(lo.clone()), &cf).0,
        Verdict::Raise
    ) {
        return Err(Error::NotBracketed("ρ(0) is not below the target".into()));
    }
    if !matches!(
        classify(&template.with_omega(hi.clone()), &cf).0,
        Verdict::Lower
    ) {
        return Err(Error::NotBracketed("ρ(1) is not above the target".into()));
    }
    // A Match only proves the signs at c₀. Inside the plateau of the last
    // convergent c₀ can still sit on the right side, so the bracket keeps
    // shrinking on the displacement of F^q(c₀) against the target's.
    let last = cf.depth() - 1;
    let shift = Float::with_val(p, &target * cf.q(last));
    let tol = opts.tol.max(2f64.powi(8 - p as i32));
    let mut best = None;
    for _ in 0..(4 * p as usize) {
        if Float::with_val(p, &hi - &lo).to_f64() < tol {
            break;
        }
        let mid = Float::with_val(p, &lo + &hi) / 2u32;
        let m = template.with_omega(mid.clone());
        match classify(&m, &cf) {
            (Verdict::Raise, ..) => lo = mid,
            (Verdict::Lower, ..) => hi = mid,
            (Verdict::Match, depth, moved) => {
                let ahead = moved > shift;
                best = Some((mid.clone(), depth));
                if ahead {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
    }
    let (omega, depth) = match best {
        Some(b) => b,
        None => {
            if Float::with_val(p, &hi - &lo).to_f64() >= tol {
                return Err(Error::NotConverged(format!(
                    "ω bracket still {:e}",
                    (hi - lo).to_f64()
                )));
            }
            let mid = Float::with_val(p, &lo + &hi) / 2u32;
            let depth = classify(&template.with_omega(mid.clone()), &cf).1;
            (mid, depth)
        }
    };
    let mut m = template.with_omega(omega);
    let mut depth = depth.min(cf.depth());
    while depth >= 2
        && !orbit_order_matches(&m, &target, (cf.q(depth - 1) + cf.q(depth - 2)) as usize)
    {
        depth -= 1;
    }
    m.tuning = Some(Tuning {
        target,
        certified_depth: depth,
        expansion: cf,
        omega_low: lo,
        omega_high: hi,
    });
    Ok(m)
}

/// Fixed-point key of x ∈ [0, 1) with 128 fractional bits.
fn key128(x: &Float) -> u128 {
    let scaled = Float::with_val(
        x.prec().max(160),
        x * &Float::with_val(160, Float::u_exp(1, 128)),
    );
    scaled
        .to_integer()
        .and_then(|i| i.to_u128())
        .unwrap_or(u128::MAX)
}

/// Whether f^k(c₀), k < len, sit on the circle in the same cyclic order as kρ mod 1.
pub fn orbit_order_matches(map: &MapModel, rho: &Float, len: usize) -> bool {
    let p = map.prec;
    let x0 = map
        .critical
        .first()
        .map(|c| c.position.clone())
        .unwrap_or_else(|| real(p, 0));
    let step = key128(&frac(rho));
    let mut keys: Vec<(u128, u128)> = Vec::with_capacity(len);
    let mut x = x0.clone();
    let mut r = 0u128;
    for _ in 0..len {
        keys.push((key128(&ccw(&x0, &x)), r));
        x = frac(&map.eval(&x));
        r = r.wrapping_add(step);
    }
    keys.sort_unstable();
    keys.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1)
}

/// Rotation number from the lifted orbit of the first critical point (or 0).
pub fn rotation_number(map: &MapModel, max_iterates: usize, tol: f64) -> Result<RotationEstimate> {
    let p = map.prec;
    let x0 = map
        .critical
        .first()
        .map(|c| c.position.clone())
        .unwrap_or_else(|| real(p, 0));
    let mut lift = Vec::with_capacity(max_iterates + 1);
    let mut x = x0;
    lift.push(x.clone());
    for _ in 0..max_iterates {
        x = map.eval(&x);
        lift.push(x.clone());
    }
    rotation::rotation_from_lift(&lift, tol)
}

#[derive(Debug, Clone)]
pub struct PowerLawReport {
    pub index: usize,
    pub exponent: f64,
    /// min of f′(x)/|x − c|^{s−1} on the window
    pub alpha: f64,
    /// max of f′(x)/|x − c|^{s−1} on the window
    pub beta: f64,
    /// smallest γ with |f(x) − f(c)|/|f(y) − f(c)| ≤ γ (|x − c|/|y − c|)^s over sampled pairs
    pub gamma: f64,
    /// least-squares slope of log f′ against log |x − c| inside the window
    pub log_slope: f64,
    /// total variation of log f′ on the complement of the windows (shared by all rows)
    pub off_window_variation: f64,
}

pub fn power_law_diagnostics(map: &MapModel) -> Vec<PowerLawReport> {
    let p = map.prec;
    let variation = off_window_variation(map);
    let mut out = Vec::new();
    for (i, c) in map.critical.iter().enumerate() {
        let s = c.exponent.clone();
        let sm1 = Float::with_val(p, &s - 1u32);
        let fc = map.eval(&c.position);
        let mut ratios = Vec::new();
        let mut pts: Vec<(f64, f64)> = Vec::new();
        let mut samples = Vec::new();
        for j in 0..=80 {
            let scale = Float::with_val(p, &c.half_width) * 2f64.powf(-(j as f64) / 4.0);
            for sign in [-1i32, 1] {
                let d = Float::with_val(p, &scale * sign);
                let x = Float::with_val(p, &c.position + &d);
                let j1 = map.jet(&x);
                let ad = Float::with_val(p, d.abs_ref());
                let r = Float::with_val(p, &j1.d1 / ad.clone().pow(&sm1));
                ratios.push(r.to_f64());
                pts.push((crate::num::log2_abs(&ad), crate::num::log2_abs(&j1.d1)));
                let img = Float::with_val(p, &j1.f - &fc).abs();
                samples.push((ad, img));
            }
        }
        let alpha = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let beta = ratios.iter().cloned().fold(0.0, f64::max);
        let slope = least_squares_slope(&pts);
        let sf = s.to_f64();
        let mut gamma: f64 = 0.0;
        for (ax, ix) in &samples {
            for (ay, iy) in &samples {
                if ax <= ay && !iy.is_zero() {
                    let lhs = Float::with_val(p, ix / iy).to_f64();
                    let rhs = Float::with_val(p, ax / ay).to_f64().powf(sf);
                    if rhs > 0.0 {
                        gamma = gamma.max(lhs / rhs);
                    }
                }
            }
        }
        out.push(PowerLawReport {
            index: i,
            exponent: sf,
            alpha,
            beta,
            gamma,
            log_slope: slope,
            off_window_variation: variation,
        });
    }
    out
}

fn off_window_variation(map: &MapModel) -> f64 {
    if map.critical.is_empty() {
        return 0.0;
    }
    let n = 8192;
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for i in 0..n {
        let x = real(map.prec, i as f64 / n as f64);
        if map.window_index(&x).is_some() {
            prev = None;
            continue;
        }
        let v = map.jet(&x).d1.to_f64().ln();
        if let Some(pv) = prev {
            total += (v - pv).abs();
        }
        prev = Some(v);
    }
    total
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::golden;

    fn sine(m: u32, w: f64) -> MapModel {
        build_sine_family(m, &real(256, w), 256).unwrap()
    }

    #[test]
    fn sine_jet_at_origin() {
        let f = sine(1, 0.0);
        let j = f.jet(&real(256, 0));
        assert!(j.d1.is_zero());
        assert!(j.d2.is_zero());
        let tp = Float::with_val(256, pi(256) * 2u32);
        let want = Float::with_val(256, &tp * &tp);
        assert!(crate::num::log2_abs(&(j.d3 - want)) < -240.0);
    }

    #[test]
    fn sine_derivative_at_half() {
        let f = sine(1, 0.0);
        let d = f.deriv(&real(256, 0.5), 1).unwrap();
        assert!(crate::num::log2_abs(&(d - 2u32)) < -250.0);
    }

    #[test]
    fn sine_schwarzian_at_quarter() {
        // f′ = 1, f″ = 2π, f‴ = 0 at x = 1/4
        let f = sine(1, 0.0);
        let s = f.schwarzian(&real(256, 0.25)).unwrap();
        let pi2 = Float::with_val(256, pi(256) * pi(256));
        let want = -(pi2 * 6u32);
        assert!(crate::num::log2_abs(&(s - want)) < -240.0);
    }

    #[test]
    fn sine_two_critical_points() {
        let f = sine(2, 0.3);
        assert_eq!(f.n_critical(), 2);
        for c in &f.critical {
            let j = f.jet(&c.position);
            assert!(crate::num::log2_abs(&j.d1) < -240.0);
            assert_eq!(c.exponent.to_f64(), 3.0);
        }
    }

    #[test]
    fn rotation_schwarzian_vanishes() {
        let r = build_rotation(&golden(256), 256).unwrap();
        assert!(r.schwarzian(&real(256, 0.3)).unwrap().is_zero());
    }

    fn spec(c: f64, s: f64, w: Option<f64>, l: Option<f64>) -> CriticalSpec {
        CriticalSpec {
            position: real(256, c),
            exponent: real(256, s),
            half_width: w.map(|v| real(256, v)),
            slope: l.map(|v| real(256, v)),
        }
    }

    #[test]
    fn canonical_window_schwarzian() {
        let f =
            build_piecewise_canonical(&[spec(0.0, 2.5, None, None)], &real(256, 0), 256).unwrap();
        let x = real(256, 0.01);
        let s = f.schwarzian(&x).unwrap().to_f64();
        let want = -5.25 / (2.0 * 0.01 * 0.01);
        assert!((s - want).abs() < 1e-9 * want.abs());
        let f3 = build_piecewise_canonical(&[spec(0.3, 3.0, Some(0.2), None)], &real(256, 0), 256)
            .unwrap();
        let s3 = f3.schwarzian(&real(256, 0.4)).unwrap().to_f64();
        assert!((s3 + 400.0).abs() < 1e-9);
    }

    #[test]
    fn canonical_overlap_rejected() {
        let e = build_piecewise_canonical(
            &[
                spec(0.0, 3.0, Some(0.2), None),
                spec(0.3, 3.0, Some(0.2), None),
            ],
            &real(256, 0),
            256,
        );
        assert!(matches!(e, Err(Error::WindowsOverlap(..))));
    }

    #[test]
    fn canonical_joins_are_c2() {
        let f = build_piecewise_canonical(
            &[spec(0.0, 3.0, None, None), spec(0.4, 2.5, None, None)],
            &real(256, 0.1),
            256,
        )
        .unwrap();
        let Family::Canonical(cn) = &f.family else {
            panic!()
        };
        for piece in &cn.pieces {
            let lo = piece.lo().clone();
            let eps = real(256, 1e-30);
            let a = f.jet(&Float::with_val(256, &lo - &eps));
            let b = f.jet(&Float::with_val(256, &lo + &eps));
            assert!((a.f.to_f64() - b.f.to_f64()).abs() < 1e-20);
            assert!((a.d1.to_f64() - b.d1.to_f64()).abs() < 1e-12);
            assert!((a.d2.to_f64() - b.d2.to_f64()).abs() < 1e-9);
        }
    }

    #[test]
    fn canonical_power_law_exact() {
        let f =
            build_piecewise_canonical(&[spec(0.5, 2.5, Some(0.05), Some(1.0))], &real(256, 0), 256);
        // λ = 1 makes the edge derivative tiny; the join may still be monotone
        if let Ok(f) = f {
            let r = power_law_diagnostics(&f);
            assert!((r[0].alpha - 2.5).abs() < 1e-12);
            assert!((r[0].beta - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_power_law_slope() {
        let r = power_law_diagnostics(&sine(1, 0.0));
        assert!((r[0].log_slope - 2.0).abs() < 0.05);
        assert!(power_law_diagnostics(&build_rotation(&golden(256), 256).unwrap()).is_empty());
    }

    #[test]
    fn orbit_of_rotation() {
        let r = build_rotation(&golden(256), 256).unwrap();
        let o = r.iterate_orbit(&real(256, 0), 3).unwrap();
        let g = golden(256);
        for k in 0..=3u32 {
            let want = frac(&Float::with_val(256, &g * k));
            assert!(crate::num::log2_abs(&(o.points[k as usize].clone() - want)) < -240.0);
        }
        assert_eq!(r.iterate_orbit(&real(256, 0.2), 0).unwrap().len(), 1);
    }

    #[test]
    fn tune_rotation_is_exact() {
        let r = build_rotation(&real(256, 0), 256).unwrap();
        let t = tune_omega(&r, &golden(256), &TuneOptions::default()).unwrap();
        assert_eq!(t.omega, golden(256));
    }

    #[test]
    fn tune_rejects_rational_target() {
        let f = sine(1, 0.0);
        let e = tune_omega(&f, &real(256, 0.5), &TuneOptions::default());
        assert!(matches!(e, Err(Error::RationalDetected { .. })));
    }

    #[test]
    fn inverse_round_trip() {
        let f = sine(1, 0.3);
        let x = real(256, 0.123);
        let y = f.iterate(&x, 5);
        let back = f.iterate(&y, -5);
        assert!((back.to_f64() - 0.123).abs() < 1e-40f64.max(1e-30));
    }

    #[test]
    fn tuned_orbit_follows_rotation_order() {
        let f = tune_omega(
            &sine(1, 0.0),
            &golden(256),
            &TuneOptions {
                tol: 1e-40,
                max_iterates: 3000,
            },
        )
        .unwrap();
        let len = f.certified_orbit_length().unwrap() as usize;
        assert!(orbit_order_matches(&f, &golden(256), len));
        // the golden orbit is not ordered like a rotation by 1/3
        assert!(!orbit_order_matches(&f, &(real(256, 1) / 3u32), 40));
    }
}
