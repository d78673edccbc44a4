//! Conjugacies between maps with the same rotation number, invariant
//! measures, signatures and quasisymmetry scans.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::arc::Arc;
use crate::circlemap::MapModel;
use crate::error::{Error, Result};
use crate::finegrid::{validate_grid, FineGrid};
use crate::num::{ccw, frac, real, to_decimal};
use crate::partition::build_aux_partition;

/// A real stored as an unevaluated sum hi + lo of two doubles.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub fn from_float(x: &Float) -> Dd {
        let hi = x.to_f64();
        let lo = Float::with_val(x.prec().max(128), x - hi).to_f64();
        Dd { hi, lo }
    }

    /// Exact value at 128 bits.
    pub fn to_float(self) -> Float {
        Float::with_val(128, self.hi) + self.lo
    }

    pub fn to_rational(self) -> Rational {
        Rational::from_f64(self.hi).unwrap() + Rational::from_f64(self.lo).unwrap()
    }
}

fn base_point(map: &MapModel) -> Float {
    map.critical
        .first()
        .map(|c| c.position.clone())
        .unwrap_or_else(|| real(map.prec, 0))
}

/// Which orbit points a conjugacy table keeps.
#[derive(Debug, Clone)]
pub struct Sampling {
    /// Every point f^k(c₀) with k below this is kept.
    pub coarse: usize,
    /// Orbit length M.
    pub total: usize,
    /// Points with k < total inside one of these arcs are kept as well.
    pub windows: Vec<Arc>,
}

impl Sampling {
    pub fn full(m: usize) -> Sampling {
        Sampling {
            coarse: m,
            total: m,
            windows: Vec::new(),
        }
    }
}

/// h with h(f^k(c₀(f))) = g^k(c₀(g)), stored as offsets from the two base points.
#[derive(Debug, Clone)]
pub struct ConjugacyTable {
    pub base_f: Float,
    pub base_g: Float,
    pub orbit_length: usize,
    /// Offsets ccw(c₀(f), f^k(c₀(f))), increasing, starting with 0.
    pub xs: Vec<Dd>,
    /// Matching offsets on the target side.
    pub ys: Vec<Dd>,
    /// Orbit index of each breakpoint.
    pub index: Vec<u64>,
}

fn check_same_rotation(f: &MapModel, g: &MapModel, m: usize) -> Result<()> {
    let (cf, cg) = (f.combinatorics()?, g.combinatorics()?);
    let depth = cf.depth().min(cg.depth());
    for n in 0..depth {
        if cf.q(n) as usize > m {
            break;
        }
        if cf.a(n) != cg.a(n) {
            return Err(Error::IncompatibleTopology(format!(
                "rotation numbers differ at partial quotient {n}: {} vs {}",
                cf.a(n),
                cg.a(n)
            )));
        }
    }
    for map in [f, g] {
        if let Some(cert) = map.certified_orbit_length() {
            if (cert as usize) < m {
                return Err(Error::InvalidInput(format!(
                    "orbit of length {m} requested, tuning certifies {cert}"
                )));
            }
        }
    }
    Ok(())
}

fn sampled_orbit_f(map: &MapModel, s: &Sampling) -> (Vec<u64>, Vec<Float>) {
    let base = base_point(map);
    let mut x = base.clone();
    let (mut idx, mut pts) = (Vec::new(), Vec::new());
    for k in 0..s.total {
        if k < s.coarse || s.windows.iter().any(|w| w.contains(&x)) {
            idx.push(k as u64);
            pts.push(ccw(&base, &x));
        }
        x = frac(&map.eval(&x));
    }
    (idx, pts)
}

fn orbit_at(map: &MapModel, keep: &[u64]) -> Vec<Float> {
    let base = base_point(map);
    let mut x = base.clone();
    let mut out = Vec::with_capacity(keep.len());
    let mut k = 0u64;
    for &want in keep {
        while k < want {
            x = frac(&map.eval(&x));
            k += 1;
        }
        out.push(ccw(&base, &x));
    }
    out
}

fn assemble(
    f: &MapModel,
    g: &MapModel,
    s: &Sampling,
    idx: &[u64],
    xs: &[Float],
    ys: Vec<Float>,
) -> Result<ConjugacyTable> {
    let mut order: Vec<usize> = (0..idx.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    for w in order.windows(2) {
        if ys[w[1]] <= ys[w[0]] || xs[w[1]] == xs[w[0]] {
            return Err(Error::OrderViolation(idx[w[1]] as usize));
        }
    }
    Ok(ConjugacyTable {
        base_f: base_point(f),
        base_g: base_point(g),
        orbit_length: s.total,
        xs: order.iter().map(|&i| Dd::from_float(&xs[i])).collect(),
        ys: order.iter().map(|&i| Dd::from_float(&ys[i])).collect(),
        index: order.iter().map(|&i| idx[i]).collect(),
    })
}

pub fn build_conjugacy(f: &MapModel, g: &MapModel, m: usize) -> Result<ConjugacyTable> {
    build_sampled(f, &[g], &Sampling::full(m)).map(|mut v| v.remove(0))
}

/// Conjugacies from `f` to each target, sharing one pass over f's orbit.
pub fn build_sampled(
    f: &MapModel,
    targets: &[&MapModel],
    s: &Sampling,
) -> Result<Vec<ConjugacyTable>> {
    if s.total == 0 || s.coarse > s.total {
        return Err(Error::InvalidInput(
            "orbit length must be positive and cover the coarse part".into(),
        ));
    }
    for g in targets {
        if g.n_critical() != f.n_critical() {
            return Err(Error::IncompatibleTopology(
                "different numbers of critical points".into(),
            ));
        }
        check_same_rotation(f, g, s.total)?;
    }
    let (idx, xs) = sampled_orbit_f(f, s);
    targets
        .par_iter()
        .map(|g| {
            let ys = orbit_at(g, &idx);
            assemble(f, g, s, &idx, &xs, ys)
        })
        .collect()
}

impl ConjugacyTable {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Offset x with h(x) at target offset y, by linear interpolation between breakpoints.
    pub fn preimage_offset(&self, y: f64) -> f64 {
        let n = self.ys.len();
        let y = y.rem_euclid(1.0);
        let k = self.ys.partition_point(|d| d.hi < y);
        if k == 0 {
            return 0.0;
        }
        let (x0, y0) = (self.xs[k - 1].hi, self.ys[k - 1].hi);
        let (x1, y1) = if k < n {
            (self.xs[k].hi, self.ys[k].hi)
        } else {
            (1.0, 1.0)
        };
        x0 + (x1 - x0) * (y - y0) / (y1 - y0)
    }

    /// Smallest breakpoint gap times the safety factor 8.
    pub fn resolution(&self) -> f64 {
        let n = self.xs.len();
        let mut gap = 1.0 - self.xs[n - 1].hi;
        for w in self.xs.windows(2) {
            gap = gap.min((w[1].hi - w[0].hi) + (w[1].lo - w[0].lo));
        }
        8.0 * gap
    }

    /// Largest breakpoint gap meeting the offset window [a, b].
    pub fn local_gap(&self, a: f64, b: f64) -> f64 {
        let n = self.xs.len();
        let lo = a.rem_euclid(1.0);
        if b - a >= 1.0 {
            return self.max_gap(0, n);
        }
        let hi = lo + (b - a);
        let i = self.xs.partition_point(|d| d.hi < lo).saturating_sub(1);
        let j = self.xs.partition_point(|d| d.hi <= hi.min(1.0));
        let mut gap = self.max_gap(i, j.min(n));
        if j >= n {
            gap = gap.max(1.0 - self.xs[n - 1].hi);
            if hi > 1.0 {
                gap = gap.max(self.local_gap(0.0, hi - 1.0));
            }
        }
        gap
    }

    fn max_gap(&self, i: usize, j: usize) -> f64 {
        let n = self.xs.len();
        let mut gap: f64 = 0.0;
        for t in i..j {
            let next = if t + 1 < n { self.xs[t + 1].hi } else { 1.0 };
            gap = gap.max(next - self.xs[t].hi);
        }
        gap
    }

    /// The lift of h in offset coordinates: H(X + 1) = H(X) + 1, exact piecewise-linear interpolation.
    pub fn eval_offset(&self, x: &Rational) -> Rational {
        let (fr, fl) = x.clone().fract_floor(Integer::new());
        let k = self.xs.partition_point(|d| d.to_rational() <= fr);
        let n = self.xs.len();
        let (x0, y0) = (self.xs[k - 1].to_rational(), self.ys[k - 1].to_rational());
        let (x1, y1) = if k < n {
            (self.xs[k].to_rational(), self.ys[k].to_rational())
        } else {
            (Rational::from(1), Rational::from(1))
        };
        let frac_part = (fr - &x0) / (x1 - &x0);
        y0.clone() + (y1 - y0) * frac_part + fl
    }

    /// h at a point of the circle, as a real in the target's lift.
    pub fn eval(&self, x: f64) -> f64 {
        let off = Rational::from_f64(x).unwrap() - Dd::from_float(&self.base_f).to_rational();
        let y = self.eval_offset(&off) + Dd::from_float(&self.base_g).to_rational();
        y.to_f64().rem_euclid(1.0)
    }

    /// |h(x+t) − h(x)| / |h(x) − h(x−t)|, or None when breakpoints near x are sparser than t/8.
    pub fn k_ratio(&self, x: f64, t: f64) -> Option<f64> {
        let off = Rational::from_f64(x).unwrap() - Dd::from_float(&self.base_f).to_rational();
        let o = off.to_f64();
        if 8.0 * self.local_gap(o - t, o + t) > t {
            return None;
        }
        let tr = Rational::from_f64(t).unwrap();
        let mid = self.eval_offset(&off);
        let right = self.eval_offset(&(off.clone() + &tr)) - &mid;
        let left = mid - self.eval_offset(&(off - tr));
        Some((right / left).to_f64())
    }

    /// Largest |h(f(x_k)) − g(h(x_k))| over breakpoints whose successor is also a breakpoint.
    pub fn equivariance_defect(&self, f: &MapModel, g: &MapModel, limit: usize) -> f64 {
        let p = f.prec.max(g.prec);
        let mut by_index: Vec<usize> = (0..self.len()).collect();
        by_index.sort_by_key(|&i| self.index[i]);
        let mut worst: f64 = 0.0;
        for w in by_index.windows(2).take(limit) {
            let (a, b) = (w[0], w[1]);
            if self.index[b] != self.index[a] + 1 {
                continue;
            }
            let x = frac(&(self.xs[a].to_rational() + Float::with_val(p, &self.base_f)));
            let y = frac(&(self.ys[a].to_rational() + Float::with_val(p, &self.base_g)));
            let fx = frac(&f.eval(&x));
            let off = ccw(&self.base_f, &fx).to_rational().unwrap();
            let hfx = self.eval_offset(&off) + Dd::from_float(&self.base_g).to_rational();
            let ghx = frac(&g.eval(&y)).to_rational().unwrap();
            let d = (hfx - ghx).to_f64().rem_euclid(1.0);
            worst = worst.max(d.min(1.0 - d));
        }
        worst
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QsPoint {
    pub x: f64,
    pub t: f64,
    /// None when the table is too sparse near x at this scale.
    pub k: Option<f64>,
}

impl QsPoint {
    /// max(K, 1/K).
    pub fn symmetric(&self) -> Option<f64> {
        self.k.map(|k| k.max(1.0 / k))
    }
}

pub fn qs_scan(h: &ConjugacyTable, xs: &[f64], ts: &[f64]) -> Result<Vec<QsPoint>> {
    let res = h.resolution();
    if let Some(&t) = ts.iter().find(|&&t| t < res) {
        return Err(Error::ScaleBelowResolution {
            scale: t,
            resolution: res,
        });
    }
    Ok(xs
        .par_iter()
        .flat_map_iter(|&x| {
            ts.iter().map(move |&t| QsPoint {
                x,
                t,
                k: h.k_ratio(x, t),
            })
        })
        .collect())
}

/// Scan points x₀ + s·t for s ∈ [−span, span] in `steps` steps, separately for each t.
pub fn qs_scan_around(
    h: &ConjugacyTable,
    x0: f64,
    span: f64,
    steps: usize,
    ts: &[f64],
) -> Result<Vec<QsPoint>> {
    let res = h.resolution();
    if let Some(&t) = ts.iter().find(|&&t| t < res) {
        return Err(Error::ScaleBelowResolution {
            scale: t,
            resolution: res,
        });
    }
    let pairs: Vec<(f64, f64)> = ts
        .iter()
        .flat_map(|&t| {
            (0..=steps).map(move |i| {
                let s = if steps == 0 {
                    0.0
                } else {
                    -span + 2.0 * span * i as f64 / steps as f64
                };
                ((x0 + s * t).rem_euclid(1.0), t)
            })
        })
        .collect();
    Ok(pairs
        .par_iter()
        .map(|&(x, t)| QsPoint {
            x,
            t,
            k: h.k_ratio(x, t),
        })
        .collect())
}

/// Base-10 decade [10^e, 10^{e+1}) summary of a scan.
#[derive(Debug, Clone)]
pub struct Decade {
    pub exponent: i32,
    pub max_k: Option<f64>,
    pub resolved: usize,
    pub total: usize,
}

/// Decades from coarse to fine.
pub fn decade_summary(points: &[QsPoint]) -> Vec<Decade> {
    let mut out: Vec<Decade> = Vec::new();
    for p in points {
        let e = p.t.log10().floor() as i32;
        let d = match out.iter_mut().find(|d| d.exponent == e) {
            Some(d) => d,
            None => {
                out.push(Decade {
                    exponent: e,
                    max_k: None,
                    resolved: 0,
                    total: 0,
                });
                out.last_mut().unwrap()
            }
        };
        d.total += 1;
        if let Some(k) = p.symmetric() {
            d.resolved += 1;
            d.max_k = Some(d.max_k.map_or(k, |m| m.max(k)));
        }
    }
    out.sort_by_key(|d| std::cmp::Reverse(d.exponent));
    out
}

/// `per_decade` log-spaced scales in every decade meeting [lo, hi].
pub fn decade_scales(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut e = hi.log10().floor() as i32;
    while 10f64.powi(e + 1) > lo {
        let a = 10f64.powi(e).max(lo);
        let b = 10f64.powi(e + 1).min(hi);
        for s in 0..per_decade {
            let t = a * (b / a).powf(s as f64 / per_decade as f64);
            if t >= lo && t <= hi {
                out.push(t);
            }
        }
        e -= 1;
    }
    out
}

/// (max − min)/max of the per-decade maxima.
pub fn decade_variation(ds: &[Decade]) -> Option<f64> {
    let ks: Vec<f64> = ds.iter().filter_map(|d| d.max_k).collect();
    if ks.is_empty() {
        return None;
    }
    let hi = ks.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ks.iter().cloned().fold(f64::MAX, f64::min);
    Some((hi - lo) / hi)
}

/// Longest run of consecutive resolved decades along which the maximum strictly increases towards fine scales.
pub fn longest_increasing_run(ds: &[Decade]) -> usize {
    let mut best = 0;
    let mut run = 0;
    let mut prev: Option<f64> = None;
    for d in ds {
        match (d.max_k, prev) {
            (Some(k), Some(p)) if k > p => run += 1,
            (Some(_), _) => run = 1,
            (None, _) => run = 0,
        }
        prev = d.max_k;
        best = best.max(run);
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub struct MeasureEstimate {
    pub value: f64,
    /// Disagreement between the two base points.
    pub spread: f64,
}

fn orbit_frequencies(map: &MapModel, base: &Float, samples: usize, arcs: &[Arc]) -> Vec<f64> {
    let mut counts = vec![0usize; arcs.len()];
    let mut x = frac(base);
    for _ in 0..samples {
        for (c, a) in counts.iter_mut().zip(arcs) {
            if a.length >= 1u32 || a.contains_interior(&x) || x == a.left {
                *c += 1;
            }
        }
        x = frac(&map.eval(&x));
    }
    counts
        .into_iter()
        .map(|c| c as f64 / samples as f64)
        .collect()
}

fn second_base(map: &MapModel) -> Float {
    frac(&(base_point(map) + real(map.prec, 0.5)))
}

/// μ(arc) by visit frequency of the half-open arc along two orbits.
pub fn invariant_measure(
    map: &MapModel,
    arc: &Arc,
    samples: usize,
    tol: f64,
) -> Result<MeasureEstimate> {
    if samples == 0 {
        return Err(Error::InvalidInput("no samples".into()));
    }
    let arcs = std::slice::from_ref(arc);
    let (a, b) = rayon::join(
        || orbit_frequencies(map, &base_point(map), samples, arcs)[0],
        || orbit_frequencies(map, &second_base(map), samples, arcs)[0],
    );
    let spread = (a - b).abs();
    if spread > tol {
        return Err(Error::NotConverged(format!(
            "visit frequencies {a} and {b} disagree"
        )));
    }
    Ok(MeasureEstimate {
        value: 0.5 * (a + b),
        spread,
    })
}

/// μ[c₀, x) bracketed between the rotation coordinates {kρ} of the nearest orbit points of c₀.
pub fn measure_bracket(map: &MapModel, x: &Float, samples: usize) -> Result<(f64, f64)> {
    let rho = match (&map.tuning, &map.family) {
        (Some(t), _) => frac(&t.target),
        (None, crate::circlemap::Family::Rotation) => frac(&map.omega),
        _ => {
            return Err(Error::InvalidInput(
                "measure bracket needs a tuned map".into(),
            ))
        }
    };
    let base = base_point(map);
    let target = ccw(&base, x);
    let mut y = base.clone();
    let (mut below, mut above) = ((real(map.prec, 0), 0u64), (real(map.prec, 1), None));
    for k in 0..samples as u64 {
        let off = ccw(&base, &y);
        if off <= target && off >= below.0 {
            below = (off, k);
        } else if off > target && off < above.0 {
            above = (off, Some(k));
        }
        y = frac(&map.eval(&y));
    }
    let coord = |k: u64| frac(&Float::with_val(map.prec, &rho * k)).to_f64();
    let lo = coord(below.1);
    let hi = above.1.map(coord).unwrap_or(1.0);
    Ok((lo, if hi == 0.0 { 1.0 } else { hi }))
}

#[derive(Debug, Clone)]
pub struct Signature {
    pub rho: Float,
    pub n: usize,
    pub exponents: Vec<f64>,
    /// λ_i = μ[c_i, c_{i+1}).
    pub gaps: Vec<MeasureEstimate>,
}

impl Signature {
    pub fn gap_sum(&self) -> f64 {
        self.gaps.iter().map(|g| g.value).sum()
    }
}

pub fn signature(map: &MapModel, samples: usize) -> Result<Signature> {
    let n = map.n_critical();
    if n == 0 {
        return Err(Error::InvalidInput(
            "signature needs at least one critical point".into(),
        ));
    }
    let rho = match &map.tuning {
        Some(t) => t.target.clone(),
        None => map.combinatorics()?.value_with_golden_tail(map.prec),
    };
    let arcs: Vec<Arc> = (0..n)
        .map(|i| {
            if n == 1 {
                Arc::full(map.critical[0].position.clone())
            } else {
                Arc::new(
                    map.critical[i].position.clone(),
                    map.critical[(i + 1) % n].position.clone(),
                )
            }
        })
        .collect();
    let (a, b) = rayon::join(
        || orbit_frequencies(map, &base_point(map), samples, &arcs),
        || orbit_frequencies(map, &second_base(map), samples, &arcs),
    );
    let gaps = a
        .iter()
        .zip(&b)
        .map(|(x, y)| MeasureEstimate {
            value: 0.5 * (x + y),
            spread: (x - y).abs(),
        })
        .collect();
    Ok(Signature {
        rho,
        n,
        exponents: map.critical.iter().map(|c| c.exponent.to_f64()).collect(),
        gaps,
    })
}

#[derive(Debug, Clone)]
pub struct MatchReport {
    pub matched: bool,
    pub deltas: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Gap-by-gap comparison; the error bar of one estimate is max(spread, 2/samples).
pub fn measure_match_check(f: &MapModel, g: &MapModel, samples: usize) -> Result<MatchReport> {
    if f.n_critical() != g.n_critical() {
        return Err(Error::IncompatibleTopology(
            "different numbers of critical points".into(),
        ));
    }
    check_same_rotation(f, g, samples)?;
    let (sf, sg) = (signature(f, samples)?, signature(g, samples)?);
    let floor = 2.0 / samples as f64;
    let mut deltas = Vec::new();
    let mut errors = Vec::new();
    for (a, b) in sf.gaps.iter().zip(&sg.gaps) {
        deltas.push(a.value - b.value);
        errors.push(a.spread.max(floor) + b.spread.max(floor));
    }
    let matched = deltas.iter().zip(&errors).all(|(d, e)| d.abs() <= *e);
    Ok(MatchReport {
        matched,
        deltas,
        errors,
    })
}

#[derive(Debug, Clone)]
pub struct GapMatch {
    pub parameter: f64,
    pub map: MapModel,
    pub bracket: (f64, f64),
    pub steps: usize,
}

/// Outer bisection on a parameter p of g so that μ_g[c₀, c₁) meets `target`
/// within `tol`; `build` must return g already tuned, with λ₀ increasing in p.
pub fn match_gap<B: Fn(f64) -> Result<MapModel>>(
    build: B,
    range: (f64, f64),
    target: f64,
    tol: f64,
    samples: usize,
    max_steps: usize,
) -> Result<GapMatch> {
    let (mut lo, mut hi) = range;
    for step in 1..=max_steps {
        let mid = 0.5 * (lo + hi);
        let g = build(mid)?;
        if g.n_critical() < 2 {
            return Err(Error::InvalidInput(
                "gap matching needs two critical points".into(),
            ));
        }
        let b = measure_bracket(&g, &g.critical[1].position, samples)?;
        if b.0 - tol <= target && target <= b.1 + tol && b.1 - b.0 <= 2.0 * tol {
            return Ok(GapMatch {
                parameter: mid,
                map: g,
                bracket: b,
                steps: step,
            });
        }
        if 0.5 * (b.0 + b.1) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NotConverged(format!(
        "gap not matched within {max_steps} steps"
    )))
}

/// Arithmetic of the quasisymmetry constant of a fine-grid isomorphism.
#[derive(Debug, Clone, PartialEq)]
pub struct QsConstant {
    pub a: usize,
    pub rho: Rational,
    pub alpha: Rational,
    pub beta: Rational,
    pub rho1: Rational,
    /// Least p with β^p ρ₁ < 1/4.
    pub p: u32,
    pub lambda: Rational,
}

impl QsConstant {
    /// The triple (a, p, λ+ρ) of K = Σ_{ν=1}^{2a^{p+1}} (λ+ρ)^ν.
    pub fn triple(&self) -> (usize, u32, Rational) {
        (self.a, self.p, Rational::from(&self.lambda + &self.rho))
    }
}

pub fn qs_constant(a: usize, rho: &Rational, lambda: &Rational) -> Result<QsConstant> {
    if a < 2 || *rho < 1 {
        return Err(Error::InvalidInput("need a ≥ 2 and ρ ≥ 1".into()));
    }
    let power = rho.clone().pow(a as i32 - 1);
    let alpha = Rational::from(1) / (power * a as u32);
    let beta = Rational::from(1) / (Rational::from(1) + Rational::from(1) / rho.clone());
    let rho1 = (Rational::from(1) + rho) / alpha.clone();
    let quarter = Rational::from((1, 4));
    let mut p = 0u32;
    let mut v = rho1.clone();
    while v >= quarter {
        v *= &beta;
        p += 1;
    }
    Ok(QsConstant {
        a,
        rho: rho.clone(),
        alpha,
        beta,
        rho1,
        p,
        lambda: lambda.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct GridCriterion {
    pub lambda_observed: f64,
    pub levels: usize,
    pub constant: QsConstant,
}

fn ratio(a: &Float, b: &Float) -> f64 {
    Float::with_val(a.prec(), a / b).to_f64()
}

/// Structural isomorphism check of two grid sequences and the observed λ of
/// ||Δ′|/|Δ″| − |hΔ′|/|hΔ″|| over adjacent pairs; h sends f^k(c₀(f)) to g^k(c₀(g)),
/// so it maps each atom onto the atom with the same orbit endpoints.
pub fn grid_criterion(grid_f: &FineGrid, grid_g: &FineGrid) -> Result<GridCriterion> {
    if grid_f.n_critical != grid_g.n_critical || grid_f.levels.len() != grid_g.levels.len() {
        return Err(Error::NotIsomorphic { level: 0, atom: 0 });
    }
    let mut lambda: f64 = 0.0;
    for (lf, lg) in grid_f.levels.iter().zip(&grid_g.levels) {
        if lf.atoms.len() != lg.atoms.len() {
            return Err(Error::NotIsomorphic {
                level: lf.level,
                atom: lf.atoms.len().min(lg.atoms.len()),
            });
        }
        for (a, b) in lf.atoms.iter().zip(&lg.atoms) {
            if a.shape != b.shape || a.prov_level != b.prov_level || a.parent != b.parent {
                return Err(Error::NotIsomorphic {
                    level: lf.level,
                    atom: a.id,
                });
            }
        }
        let n = lf.atoms.len();
        for t in 0..n {
            let u = (t + 1) % n;
            let rf = ratio(&lf.atoms[t].arc.length, &lf.atoms[u].arc.length);
            let rg = ratio(&lg.atoms[t].arc.length, &lg.atoms[u].arc.length);
            lambda = lambda.max((rf - rg).abs());
        }
    }
    let rep = validate_grid(grid_f)?;
    let rho = Rational::from_f64(rep.rho_observed).unwrap();
    let lam = Rational::from_f64(lambda).unwrap();
    let constant = qs_constant(rep.a_observed.max(2), &rho, &lam)?;
    Ok(GridCriterion {
        lambda_observed: lambda,
        levels: grid_f.levels.len(),
        constant,
    })
}

/// Whether the critical spots of P_n*(c₀) sit at the same Δ indices for both maps.
pub fn spot_correspondence(f: &MapModel, g: &MapModel, n: usize) -> Result<bool> {
    let (af, ag) = (build_aux_partition(f, n)?, build_aux_partition(g, n)?);
    Ok(af.critical_times == ag.critical_times)
}

/// `k,x,y` rows of a conjugacy table in increasing x.
pub fn table_csv(h: &ConjugacyTable, digits: usize, header: &str) -> String {
    let mut out = format!("# {header}\nk,x,y\n");
    for ((k, x), y) in h.index.iter().zip(&h.xs).zip(&h.ys) {
        out.push_str(&format!(
            "{k},{},{}\n",
            to_decimal(&x.to_float(), digits),
            to_decimal(&y.to_float(), digits)
        ));
    }
    out
}

pub fn scan_csv(points: &[QsPoint], header: &str) -> String {
    let mut out = format!("# {header}\nx,t,K\n");
    for p in points {
        let k =
            p.k.map(|k| format!("{k:.12e}"))
                .unwrap_or_else(|| "unresolved".into());
        out.push_str(&format!("{:.17e},{:.17e},{}\n", p.x, p.t, k));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlemap::build_rotation;
    use crate::num::golden;

    #[test]
    fn identity_scan_is_exactly_one() {
        let r = build_rotation(&golden(128), 128).unwrap();
        let h = build_conjugacy(&r, &r, 5000).unwrap();
        let pts = qs_scan(&h, &[0.1, 0.37, 0.9], &[0.05, 0.01]).unwrap();
        assert!(pts.iter().all(|p| p.k == Some(1.0)));
    }

    #[test]
    fn shifted_rotation_is_a_translation() {
        let r = build_rotation(&golden(128), 128).unwrap();
        let h = build_conjugacy(&r, &r, 2000).unwrap();
        for x in [0.05, 0.5, 0.77] {
            assert!((h.eval(x) - x).abs() < 1e-15);
        }
    }

    #[test]
    fn rotation_measure_is_length() {
        let r = build_rotation(&golden(128), 128).unwrap();
        let arc = Arc::new(real(128, 0.2), real(128, 0.45));
        let m = invariant_measure(&r, &arc, 20_000, 1e-2).unwrap();
        assert!((m.value - 0.25).abs() < 1e-3, "{}", m.value);
        let full = invariant_measure(&r, &Arc::full(real(128, 0.3)), 1000, 0.0).unwrap();
        assert_eq!(full.value, 1.0);
    }

    #[test]
    fn worked_constant() {
        let c = qs_constant(7, &Rational::from(2), &Rational::from((1, 2))).unwrap();
        assert_eq!(c.alpha, Rational::from((1, 448)));
        assert_eq!(c.beta, Rational::from((2, 3)));
        assert_eq!(c.rho1, Rational::from(1344));
        assert_eq!(c.p, 22);
        assert_eq!(c.triple(), (7, 22, Rational::from((5, 2))));
    }

    #[test]
    fn decades_and_runs() {
        let ts = decade_scales(2f64.powi(-20), 2f64.powi(-4), 4);
        assert!(ts
            .iter()
            .all(|&t| (2f64.powi(-20)..=2f64.powi(-4)).contains(&t)));
        let mk = |e, k| Decade {
            exponent: e,
            max_k: k,
            resolved: 1,
            total: 1,
        };
        let ds = vec![
            mk(-2, Some(1.0)),
            mk(-3, Some(2.0)),
            mk(-4, Some(3.0)),
            mk(-5, Some(2.5)),
        ];
        assert_eq!(longest_increasing_run(&ds), 3);
        assert!((decade_variation(&ds).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn preimage_inverts_a_translation() {
        let r = build_rotation(&golden(128), 128).unwrap();
        let h = build_conjugacy(&r, &r, 500).unwrap();
        for y in [0.0, 0.123, 0.5, 0.999] {
            assert!((h.preimage_offset(y) - y).abs() < 1e-15);
        }
    }

    #[test]
    fn table_csv_lists_breakpoints() {
        let r = build_rotation(&golden(128), 128).unwrap();
        let h = build_conjugacy(&r, &r, 10).unwrap();
        let csv = table_csv(&h, 20, "identity");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# identity");
        assert_eq!(lines[1], "k,x,y");
        assert_eq!(lines.len(), 12);
        assert_eq!(lines[2], "0,0,0");
    }
}
