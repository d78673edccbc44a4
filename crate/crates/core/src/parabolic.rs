//! Reduced bridges, return-map Schwarzians, almost parabolic chains,
//! Yoccoz scaling fits and balanced decompositions.

use rug::Float;

use crate::arc::Arc;
use crate::circlemap::{schwarzian_from_jet, MapModel};
use crate::crossratio::{koebe_check, KoebeReport, NestedPair};
use crate::error::{Error, Result};
use crate::num::{frac, log2_abs, real};
use crate::partition::{AuxPartition, Skeleton};

/// Δ range of the reduced bridge G* = G minus its two lateral atoms.
pub fn reduce_range(lo: u64, hi: u64) -> Option<(u64, u64)> {
    if hi >= lo + 2 {
        Some((lo + 1, hi - 1))
    } else {
        None
    }
}

/// Reduced bridge of G_i, or None when G_i has at most two atoms.
pub fn reduce_bridge(aux: &AuxPartition, i: usize) -> Option<(u64, u64)> {
    aux.bridge_range(i)
        .and_then(|(lo, hi)| reduce_range(lo, hi))
}

#[derive(Debug, Clone)]
pub struct ReturnSchwarzian {
    pub total: Float,
    /// Terms whose step lies in the critical windows.
    pub window: Float,
    /// The remaining terms.
    pub off: Float,
}

impl ReturnSchwarzian {
    /// |Σ₁| / |Σ₂|, infinite when there are no off-window terms.
    pub fn dominance(&self) -> f64 {
        if self.off.is_zero() {
            return f64::INFINITY;
        }
        Float::with_val(self.total.prec(), &self.window / &self.off)
            .abs()
            .to_f64()
    }
}

/// S(f^q)(x) = Σ_{j<q} Sf(f^j x)(Df^j x)², split by whether f^j x lies in a window.
pub fn return_schwarzian(map: &MapModel, q: usize, x: &Float) -> Result<ReturnSchwarzian> {
    return_schwarzian_split(map, q, x, |_, y| map.window_index(y).is_some())
}

/// As [`return_schwarzian`] with a caller-supplied split of the steps j.
pub fn return_schwarzian_split<F: Fn(usize, &Float) -> bool>(
    map: &MapModel,
    q: usize,
    x: &Float,
    in_window: F,
) -> Result<ReturnSchwarzian> {
    let p = map.prec;
    let mut y = frac(x);
    let mut d = real(p, 1);
    let mut win = real(p, 0);
    let mut off = real(p, 0);
    for j in 0..q {
        let s = match map.schwarzian(&y) {
            Ok(s) => s,
            Err(Error::AtCriticalPoint) => return Err(Error::OrbitHitsCritical(j)),
            Err(e) => return Err(e),
        };
        let term = Float::with_val(p, &d * &d) * s;
        if in_window(j, &y) {
            win += term;
        } else {
            off += term;
        }
        let jet = map.jet(&y);
        d *= &jet.d1;
        y = frac(&jet.f);
    }
    let total = Float::with_val(p, &win + &off);
    Ok(ReturnSchwarzian {
        total,
        window: win,
        off,
    })
}

/// Schwarzian of `g` at `x` from central differences, with the step picked
/// where successive halvings agree best.
pub fn fd_schwarzian<G: Fn(&Float) -> Float>(g: G, x: &Float, scale: f64) -> f64 {
    let p = x.prec();
    let estimate = |h: f64| -> f64 {
        let hh = real(p, h);
        let at = |k: i32| g(&Float::with_val(p, x + Float::with_val(p, &hh * k)));
        let (m2, m1, z, p1, p2) = (at(-2), at(-1), at(0), at(1), at(2));
        let d1 = (Float::with_val(p, &p1 - &m1) / 2u32) / &hh;
        let d2 = (Float::with_val(p, &p1 + &m1) - Float::with_val(p, &z * 2u32))
            / Float::with_val(p, &hh * &hh);
        let t = Float::with_val(p, &p2 - &m2)
            - Float::with_val(p, Float::with_val(p, &p1 - &m1) * 2u32);
        let d3 = t / (Float::with_val(p, &hh * &hh) * &hh * 2u32);
        let jet = crate::circlemap::Jet { f: z, d1, d2, d3 };
        schwarzian_from_jet(&jet).to_f64()
    };
    let mut prev = estimate(scale);
    let mut best = (f64::INFINITY, prev);
    let mut h = scale;
    for _ in 0..60 {
        h /= 2.0;
        let cur = estimate(h);
        let gap = (cur - prev).abs() / cur.abs().max(1e-300);
        if gap < best.0 {
            best = (gap, cur);
        }
        prev = cur;
    }
    best.1
}

#[derive(Debug, Clone)]
pub struct AlmostParabolic {
    pub level: usize,
    pub slot: usize,
    /// Return iterate q_{n+1}.
    pub q: u64,
    /// Δ indices of J_1 … J_ℓ.
    pub k_range: (u64, u64),
    pub atoms: Vec<Arc>,
    pub lengths: Vec<Float>,
    pub width: f64,
    /// Largest sampled value of S(f^q) on the chain.
    pub max_return_schwarzian: f64,
    pub negative_fraction: f64,
    pub samples: usize,
}

impl AlmostParabolic {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn lengths_f64(&self) -> Vec<f64> {
        self.lengths.iter().map(|l| l.to_f64()).collect()
    }
}

/// Samples per atom for the negative-Schwarzian audit.
pub const SAMPLES_PER_ATOM: usize = 32;

/// Whether f^j(I_n(c₀)) sits inside a critical window, for j < q_{n+1}.
pub fn window_steps(map: &MapModel, sk: &Skeleton, n: usize) -> Vec<bool> {
    (0..sk.q(n + 1))
        .map(|j| {
            let arc = sk.dyn_arc(n, j);
            map.critical.iter().any(|c| {
                let w = c.window();
                let off = w.offset(&arc.left);
                Float::with_val(map.prec, &off + &arc.length) <= w.length
            })
        })
        .collect()
}

/// The return map f^{q_{n+1}} on the reduced bridge G_i*, checked for the translation structure.
pub fn detect_almost_parabolic(
    map: &MapModel,
    sk: &Skeleton,
    aux: &AuxPartition,
    i: usize,
    samples_per_atom: usize,
) -> Result<Option<AlmostParabolic>> {
    let Some((lo, hi)) = reduce_bridge(aux, i) else {
        return Ok(None);
    };
    let n = aux.level;
    let (qn, qn1) = (aux.q_n, aux.q_next);
    let p = map.prec;
    let idx = |k: u64| qn + k * qn1;
    let atoms: Vec<Arc> = (lo..=hi).map(|k| sk.dyn_arc(n + 1, idx(k))).collect();
    let tol = Float::with_val(p, 2f64.powf(-(p as f64) / 2.0));
    for (t, k) in (lo..=hi).enumerate() {
        // f^{q_{n+1}} carries the endpoint f^{idx(k)}(c₀) to f^{idx(k+1)}(c₀)
        let moved = map.iterate(sk.point(idx(k)), qn1 as i64);
        let gap = crate::num::signed_gap(&moved, sk.point(idx(k + 1))).abs();
        if gap > tol {
            return Err(Error::StructureBroken(t));
        }
    }
    let lengths: Vec<Float> = atoms.iter().map(|a| a.length.clone()).collect();
    let total = lengths.iter().fold(real(p, 0), |acc, l| acc + l);
    let first = Float::with_val(p, &lengths[0] / &total).to_f64();
    let last = Float::with_val(p, &lengths[lengths.len() - 1] / &total).to_f64();
    let split = window_steps(map, sk, n);
    let mut max_s = f64::NEG_INFINITY;
    let mut negative = 0usize;
    let mut count = 0usize;
    for a in &atoms {
        for s in 0..samples_per_atom {
            let t = real(p, (s as f64 + 0.5) / samples_per_atom as f64);
            let x = a.at(&t);
            let rs = return_schwarzian_split(map, qn1 as usize, &x, |j, _| split[j])?;
            let v = rs.total.to_f64();
            max_s = max_s.max(v);
            if rs.total < 0u32 {
                negative += 1;
            }
            count += 1;
        }
    }
    Ok(Some(AlmostParabolic {
        level: n,
        slot: i,
        q: qn1,
        k_range: (lo, hi),
        atoms,
        lengths,
        width: first.min(last),
        max_return_schwarzian: max_s,
        negative_fraction: if count == 0 {
            1.0
        } else {
            negative as f64 / count as f64
        },
        samples: count,
    }))
}

#[derive(Debug, Clone)]
pub struct YoccozRow {
    pub nu: usize,
    pub order: usize,
    pub length: f64,
    pub predicted: f64,
    /// log(length / predicted).
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct YoccozFit {
    pub slope: f64,
    /// Smallest C with C⁻¹A|I|/ord² ≤ |J_ν| ≤ C·A|I|/ord² for a fitted prefactor A.
    pub c_sigma: f64,
    pub prefactor: f64,
    pub rows: Vec<YoccozRow>,
}

pub fn order(nu: usize, ell: usize) -> usize {
    nu.min(ell + 1 - nu)
}

/// Least-squares slope of log|J_ν| against log ord(J_ν), leaving out the two
/// extreme atoms at each end; the envelope uses every atom.
pub fn yoccoz_fit(lengths: &[f64]) -> Result<YoccozFit> {
    let ell = lengths.len();
    if ell < 8 {
        return Err(Error::TooShort(ell));
    }
    let total: f64 = lengths.iter().sum();
    let pts: Vec<(f64, f64)> = (1..=ell)
        .filter(|&nu| nu > 2 && nu + 2 <= ell)
        .map(|nu| ((order(nu, ell) as f64).ln(), lengths[nu - 1].ln()))
        .collect();
    let slope = crate::circlemap::least_squares_slope(&pts);
    let scaled: Vec<f64> = (1..=ell)
        .map(|nu| lengths[nu - 1] * (order(nu, ell) as f64).powi(2) / total)
        .collect();
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let c_sigma = (hi / lo).sqrt();
    let prefactor = (hi * lo).sqrt();
    let rows = (1..=ell)
        .map(|nu| {
            let o = order(nu, ell);
            let predicted = prefactor * total / (o as f64).powi(2);
            YoccozRow {
                nu,
                order: o,
                length: lengths[nu - 1],
                predicted,
                residual: (lengths[nu - 1] / predicted).ln(),
            }
        })
        .collect();
    Ok(YoccozFit {
        slope,
        c_sigma,
        prefactor,
        rows,
    })
}

/// Grouped-ratio law: for 1 ≤ k < l < m ≤ ℓ compares
/// (|J_{l+1}| + … + |J_m|)/(|J_{k+1}| + … + |J_l|) with k(m−l)/(m(l−k)).
/// Returns the two-sided worst factor over the given triples.
pub fn grouped_ratio_check(lengths: &[f64], triples: &[(usize, usize, usize)]) -> Result<f64> {
    let ell = lengths.len();
    let mut prefix = vec![0.0; ell + 1];
    for (i, l) in lengths.iter().enumerate() {
        prefix[i + 1] = prefix[i] + l;
    }
    let mut worst: f64 = 1.0;
    for &(k, l, m) in triples {
        if !(1 <= k && k < l && l < m && m <= ell) {
            return Err(Error::InvalidInput(format!("bad triple ({k}, {l}, {m})")));
        }
        let upper = prefix[m] - prefix[l];
        let lower = prefix[l] - prefix[k];
        let model = (k * (m - l)) as f64 / (m * (l - k)) as f64;
        let r = (upper / lower) / model;
        worst = worst.max(r.max(1.0 / r));
    }
    Ok(worst)
}

/// Balanced decomposition of ℓ consecutive atoms; ranges are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedDecomposition {
    pub ell: usize,
    pub depth: usize,
    pub left: Vec<(usize, usize)>,
    pub right: Vec<(usize, usize)>,
    /// M_0 … M_{d+1}.
    pub central: Vec<(usize, usize)>,
}

impl BalancedDecomposition {
    /// Pieces L_0, …, L_d, M_{d+1}, R_d, …, R_0 in order along the chain.
    pub fn pieces(&self) -> Vec<(usize, usize)> {
        let mut out = self.left.clone();
        out.push(self.central[self.depth + 1]);
        out.extend(self.right.iter().rev());
        out
    }

    /// Whether the pieces tile 1..=ℓ with no gap or overlap.
    pub fn is_exact_tiling(&self) -> bool {
        let mut next = 1;
        for (a, b) in self.pieces() {
            if a != next || b < a {
                return false;
            }
            next = b + 1;
        }
        next == self.ell + 1
    }
}

pub fn balanced_decomposition(ell: usize) -> Result<BalancedDecomposition> {
    if ell < 4 {
        return Err(Error::TooShort(ell));
    }
    let mut d = 0;
    while 2usize.pow(d as u32 + 2) * 2 <= ell {
        d += 1;
    }
    let left = (0..=d).map(|i| (1 << i, (1 << (i + 1)) - 1)).collect();
    let right = (0..=d)
        .map(|i| (ell + 2 - (1 << (i + 1)), ell + 1 - (1 << i)))
        .collect();
    let central = (0..=d + 1).map(|i| (1 << i, ell + 1 - (1 << i))).collect();
    Ok(BalancedDecomposition {
        ell,
        depth: d,
        left,
        right,
        central,
    })
}

fn range_len(lengths: &[f64], r: (usize, usize)) -> f64 {
    lengths[r.0 - 1..r.1].iter().sum()
}

/// Worst comparability among |L_i|, |M_{i+1}|, |R_i| over all i.
pub fn balance_constant(dec: &BalancedDecomposition, lengths: &[f64]) -> f64 {
    let mut worst: f64 = 1.0;
    for i in 0..=dec.depth {
        let l = range_len(lengths, dec.left[i]);
        let m = range_len(lengths, dec.central[i + 1]);
        let r = range_len(lengths, dec.right[i]);
        let hi = l.max(m).max(r);
        let lo = l.min(m).min(r);
        worst = worst.max(hi / lo);
    }
    worst
}

#[derive(Debug, Clone)]
pub struct BridgeDecomposition {
    pub level: usize,
    pub slot: usize,
    pub image: u64,
    pub k_range: (u64, u64),
    pub lengths: Vec<f64>,
    /// None when the bridge has at most two atoms and stays at its regular scale.
    pub decomposition: Option<BalancedDecomposition>,
    pub balance: f64,
    pub koebe: Option<KoebeReport>,
}

/// Balanced decomposition of the full bridge f^j(G_i) over its constituent Δ's.
pub fn decompose_full_bridge(
    map: &MapModel,
    sk: &Skeleton,
    aux: &AuxPartition,
    i: usize,
    j: u64,
) -> Result<Option<BridgeDecomposition>> {
    let Some((lo, hi)) = aux.bridge_range(i) else {
        return Ok(None);
    };
    let n = aux.level;
    let idx = |k: u64| aux.q_n + k * aux.q_next + j;
    let lengths: Vec<f64> = (lo..=hi)
        .map(|k| sk.dyn_len(n + 1, idx(k)).to_f64())
        .collect();
    let ell = lengths.len();
    let mut out = BridgeDecomposition {
        level: n,
        slot: i,
        image: j,
        k_range: (lo, hi),
        lengths: lengths.clone(),
        decomposition: None,
        balance: 1.0,
        koebe: None,
    };
    if ell <= 2 {
        return Ok(Some(out));
    }
    if ell >= 4 {
        let dec = balanced_decomposition(ell)?;
        out.balance = balance_constant(&dec, &lengths);
        out.decomposition = Some(dec);
    }
    if j > 0 {
        let g = sk.delta_union(n, 0, lo, hi);
        let gs = sk.delta_union(n, 0, lo + 1, hi - 1);
        let pair = NestedPair::new(gs, g)?;
        out.koebe = Some(koebe_check(map, j as usize, &pair, 0.0)?);
    }
    Ok(Some(out))
}

/// First level in `levels` from which every sampled reduced-bridge point has
/// negative return Schwarzian, with the per-level verdicts.
pub fn detect_n0(verdicts: &[(usize, Option<bool>)]) -> Option<usize> {
    let mut n0 = None;
    for &(n, v) in verdicts.iter().rev() {
        match v {
            Some(false) => break,
            _ => n0 = Some(n),
        }
    }
    n0
}

pub fn log_length(x: &Float) -> f64 {
    log2_abs(x) * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_examples() {
        assert_eq!(reduce_range(3, 4), None);
        assert_eq!(reduce_range(3, 7), Some((4, 6)));
        assert_eq!(reduce_range(5, 5), None);
    }

    #[test]
    fn balanced_twenty() {
        let d = balanced_decomposition(20).unwrap();
        assert_eq!(d.depth, 2);
        assert_eq!(d.left, vec![(1, 1), (2, 3), (4, 7)]);
        assert_eq!(d.central[3], (8, 13));
        assert_eq!(d.right, vec![(20, 20), (18, 19), (14, 17)]);
        assert!(d.is_exact_tiling());
    }

    #[test]
    fn balanced_small() {
        let d = balanced_decomposition(4).unwrap();
        assert_eq!(d.depth, 0);
        assert_eq!(
            (d.left[0], d.central[1], d.right[0]),
            ((1, 1), (2, 3), (4, 4))
        );
        assert!(matches!(balanced_decomposition(3), Err(Error::TooShort(3))));
    }

    #[test]
    fn exact_yoccoz_model() {
        let ell = 40;
        let lens: Vec<f64> = (1..=ell)
            .map(|nu| 3.0 / (order(nu, ell) as f64).powi(2))
            .collect();
        let fit = yoccoz_fit(&lens).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-10);
        assert!((fit.c_sigma - 1.0).abs() < 1e-12);
        assert!(matches!(yoccoz_fit(&lens[..7]), Err(Error::TooShort(7))));
    }

    #[test]
    fn rotation_return_schwarzian_vanishes() {
        let r = crate::circlemap::build_rotation(&crate::num::golden(128), 128).unwrap();
        let s = return_schwarzian(&r, 13, &real(128, 0.3)).unwrap();
        assert!(s.total.is_zero());
    }

    #[test]
    fn n0_detection() {
        let v = [
            (1, Some(false)),
            (2, None),
            (3, Some(true)),
            (4, Some(true)),
        ];
        assert_eq!(detect_n0(&v), Some(2));
        assert_eq!(detect_n0(&[(1, Some(false))]), None);
    }
}
