//! Dynamical partitions P_n(c) and the auxiliary partitions P_n*(c₀).
//!
//! Every interval here is a *dynamical interval*: f^i(I_m(c)) with endpoints
//! f^i(c) and f^{i+q_m}(c). Orientation alternates with m: I_m(c) runs
//! counterclockwise from c when m is even and ends at c when m is odd.

use std::sync::Arc as Shared;

use rug::Float;

use crate::arc::{Arc, OrbitRef};
use crate::circlemap::{MapModel, Orbit};
use crate::error::{Error, Result};
use crate::num::{ccw, real, signed_gap};
use crate::rotation::ContinuedFraction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomKind {
    Long,
    Short,
    Spot,
    Bridge,
    Deep,
}

impl AtomKind {
    pub fn name(self) -> &'static str {
        match self {
            AtomKind::Long => "long",
            AtomKind::Short => "short",
            AtomKind::Spot => "spot",
            AtomKind::Bridge => "bridge",
            AtomKind::Deep => "deep",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Atom {
    pub kind: AtomKind,
    /// Image index: the atom is f^image of its primary interval.
    pub image: u64,
    /// Spot or bridge number i (0 for the other kinds).
    pub slot: usize,
    /// Range of Δ_k indices covered (spots and bridges), inclusive.
    pub deltas: Option<(u64, u64)>,
    pub arc: Arc,
}

/// The level-n dynamical partition of a base point.
#[derive(Debug, Clone)]
pub struct DynPartition {
    pub level: usize,
    pub base: usize,
    pub q_n: u64,
    pub q_next: u64,
    /// Atoms in counterclockwise order starting at the base point.
    pub atoms: Vec<Atom>,
}

impl DynPartition {
    pub fn long_count(&self) -> usize {
        self.atoms
            .iter()
            .filter(|a| a.kind == AtomKind::Long)
            .count()
    }

    pub fn short_count(&self) -> usize {
        self.atoms
            .iter()
            .filter(|a| a.kind == AtomKind::Short)
            .count()
    }

    pub fn total_length(&self) -> Float {
        let p = self.atoms[0].arc.length.prec();
        self.atoms
            .iter()
            .fold(real(p, 0), |acc, a| acc + &a.arc.length)
    }
}

/// Orbit data needed to build partitions of one base point.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub base: usize,
    pub cf: ContinuedFraction,
    pub orbit: Shared<Orbit>,
}

impl Skeleton {
    /// Orbit of critical point `base` (or of 0 for maps without one) long enough for `len` points.
    pub fn new(map: &MapModel, base: usize, len: u64) -> Result<Skeleton> {
        if base > 0 && base >= map.n_critical() {
            return Err(Error::InvalidInput(format!("no critical point {base}")));
        }
        let cf = map.combinatorics()?;
        let orbit = map.critical_orbit(base, len as usize)?;
        Ok(Skeleton { base, cf, orbit })
    }

    /// Skeleton able to serve levels up to `level` (needs q_{level+2} + q_{level+1} points).
    pub fn for_level(map: &MapModel, base: usize, level: usize) -> Result<Skeleton> {
        let cf = map.combinatorics()?;
        if level + 2 >= cf.depth() {
            return Err(Error::InvalidInput(format!(
                "level {level} needs {} partial quotients, only {} known",
                level + 3,
                cf.depth()
            )));
        }
        let need = cf.q(level + 2) + cf.q(level + 1);
        if let Some(cert) = map.certified_orbit_length() {
            if need > cert {
                return Err(Error::InvalidInput(format!(
                    "level {level} needs {need} orbit points, tuning certifies {cert}"
                )));
            }
        }
        Skeleton::new(map, base, need)
    }

    pub fn q(&self, m: usize) -> u64 {
        self.cf.q(m)
    }

    pub fn point(&self, i: u64) -> &Float {
        &self.orbit.points[i as usize]
    }

    /// f^i(I_m(c)).
    pub fn dyn_arc(&self, m: usize, i: u64) -> Arc {
        let span = self.cf.q(m);
        let a = OrbitRef {
            base: self.base,
            iterate: i as usize,
        };
        let b = OrbitRef {
            base: self.base,
            iterate: (i + span) as usize,
        };
        let (pa, pb) = (self.point(i).clone(), self.point(i + span).clone());
        if m.is_multiple_of(2) {
            Arc::new(pa, pb).with_refs(a, b)
        } else {
            Arc::new(pb, pa).with_refs(b, a)
        }
    }

    /// Length of f^i(I_m(c)) without building the arc.
    pub fn dyn_len(&self, m: usize, i: u64) -> Float {
        let span = self.cf.q(m);
        if m.is_multiple_of(2) {
            ccw(self.point(i), self.point(i + span))
        } else {
            ccw(self.point(i + span), self.point(i))
        }
    }

    /// Union of consecutive Δ_k = f^{q_n + k q_{n+1}}(I_{n+1}), k ∈ [lo, hi], pushed forward by f^j.
    pub fn delta_union(&self, n: usize, j: u64, lo: u64, hi: u64) -> Arc {
        let first = self.dyn_arc(n + 1, self.cf.q(n) + lo * self.cf.q(n + 1) + j);
        if lo == hi {
            return first;
        }
        let last = self.dyn_arc(n + 1, self.cf.q(n) + hi * self.cf.q(n + 1) + j);
        // Δ_k moves clockwise with k when n is even
        let (l, r) = if n.is_multiple_of(2) {
            (&last, &first)
        } else {
            (&first, &last)
        };
        Arc::new(l.left.clone(), r.right.clone())
            .with_refs(l.left_ref.unwrap(), r.right_ref.unwrap())
    }
}

fn order_and_check(atoms: &mut [Atom], origin: &Float) -> Result<()> {
    atoms.sort_by(|x, y| {
        let ox = ccw(origin, &x.arc.left);
        let oy = ccw(origin, &y.arc.left);
        ox.partial_cmp(&oy).unwrap()
    });
    let n = atoms.len();
    let prec = origin.prec();
    let total = atoms
        .iter()
        .fold(real(prec, 0), |acc, a| acc + &a.arc.length);
    let dev = Float::with_val(prec, &total - 1u32).abs().to_f64();
    let tol = (2 * n) as f64 * 2f64.powi(-(prec as i32) + 4);
    let chained = (0..n).all(|t| atoms[t].arc.right_ref == atoms[(t + 1) % n].arc.left_ref);
    if !chained || dev > tol {
        return Err(Error::CoverageFailure {
            total: total.to_f64(),
            deviation: dev,
        });
    }
    Ok(())
}

/// The level-n dynamical partition of critical point `c`.
pub fn build_partition(map: &MapModel, c: usize, n: usize) -> Result<DynPartition> {
    let sk = Skeleton::for_level(map, c, n.saturating_sub(1))?;
    partition_from(&sk, n)
}

pub fn partition_from(sk: &Skeleton, n: usize) -> Result<DynPartition> {
    let (qn, qn1) = (sk.q(n), sk.q(n + 1));
    if sk.orbit.len() < (qn + qn1 + 1) as usize {
        return Err(Error::InvalidInput(format!(
            "orbit too short for level {n}"
        )));
    }
    let mut atoms = Vec::with_capacity((qn + qn1) as usize);
    for i in 0..qn1 {
        atoms.push(Atom {
            kind: AtomKind::Long,
            image: i,
            slot: 0,
            deltas: None,
            arc: sk.dyn_arc(n, i),
        });
    }
    for j in 0..qn {
        atoms.push(Atom {
            kind: AtomKind::Short,
            image: j,
            slot: 0,
            deltas: None,
            arc: sk.dyn_arc(n + 1, j),
        });
    }
    order_and_check(&mut atoms, sk.point(0))?;
    Ok(DynPartition {
        level: n,
        base: sk.base,
        q_n: qn,
        q_next: qn1,
        atoms,
    })
}

/// `level,kind,index,left,right,length`, one row per atom in circular order.
pub fn partition_csv(level: usize, atoms: &[Atom], digits: usize, statement: &str) -> String {
    let mut out = format!("# {statement}\nlevel,kind,index,left,right,length\n");
    for a in atoms {
        out.push_str(&format!(
            "{level},{},{},{},{},{}\n",
            a.kind.name(),
            a.image,
            crate::num::to_decimal(&a.arc.left, digits),
            crate::num::to_decimal(&a.arc.right, digits),
            crate::num::to_decimal(&a.arc.length, digits),
        ));
    }
    out
}

/// Ratios of adjacent atoms.
#[derive(Debug, Clone)]
pub struct AdjacencyReport {
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// Position (in circular order) of the first atom of the worst pair.
    pub worst_pair: usize,
    /// max(max_ratio, 1/min_ratio).
    pub constant: f64,
}

pub fn adjacency_ratios(lengths: &[Float]) -> AdjacencyReport {
    let n = lengths.len();
    let mut rep = AdjacencyReport {
        max_ratio: 0.0,
        min_ratio: f64::INFINITY,
        worst_pair: 0,
        constant: 1.0,
    };
    for t in 0..n {
        let r = Float::with_val(lengths[t].prec(), &lengths[t] / &lengths[(t + 1) % n]).to_f64();
        rep.max_ratio = rep.max_ratio.max(r);
        rep.min_ratio = rep.min_ratio.min(r);
        let c = r.max(1.0 / r);
        if c > rep.constant {
            rep.constant = c;
            rep.worst_pair = t;
        }
    }
    rep
}

pub fn adjacency_report(p: &DynPartition) -> AdjacencyReport {
    let lens: Vec<Float> = p.atoms.iter().map(|a| a.arc.length.clone()).collect();
    adjacency_ratios(&lens)
}

/// max over `samples` of the two-sided ratio of |f^{q_n}(x) − x| and |x − f^{−q_n}(x)|.
pub fn symmetric_return_check(map: &MapModel, samples: &[Float], n: usize) -> Result<f64> {
    let cf = map.combinatorics()?;
    if n >= cf.depth() {
        return Err(Error::InvalidInput(format!(
            "level {n} beyond known combinatorics"
        )));
    }
    let q = cf.q(n) as i64;
    let mut worst: f64 = 1.0;
    for x in samples {
        let fwd = map.iterate(x, q);
        let bwd = map.iterate(x, -q);
        let a = signed_gap(x, &fwd).abs();
        let b = signed_gap(&bwd, x).abs();
        if a.is_zero() || b.is_zero() {
            return Err(Error::PrecisionExhausted {
                iterate: q as usize,
                bits_left: 0.0,
            });
        }
        let r = Float::with_val(map.prec, &a / &b).to_f64();
        worst = worst.max(r.max(1.0 / r));
    }
    Ok(worst)
}

pub const SIX_INTERVAL_NAMES: [&str; 6] = [
    "I_n",
    "I_n+1",
    "I_n^q_n",
    "I_n^q_n+1",
    "I_n+1^q_n",
    "I_n^(q_n+1 - q_n)",
];

#[derive(Debug, Clone)]
pub struct SixIntervalReport {
    pub lengths: [f64; 6],
    /// (i, j, |A_i|/|A_j|) for i < j.
    pub ratios: Vec<(usize, usize, f64)>,
    pub constant: f64,
}

/// The six intervals around c₀ at level n and their 15 pairwise ratios.
pub fn six_interval_check(map: &MapModel, n: usize) -> Result<SixIntervalReport> {
    let sk = Skeleton::for_level(map, 0, n.saturating_sub(1))?;
    six_interval_from(&sk, n)
}

pub fn six_interval_from(sk: &Skeleton, n: usize) -> Result<SixIntervalReport> {
    let (qn, qn1) = (sk.q(n), sk.q(n + 1));
    let lens = [
        sk.dyn_len(n, 0),
        sk.dyn_len(n + 1, 0),
        sk.dyn_len(n, qn),
        sk.dyn_len(n, qn1),
        sk.dyn_len(n + 1, qn),
        sk.dyn_len(n, qn1 - qn),
    ];
    let mut ratios = Vec::with_capacity(15);
    let mut constant: f64 = 1.0;
    for i in 0..6 {
        for j in (i + 1)..6 {
            let r = Float::with_val(lens[i].prec(), &lens[i] / &lens[j]).to_f64();
            constant = constant.max(r.max(1.0 / r));
            ratios.push((i, j, r));
        }
    }
    let mut lengths = [0.0; 6];
    for (o, l) in lengths.iter_mut().zip(lens.iter()) {
        *o = l.to_f64();
    }
    Ok(SixIntervalReport {
        lengths,
        ratios,
        constant,
    })
}

/// Fails with LevelTooLow when an atom of the partition holds two critical points.
pub fn check_separation(map: &MapModel, p: &DynPartition) -> Result<()> {
    for a in &p.atoms {
        let inside = map
            .critical
            .iter()
            .filter(|c| a.arc.contains(&c.position))
            .count();
        if inside >= 2 {
            return Err(Error::LevelTooLow(p.level));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct IntersectReport {
    pub worst: f64,
    pub pairs: usize,
}

/// Worst two-sided length ratio over overlapping atoms of P_n(c) and P_n(c′).
pub fn intersect_comparability(
    map: &MapModel,
    c: usize,
    c2: usize,
    n: usize,
) -> Result<IntersectReport> {
    let p1 = build_partition(map, c, n)?;
    let p2 = if c2 == c {
        p1.clone()
    } else {
        build_partition(map, c2, n)?
    };
    check_separation(map, &p1)?;
    check_separation(map, &p2)?;
    Ok(intersect_partitions(&p1, &p2))
}

pub fn intersect_partitions(p1: &DynPartition, p2: &DynPartition) -> IntersectReport {
    let mut worst: f64 = 1.0;
    let mut pairs = 0;
    for a in &p1.atoms {
        for b in &p2.atoms {
            if a.arc.overlaps(&b.arc) {
                pairs += 1;
                let r =
                    Float::with_val(a.arc.length.prec(), &a.arc.length / &b.arc.length).to_f64();
                worst = worst.max(r.max(1.0 / r));
            }
        }
    }
    IntersectReport { worst, pairs }
}

/// First level from `start` at which no atom of P_n(c) holds two critical points.
pub fn first_separated_level(map: &MapModel, c: usize, start: usize, max: usize) -> Result<usize> {
    for n in start..=max {
        let p = build_partition(map, c, n)?;
        if check_separation(map, &p).is_ok() {
            return Ok(n);
        }
    }
    Err(Error::LevelTooLow(max))
}

/// Circular order of f^i(c), i < len, against that of iρ mod 1.
pub fn orbit_order_check(map: &MapModel, c: usize, len: usize) -> Result<bool> {
    let cf = map.combinatorics()?;
    let orbit = map.critical_orbit(c, len)?;
    let rho = cf.value_with_golden_tail(map.prec);
    let mut by_orbit: Vec<usize> = (0..len).collect();
    by_orbit.sort_by(|&a, &b| {
        ccw(&orbit.points[0], &orbit.points[a])
            .partial_cmp(&ccw(&orbit.points[0], &orbit.points[b]))
            .unwrap()
    });
    let mut by_rot: Vec<usize> = (0..len).collect();
    let pos = |i: usize| crate::num::frac(&Float::with_val(map.prec, &rho * i as u64));
    by_rot.sort_by(|&a, &b| pos(a).partial_cmp(&pos(b)).unwrap());
    Ok(by_orbit == by_rot)
}

/// The auxiliary partition P_n*(c₀).
#[derive(Debug, Clone)]
pub struct AuxPartition {
    pub level: usize,
    pub a: u64,
    pub q_n: u64,
    pub q_next: u64,
    /// k_0 = 0 < k_1 < … < k_r.
    pub critical_times: Vec<u64>,
    pub atoms: Vec<Atom>,
    pub i_n: Arc,
    pub i_n2: Arc,
}

impl AuxPartition {
    pub fn r(&self) -> usize {
        self.critical_times.len() - 1
    }

    /// k_{i+1}, with k_{r+1} = a.
    pub fn next_time(&self, i: usize) -> u64 {
        self.critical_times.get(i + 1).copied().unwrap_or(self.a)
    }

    /// Δ range of bridge G_i, or None when empty.
    pub fn bridge_range(&self, i: usize) -> Option<(u64, u64)> {
        let (k0, k1) = (self.critical_times[i], self.next_time(i));
        if k1 >= k0 + 2 {
            Some((k0 + 1, k1 - 1))
        } else {
            None
        }
    }

    pub fn count(&self, kind: AtomKind) -> usize {
        self.atoms.iter().filter(|a| a.kind == kind).count()
    }
}

/// Fattening of arcs when testing whether they contain a critical point.
pub const CRITICAL_PAD: f64 = 1.0 / (1u64 << 40) as f64;

/// Critical times k ≥ 1: some f^j(Δ_k), 0 ≤ j < q_{n+1}, holds a critical point.
pub fn critical_times(map: &MapModel, sk: &Skeleton, n: usize) -> Vec<u64> {
    let (qn, qn1) = (sk.q(n), sk.q(n + 1));
    let a = sk.cf.a(n + 1);
    let mut times = vec![0u64];
    for k in 1..a {
        let start = qn + k * qn1;
        let hit = (0..qn1).any(|j| {
            let arc = sk.dyn_arc(n + 1, start + j);
            let pad = Float::with_val(map.prec, &arc.length * CRITICAL_PAD);
            map.critical
                .iter()
                .any(|c| arc.contains_padded(&c.position, &pad))
        });
        if hit {
            times.push(k);
        }
    }
    times
}

pub fn build_aux_partition(map: &MapModel, n: usize) -> Result<AuxPartition> {
    let sk = Skeleton::for_level(map, 0, n)?;
    aux_from(map, &sk, n)
}

pub fn aux_from(map: &MapModel, sk: &Skeleton, n: usize) -> Result<AuxPartition> {
    let (qn, qn1) = (sk.q(n), sk.q(n + 1));
    let a = sk.cf.a(n + 1);
    let times = critical_times(map, sk, n);
    let mut aux = AuxPartition {
        level: n,
        a,
        q_n: qn,
        q_next: qn1,
        critical_times: times,
        atoms: Vec::new(),
        i_n: sk.dyn_arc(n, 0),
        i_n2: sk.dyn_arc(n + 2, 0),
    };
    let mut atoms = Vec::new();
    for j in 0..qn1 {
        for (i, &k) in aux.critical_times.iter().enumerate() {
            atoms.push(Atom {
                kind: AtomKind::Spot,
                image: j,
                slot: i,
                deltas: Some((k, k)),
                arc: sk.dyn_arc(n + 1, qn + k * qn1 + j),
            });
            if let Some((lo, hi)) = aux.bridge_range(i) {
                atoms.push(Atom {
                    kind: AtomKind::Bridge,
                    image: j,
                    slot: i,
                    deltas: Some((lo, hi)),
                    arc: sk.delta_union(n, j, lo, hi),
                });
            }
        }
        atoms.push(Atom {
            kind: AtomKind::Deep,
            image: j,
            slot: 0,
            deltas: None,
            arc: sk.dyn_arc(n + 2, j),
        });
    }
    for l in 0..qn {
        atoms.push(Atom {
            kind: AtomKind::Short,
            image: l,
            slot: 0,
            deltas: None,
            arc: sk.dyn_arc(n + 1, l),
        });
    }
    order_and_check(&mut atoms, sk.point(0))?;
    aux.atoms = atoms;
    Ok(aux)
}

#[derive(Debug, Clone)]
pub struct SpotBridgeReport {
    /// |Δ_{k_i}| / |I_n(c₀)| for each critical time.
    pub spot_ratios: Vec<f64>,
    /// |G_i| / |I_n(c₀)|, None for empty bridges.
    pub bridge_ratios: Vec<Option<f64>>,
    pub empty_bridges: usize,
    /// Worst ratio of consecutive atoms of P_n*(c₀).
    pub consecutive: AdjacencyReport,
}

pub fn spot_and_bridge_size_check(aux: &AuxPartition) -> SpotBridgeReport {
    let p = aux.i_n.length.prec();
    let ratio = |x: &Float| Float::with_val(p, x / &aux.i_n.length).to_f64();
    let mut spot_ratios = vec![0.0; aux.critical_times.len()];
    let mut bridge_ratios = vec![None; aux.critical_times.len()];
    for a in aux.atoms.iter().filter(|a| a.image == 0) {
        match a.kind {
            AtomKind::Spot => spot_ratios[a.slot] = ratio(&a.arc.length),
            AtomKind::Bridge => bridge_ratios[a.slot] = Some(ratio(&a.arc.length)),
            _ => {}
        }
    }
    let empty_bridges = bridge_ratios.iter().filter(|b| b.is_none()).count();
    let lens: Vec<Float> = aux.atoms.iter().map(|a| a.arc.length.clone()).collect();
    SpotBridgeReport {
        spot_ratios,
        bridge_ratios,
        empty_bridges,
        consecutive: adjacency_ratios(&lens),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlemap::build_rotation;
    use crate::num::golden;

    fn golden_rotation() -> MapModel {
        build_rotation(&golden(256), 256).unwrap()
    }

    #[test]
    fn rotation_level_two_lengths() {
        let p = build_partition(&golden_rotation(), 0, 2).unwrap();
        assert_eq!(p.long_count(), 3);
        assert_eq!(p.short_count(), 2);
        for a in &p.atoms {
            let l = a.arc.len_f64();
            let want = if a.kind == AtomKind::Long {
                0.2360679774997897
            } else {
                0.1458980337503155
            };
            assert!((l - want).abs() < 1e-15, "{l}");
        }
    }

    #[test]
    fn level_zero_has_a0_plus_one_atoms() {
        let r = build_rotation(&(Float::with_val(256, 2).sqrt() - 1u32), 256).unwrap();
        let p = build_partition(&r, 0, 0).unwrap();
        assert_eq!(p.atoms.len(), 3);
    }

    #[test]
    fn rotation_adjacency_bounded() {
        let g = golden(256).to_f64();
        for n in 1..8 {
            let p = build_partition(&golden_rotation(), 0, n).unwrap();
            assert!(adjacency_report(&p).constant <= 1.0 / (g * g) + 1e-10);
        }
    }

    #[test]
    fn rotation_symmetric_return_is_one() {
        let xs: Vec<Float> = [0.1, 0.37, 0.8].iter().map(|&v| real(256, v)).collect();
        let w = symmetric_return_check(&golden_rotation(), &xs, 4).unwrap();
        assert!((w - 1.0).abs() < 1e-30);
    }

    #[test]
    fn golden_aux_partition_has_no_bridges() {
        let aux = build_aux_partition(&golden_rotation(), 3).unwrap();
        assert_eq!(aux.a, 1);
        assert_eq!(aux.critical_times, vec![0]);
        assert_eq!(aux.count(AtomKind::Bridge), 0);
        assert_eq!(aux.count(AtomKind::Spot) as u64, aux.q_next);
    }

    #[test]
    fn rotation_order_matches() {
        assert!(orbit_order_check(&golden_rotation(), 0, 200).unwrap());
    }
}
