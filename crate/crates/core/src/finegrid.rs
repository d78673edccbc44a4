//! Fine grids Q_1, Q_2, … built inductively from the auxiliary partitions.
//!
//! Atoms are described combinatorially:
//! * `Dyn { m, i }` is the dynamical interval f^i(I_m(c₀)) with i < q_{m+1}, a long atom of P_m.
//!   It splits along P_m*(c₀) into spots f^i(Δ_k), bridges and the deep atom f^i(I_{m+2}).
//! * The chain shapes cover consecutive f^j(Δ_k), k ∈ [lo, hi], of one level-m bridge.

use std::collections::HashMap;

use rug::Float;

use crate::arc::Arc;
use crate::circlemap::MapModel;
use crate::error::{Error, Result};
use crate::num::{ccw, to_decimal};
use crate::parabolic::balanced_decomposition;
use crate::partition::{critical_times, AtomKind, AuxPartition, Skeleton};

pub const DEFAULT_SN_THRESHOLD: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BridgeClass {
    Regular,
    SaddleNode,
}

/// A bridge is saddle-node when k_{i+1} − k_i exceeds the threshold.
pub fn classify_gap(gap: u64, threshold: u64) -> BridgeClass {
    if gap > threshold {
        BridgeClass::SaddleNode
    } else {
        BridgeClass::Regular
    }
}

/// Tag for every atom of P_n*(c₀), in the partition's order.
pub fn classify(aux: &AuxPartition, threshold: u64) -> Vec<BridgeClass> {
    aux.atoms
        .iter()
        .map(|a| match a.kind {
            AtomKind::Bridge => {
                let gap = aux.next_time(a.slot) - aux.critical_times[a.slot];
                classify_gap(gap, threshold)
            }
            _ => BridgeClass::Regular,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    /// A single atom of some P_m*.
    B1,
    /// A central interval of a balanced decomposition.
    B2,
    /// A union of at least two consecutive P_{m+1} atoms inside one refined atom.
    B3,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::B1 => "b1",
            Case::B2 => "b2",
            Case::B3 => "b3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Dyn {
        m: usize,
        i: u64,
    },
    /// Whole bridge f^j(G), at least two atoms.
    Bridge {
        m: usize,
        j: u64,
        lo: u64,
        hi: u64,
    },
    /// M_t of the balanced decomposition of the chain [base_lo, base_hi].
    Central {
        m: usize,
        j: u64,
        base_lo: u64,
        base_hi: u64,
        t: usize,
    },
    Union {
        m: usize,
        j: u64,
        lo: u64,
        hi: u64,
    },
}

impl Shape {
    pub fn case(&self) -> Case {
        match self {
            Shape::Dyn { .. } | Shape::Bridge { .. } => Case::B1,
            Shape::Central { .. } => Case::B2,
            Shape::Union { .. } => Case::B3,
        }
    }

    /// Δ range covered by a chain shape.
    pub fn chain_range(&self) -> Option<(u64, u64)> {
        match *self {
            Shape::Dyn { .. } => None,
            Shape::Bridge { lo, hi, .. } | Shape::Union { lo, hi, .. } => Some((lo, hi)),
            Shape::Central {
                base_lo,
                base_hi,
                t,
                ..
            } => {
                let ell = base_hi - base_lo + 1;
                let s = 1u64 << t;
                Some((base_lo + s - 1, base_lo + ell - s))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridAtom {
    pub id: usize,
    pub parent: Option<usize>,
    pub shape: Shape,
    pub prov_level: usize,
    /// Set on children of a final central interval.
    pub deviation: bool,
    pub arc: Arc,
}

impl GridAtom {
    pub fn case(&self) -> Case {
        self.shape.case()
    }
}

#[derive(Debug, Clone)]
pub struct GridLevel {
    pub level: usize,
    /// Counterclockwise from c₀, children grouped under their parents.
    pub atoms: Vec<GridAtom>,
}

#[derive(Debug, Clone)]
pub struct FineGrid {
    pub threshold: u64,
    pub n_critical: usize,
    pub levels: Vec<GridLevel>,
}

struct Builder<'a> {
    map: &'a MapModel,
    sk: &'a Skeleton,
    threshold: u64,
    times: HashMap<usize, Vec<u64>>,
}

impl Builder<'_> {
    fn times(&mut self, m: usize) -> Result<Vec<u64>> {
        if let Some(t) = self.times.get(&m) {
            return Ok(t.clone());
        }
        let need = self.sk.q(m + 2) + self.sk.q(m + 1);
        if m + 2 >= self.sk.cf.depth() || need as usize >= self.sk.orbit.len() {
            return Err(orbit_short(m, need));
        }
        let t = critical_times(self.map, self.sk, m);
        self.times.insert(m, t.clone());
        Ok(t)
    }

    fn delta_index(&self, m: usize, k: u64, j: u64) -> u64 {
        self.sk.q(m) + k * self.sk.q(m + 1) + j
    }

    fn arc(&self, s: &Shape) -> Result<Arc> {
        match *s {
            Shape::Dyn { m, i } => {
                let need = i + self.sk.q(m);
                if need as usize >= self.sk.orbit.len() {
                    return Err(orbit_short(m, need));
                }
                Ok(self.sk.dyn_arc(m, i))
            }
            _ => {
                let m = match *s {
                    Shape::Bridge { m, .. } | Shape::Central { m, .. } | Shape::Union { m, .. } => {
                        m
                    }
                    Shape::Dyn { .. } => unreachable!(),
                };
                let j = match *s {
                    Shape::Bridge { j, .. } | Shape::Central { j, .. } | Shape::Union { j, .. } => {
                        j
                    }
                    Shape::Dyn { .. } => unreachable!(),
                };
                let (lo, hi) = s.chain_range().unwrap();
                Ok(self.sk.delta_union(m, j, lo, hi))
            }
        }
    }

    /// Consecutive atoms k ∈ [lo, hi] as one shape: a single atom is a dynamical interval.
    fn chain_piece(&self, m: usize, j: u64, lo: u64, hi: u64) -> Shape {
        if lo == hi {
            Shape::Dyn {
                m: m + 1,
                i: self.delta_index(m, lo, j),
            }
        } else {
            Shape::Union { m, j, lo, hi }
        }
    }

    fn constituents(&self, m: usize, j: u64, lo: u64, hi: u64) -> Vec<Shape> {
        (lo..=hi)
            .map(|k| Shape::Dyn {
                m: m + 1,
                i: self.delta_index(m, k, j),
            })
            .collect()
    }

    /// L₀, M₁, R₀ of the chain [lo, hi].
    fn saddle_node_split(&self, m: usize, j: u64, lo: u64, hi: u64) -> Vec<Shape> {
        vec![
            self.chain_piece(m, j, lo, lo),
            Shape::Central {
                m,
                j,
                base_lo: lo,
                base_hi: hi,
                t: 1,
            },
            self.chain_piece(m, j, hi, hi),
        ]
    }

    /// Case (1) for a chain of P_{m+1} atoms.
    fn chain_case_one(&self, m: usize, j: u64, lo: u64, hi: u64) -> Vec<Shape> {
        if classify_gap(hi - lo + 2, self.threshold) == BridgeClass::SaddleNode {
            self.saddle_node_split(m, j, lo, hi)
        } else {
            self.constituents(m, j, lo, hi)
        }
    }

    /// Refinement of a P_m* atom's parent f^i(I_m) into P_m* atoms; saddle-node bridges kept whole.
    fn split_dyn(&mut self, m: usize, i: u64) -> Result<Vec<Shape>> {
        if i >= self.sk.q(m + 1) {
            return Err(Error::GridInvalid {
                level: m,
                detail: format!("f^{i}(I_{m}) is not a long atom of P_{m}"),
            });
        }
        let times = self.times(m)?;
        let a = self.sk.cf.a(m + 1);
        let mut out = Vec::new();
        for (s, &k) in times.iter().enumerate() {
            out.push(Shape::Dyn {
                m: m + 1,
                i: self.delta_index(m, k, i),
            });
            let next = times.get(s + 1).copied().unwrap_or(a);
            if next >= k + 2 {
                let (lo, hi) = (k + 1, next - 1);
                out.push(if lo == hi {
                    self.chain_piece(m, i, lo, hi)
                } else {
                    Shape::Bridge { m, j: i, lo, hi }
                });
            }
        }
        out.push(Shape::Dyn { m: m + 2, i });
        Ok(out)
    }

    /// Children of one atom, with the deviation flag for final central intervals.
    fn split(&mut self, s: &Shape) -> Result<(Vec<Shape>, bool)> {
        Ok(match *s {
            Shape::Dyn { m, i } => (self.split_dyn(m, i)?, false),
            Shape::Bridge { m, j, lo, hi } => (self.chain_case_one(m, j, lo, hi), false),
            Shape::Central {
                m,
                j,
                base_lo,
                base_hi,
                t,
            } => {
                let ell = (base_hi - base_lo + 1) as usize;
                let dec = balanced_decomposition(ell)?;
                let (lo, hi) = s.chain_range().unwrap();
                if t <= dec.depth {
                    let (l0, l1) = dec.left[t];
                    let (r0, r1) = dec.right[t];
                    let at = |nu: usize| base_lo + nu as u64 - 1;
                    (
                        vec![
                            self.chain_piece(m, j, at(l0), at(l1)),
                            Shape::Central {
                                m,
                                j,
                                base_lo,
                                base_hi,
                                t: t + 1,
                            },
                            self.chain_piece(m, j, at(r0), at(r1)),
                        ],
                        false,
                    )
                } else {
                    (self.chain_case_one(m, j, lo, hi), true)
                }
            }
            Shape::Union { m, j, lo, hi } => {
                let p = hi - lo + 1;
                let mid = lo + p / 2;
                (
                    vec![
                        self.chain_piece(m, j, lo, mid - 1),
                        self.chain_piece(m, j, mid, hi),
                    ],
                    false,
                )
            }
        })
    }

    fn ordered(&self, shapes: Vec<Shape>, origin: &Float) -> Result<Vec<(Shape, Arc)>> {
        let mut v = shapes
            .into_iter()
            .map(|s| self.arc(&s).map(|a| (s, a)))
            .collect::<Result<Vec<_>>>()?;
        v.sort_by(|x, y| {
            ccw(origin, &x.1.left)
                .partial_cmp(&ccw(origin, &y.1.left))
                .unwrap()
        });
        Ok(v)
    }
}

fn orbit_short(m: usize, need: u64) -> Error {
    Error::InvalidInput(format!(
        "level {m} needs orbit index {need}, beyond the available orbit"
    ))
}

fn is_saddle_node(s: &Shape, threshold: u64) -> bool {
    matches!(*s, Shape::Bridge { lo, hi, .. } if classify_gap(hi - lo + 2, threshold) == BridgeClass::SaddleNode)
}

/// Orbit length needed for Q_1 … Q_{n_max}.
pub fn orbit_budget(sk_cf: &crate::rotation::ContinuedFraction, n_max: usize) -> u64 {
    let top = (2 * n_max + 1).min(sk_cf.depth().saturating_sub(1));
    sk_cf.q(top) + sk_cf.q(top.saturating_sub(1)) + 1
}

pub fn build_grid(map: &MapModel, n_max: usize, threshold: u64) -> Result<FineGrid> {
    let cf = map.combinatorics()?;
    let len = orbit_budget(&cf, n_max);
    if let Some(cert) = map.certified_orbit_length() {
        let top = (2 * n_max + 6).min(cf.depth() - 1);
        if cf.q(top) > cert {
            return Err(Error::InvalidInput(format!(
                "grid depth {n_max} needs the tuning to certify {} iterates, it certifies {cert}",
                cf.q(top)
            )));
        }
    }
    let sk = Skeleton::new(map, 0, len)?;
    build_grid_from(map, &sk, n_max, threshold)
}

pub fn build_grid_from(
    map: &MapModel,
    sk: &Skeleton,
    n_max: usize,
    threshold: u64,
) -> Result<FineGrid> {
    if n_max == 0 {
        return Err(Error::InvalidInput("grid needs at least one level".into()));
    }
    if threshold < 3 {
        return Err(Error::InvalidInput(
            "saddle-node threshold must be at least 3".into(),
        ));
    }
    let mut b = Builder {
        map,
        sk,
        threshold,
        times: HashMap::new(),
    };
    let origin = sk.point(0).clone();
    let mut base = Vec::new();
    for j in 0..sk.q(2) {
        for s in b.split_dyn(1, j)? {
            if is_saddle_node(&s, threshold) {
                base.extend(b.split(&s)?.0);
            } else {
                base.push(s);
            }
        }
    }
    for l in 0..sk.q(1) {
        base.push(Shape::Dyn { m: 2, i: l });
    }
    let first: Vec<GridAtom> = b
        .ordered(base, &origin)?
        .into_iter()
        .enumerate()
        .map(|(id, (shape, arc))| GridAtom {
            id,
            parent: None,
            shape,
            prov_level: 1,
            deviation: false,
            arc,
        })
        .collect();
    let mut levels = vec![GridLevel {
        level: 1,
        atoms: first,
    }];
    for n in 2..=n_max {
        let prev = &levels[n - 2].atoms;
        let mut atoms = Vec::new();
        for parent in prev {
            let (kids, deviation) = b.split(&parent.shape)?;
            if kids.len() < 2 {
                return Err(Error::GridInvalid {
                    level: n,
                    detail: format!("atom {} does not split", parent.id),
                });
            }
            let prov = match parent.shape {
                Shape::Dyn { m, .. } => m,
                Shape::Bridge { m, .. } | Shape::Central { m, .. } | Shape::Union { m, .. } => m,
            };
            for (shape, arc) in b.ordered(kids, &parent.arc.left)? {
                atoms.push(GridAtom {
                    id: atoms.len(),
                    parent: Some(parent.id),
                    shape,
                    prov_level: prov,
                    deviation,
                    arc,
                });
            }
        }
        levels.push(GridLevel { level: n, atoms });
    }
    Ok(FineGrid {
        threshold,
        n_critical: map.n_critical().max(1),
        levels,
    })
}

#[derive(Debug, Clone)]
pub struct GridReport {
    pub levels: usize,
    /// Largest number of children of one atom.
    pub a_observed: usize,
    /// Largest adjacent-atom ratio over all levels.
    pub rho_observed: f64,
    pub alpha: f64,
    pub beta: f64,
    pub children_bound: usize,
    pub children_ok: bool,
    pub max_children: Vec<usize>,
    pub rho_per_level: Vec<f64>,
    /// Extreme child/parent length ratios seen.
    pub ratio_range: (f64, f64),
    pub case_counts: [usize; 3],
    pub deviations: usize,
}

/// α = (aρ^{a−1})⁻¹.
pub fn alpha_from(a: usize, rho: f64) -> f64 {
    1.0 / (a as f64 * rho.powi(a as i32 - 1))
}

/// β = (1 + ρ⁻¹)⁻¹.
pub fn beta_from(rho: f64) -> f64 {
    1.0 / (1.0 + 1.0 / rho)
}

fn chained(
    kids: &[&GridAtom],
    left: Option<crate::arc::OrbitRef>,
    right: Option<crate::arc::OrbitRef>,
) -> bool {
    kids.first().map(|k| k.arc.left_ref) == Some(left)
        && kids.last().map(|k| k.arc.right_ref) == Some(right)
        && kids
            .windows(2)
            .all(|w| w[0].arc.right_ref == w[1].arc.left_ref)
}

fn ratio(a: &Float, b: &Float) -> f64 {
    Float::with_val(a.prec(), a / b).to_f64()
}

pub fn validate_grid(grid: &FineGrid) -> Result<GridReport> {
    let levels = &grid.levels;
    if levels.len() < 2 {
        return Err(Error::GridInvalid {
            level: levels.len(),
            detail: "need at least two levels".into(),
        });
    }
    let first = &levels[0].atoms;
    let refs: Vec<&GridAtom> = first.iter().collect();
    if !chained(&refs, first[0].arc.left_ref, first[0].arc.left_ref) {
        return Err(Error::GridInvalid {
            level: 1,
            detail: "base level does not tile the circle".into(),
        });
    }
    let mut case_counts = [0usize; 3];
    let mut deviations = 0;
    let mut rho_per_level = Vec::new();
    for lv in levels {
        let n = lv.atoms.len();
        let mut worst: f64 = 1.0;
        for t in 0..n {
            let r = ratio(&lv.atoms[t].arc.length, &lv.atoms[(t + 1) % n].arc.length);
            worst = worst.max(r.max(1.0 / r));
        }
        rho_per_level.push(worst);
        for a in &lv.atoms {
            case_counts[a.case() as usize] += 1;
            deviations += a.deviation as usize;
        }
    }
    let rho = rho_per_level.iter().cloned().fold(1.0, f64::max);
    let mut max_children = Vec::new();
    let mut pairs = Vec::new();
    for w in levels.windows(2) {
        let (up, down) = (&w[0], &w[1]);
        let mut groups: Vec<Vec<&GridAtom>> = vec![Vec::new(); up.atoms.len()];
        let mut last = 0;
        for a in &down.atoms {
            let p = a.parent.ok_or_else(|| Error::GridInvalid {
                level: down.level,
                detail: format!("atom {} has no parent", a.id),
            })?;
            if p >= groups.len() || p < last {
                return Err(Error::GridInvalid {
                    level: down.level,
                    detail: format!("atom {} misplaced", a.id),
                });
            }
            last = p;
            groups[p].push(a);
        }
        let mut most = 0;
        for (p, kids) in groups.iter().enumerate() {
            let parent = &up.atoms[p];
            if kids.len() < 2 || !chained(kids, parent.arc.left_ref, parent.arc.right_ref) {
                return Err(Error::GridInvalid {
                    level: down.level,
                    detail: format!("children of atom {p} do not strictly refine it"),
                });
            }
            most = most.max(kids.len());
            for k in kids {
                pairs.push((
                    down.level,
                    p,
                    k.id,
                    ratio(&k.arc.length, &parent.arc.length),
                ));
            }
        }
        max_children.push(most);
    }
    let a = max_children.iter().copied().max().unwrap_or(0);
    let alpha = alpha_from(a, rho);
    let beta = beta_from(rho);
    let slack = 1e-12;
    let mut range = (f64::INFINITY, 0.0f64);
    for &(level, p, c, r) in &pairs {
        range = (range.0.min(r), range.1.max(r));
        if r < alpha * (1.0 - slack) || r > beta * (1.0 + slack) {
            return Err(Error::GridInvalid {
                level,
                detail: format!("child {c} / parent {p} ratio {r:e} outside [{alpha:e}, {beta:e}]"),
            });
        }
    }
    let bound = 4 * grid.n_critical + 3;
    Ok(GridReport {
        levels: levels.len(),
        a_observed: a,
        rho_observed: rho,
        alpha,
        beta,
        children_bound: bound,
        children_ok: a <= bound,
        max_children,
        rho_per_level,
        ratio_range: range,
        case_counts,
        deviations,
    })
}

pub fn shape_label(s: &Shape) -> String {
    match *s {
        Shape::Dyn { m, i } => format!("dyn:{m}:{i}"),
        Shape::Bridge { m, j, lo, hi } => format!("bridge:{m}:{j}:{lo}-{hi}"),
        Shape::Central {
            m,
            j,
            base_lo,
            base_hi,
            t,
        } => format!("central:{m}:{j}:{base_lo}-{base_hi}:{t}"),
        Shape::Union { m, j, lo, hi } => format!("union:{m}:{j}:{lo}-{hi}"),
    }
}

pub fn grid_csv(grid: &FineGrid, digits: usize) -> String {
    let mut out = format!(
        "# fine grid: strict refinement with bounded children and adjacent ratios; sn-threshold={}\n",
        grid.threshold
    );
    out.push_str("level,atom_id,parent_id,case,prov_level,left,right,length\n");
    for lv in &grid.levels {
        for a in &lv.atoms {
            let parent = a.parent.map(|p| p.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                lv.level,
                a.id,
                parent,
                a.case().name(),
                a.prov_level,
                to_decimal(&a.arc.left, digits),
                to_decimal(&a.arc.right, digits),
                to_decimal(&a.arc.length, digits),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlemap::build_rotation;
    use crate::num::golden;

    #[test]
    fn threshold_edges() {
        assert_eq!(classify_gap(1000, 1000), BridgeClass::Regular);
        assert_eq!(classify_gap(1002, 1000), BridgeClass::SaddleNode);
    }

    #[test]
    fn greek_constants() {
        assert!((alpha_from(7, 2.0) - 1.0 / 448.0).abs() < 1e-15);
        assert!((beta_from(2.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_grid_golden() {
        let r = build_rotation(&golden(256), 256).unwrap();
        let g = build_grid(&r, 8, DEFAULT_SN_THRESHOLD).unwrap();
        let rep = validate_grid(&g).unwrap();
        assert!(rep.children_ok);
        assert!(
            rep.rho_observed <= 2.618033988749895 + 1e-9,
            "{}",
            rep.rho_observed
        );
        assert_eq!(rep.case_counts[1] + rep.case_counts[2], 0);
    }

    #[test]
    fn single_level_rejected() {
        let r = build_rotation(&golden(128), 128).unwrap();
        let g = build_grid(&r, 1, DEFAULT_SN_THRESHOLD).unwrap();
        assert!(matches!(validate_grid(&g), Err(Error::GridInvalid { .. })));
    }

    #[test]
    fn saddle_node_bridge_split() {
        // prefix [1, 1, 12, ...] gives a bridge of 11 atoms at level 1
        let cf =
            crate::rotation::ContinuedFraction::from_quotients(&[1, 1, 12, 1, 1, 1, 1, 1, 1, 1])
                .unwrap();
        let r = build_rotation(&cf.value_with_golden_tail(256), 256).unwrap();
        let g = build_grid(&r, 4, 5).unwrap();
        let rep = validate_grid(&g).unwrap();
        assert!(rep.case_counts[1] > 0 && rep.case_counts[2] > 0);
        let lvl1 = &g.levels[0].atoms;
        assert!(lvl1.iter().any(|a| a.case() == Case::B2));
    }
}
