//! Oriented closed arcs on R/Z.

use rug::Float;

use crate::num::ccw;

/// An endpoint given as an iterate of a base point: f^iterate(base).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrbitRef {
    pub base: usize,
    pub iterate: usize,
}

/// Counterclockwise arc from `left` to `right`. Endpoints live in [0, 1).
#[derive(Debug, Clone)]
pub struct Arc {
    pub left: Float,
    pub right: Float,
    pub length: Float,
    pub left_ref: Option<OrbitRef>,
    pub right_ref: Option<OrbitRef>,
}

impl Arc {
    pub fn new(left: Float, right: Float) -> Arc {
        let length = ccw(&left, &right);
        Arc {
            left,
            right,
            length,
            left_ref: None,
            right_ref: None,
        }
    }

    /// The whole circle cut open at `at`.
    pub fn full(at: Float) -> Arc {
        let length = Float::with_val(at.prec(), 1);
        Arc {
            left: at.clone(),
            right: at,
            length,
            left_ref: None,
            right_ref: None,
        }
    }

    pub fn with_refs(mut self, left: OrbitRef, right: OrbitRef) -> Arc {
        self.left_ref = Some(left);
        self.right_ref = Some(right);
        self
    }

    pub fn len_f64(&self) -> f64 {
        self.length.to_f64()
    }

    /// Offset of `x` from the left end, counterclockwise, in [0, 1).
    pub fn offset(&self, x: &Float) -> Float {
        ccw(&self.left, x)
    }

    /// Closed-arc membership.
    pub fn contains(&self, x: &Float) -> bool {
        self.offset(x) <= self.length
    }

    /// Membership in the arc widened by `pad` on both sides.
    pub fn contains_padded(&self, x: &Float, pad: &Float) -> bool {
        let shifted = Float::with_val(x.prec(), x + pad);
        let off = self.offset(&shifted);
        let span = Float::with_val(x.prec(), &self.length + pad) + pad;
        span >= 1u32 || off <= span
    }

    /// Membership in the open arc.
    pub fn contains_interior(&self, x: &Float) -> bool {
        let off = self.offset(x);
        !off.is_zero() && off < self.length
    }

    /// Whether the two arcs share an interior point.
    pub fn overlaps(&self, other: &Arc) -> bool {
        if self.length >= 1u32 || other.length >= 1u32 {
            return true;
        }
        let a = self.offset(&other.left);
        // other starts strictly inside self, or self starts inside other
        (a < self.length && !(a.is_zero() && other.length.is_zero()))
            || other.offset(&self.left) < other.length
    }

    /// Midpoint of the arc.
    pub fn midpoint(&self) -> Float {
        let half = Float::with_val(self.length.prec(), &self.length / 2u32);
        crate::num::frac(&(half + &self.left))
    }

    /// Point at fraction `t` ∈ [0, 1] along the arc.
    pub fn at(&self, t: &Float) -> Float {
        let step = Float::with_val(self.length.prec(), &self.length * t);
        crate::num::frac(&(step + &self.left))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::real;

    #[test]
    fn wrapping_arc() {
        let a = Arc::new(real(128, 0.9), real(128, 0.1));
        assert!((a.len_f64() - 0.2).abs() < 1e-15);
        assert!(a.contains(&real(128, 0.95)));
        assert!(a.contains(&real(128, 0.05)));
        assert!(!a.contains(&real(128, 0.5)));
        assert!(a.contains(&real(128, 0.1)));
        assert!(!a.contains_interior(&real(128, 0.1)));
    }

    #[test]
    fn overlap_cases() {
        let a = Arc::new(real(128, 0.1), real(128, 0.3));
        let b = Arc::new(real(128, 0.3), real(128, 0.5));
        let c = Arc::new(real(128, 0.2), real(128, 0.4));
        assert!(!a.overlaps(&b));
        assert!(!b.overlaps(&a));
        assert!(a.overlaps(&c));
        assert!(c.overlaps(&a));
        let d = Arc::new(real(128, 0.0), real(128, 0.6));
        assert!(d.overlaps(&a));
        assert!(a.overlaps(&d));
    }

    #[test]
    fn padded_membership() {
        let a = Arc::new(real(128, 0.1), real(128, 0.3));
        let pad = real(128, 0.01);
        assert!(a.contains_padded(&real(128, 0.305), &pad));
        assert!(a.contains_padded(&real(128, 0.095), &pad));
        assert!(!a.contains_padded(&real(128, 0.32), &pad));
    }
}
