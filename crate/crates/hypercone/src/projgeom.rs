//! Geometry of the projective line P¹.
//!
//! A point of P¹ is a line through the origin of ℝ², stored as the angle of a
//! spanning vector reduced into `[0, π)`. The positive cyclic order is the order
//! of increasing angle. Arcs are oriented positively, from `start` to `end`.
//!
//! The module provides cross-ratios, Hilbert metrics on arcs and the
//! contraction factor of a nested pair of arcs.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Angular tolerance used for equality of projective points.
pub const TOL_ANGLE: f64 = 1e-10;

/// Number of grid points used when estimating the contraction factor of a nested pair of arcs.
pub const CONTRACTION_GRID: usize = 1024;

/// Safety margin subtracted from the contraction factor estimate.
pub const CONTRACTION_MARGIN: f64 = 1e-6;

/// Errors raised by the projective geometry primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("point at angle {0} lies outside the arc")]
    OutOfArc(f64),
    #[error("invalid arc: {0}")]
    InvalidArc(String),
    #[error("invalid multicone: {0}")]
    InvalidMultiCone(String),
}

/// Reduce an angle into `[0, π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Forward angular distance from `a` to `b`, in `[0, π)`.
pub fn fwd(a: f64, b: f64) -> f64 {
    wrap_angle(b - a)
}

/// Distance between two angles measured on P¹, in `[0, π/2]`.
pub fn angle_dist(a: f64, b: f64) -> f64 {
    let d = fwd(a, b);
    d.min(PI - d)
}

/// A point of P¹, identified with the line spanned by `(cos angle, sin angle)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProjPoint {
    angle: f64,
}

impl ProjPoint {
    /// Build a point from any real angle; the angle is reduced into `[0, π)`.
    pub fn new(angle: f64) -> Self {
        ProjPoint { angle: wrap_angle(angle) }
    }

    /// The line spanned by a nonzero vector.
    pub fn from_vec(x: f64, y: f64) -> Result<Self, GeomError> {
        if x == 0.0 && y == 0.0 || !x.is_finite() || !y.is_finite() {
            return Err(GeomError::DegenerateInput(format!("zero or non-finite vector ({x}, {y})")));
        }
        Ok(ProjPoint::new(y.atan2(x)))
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Unit representative `(cos, sin)`.
    pub fn unit(&self) -> (f64, f64) {
        (self.angle.cos(), self.angle.sin())
    }

    /// Slope in the affine chart `t ↦ span(1, t)`; infinite for the vertical line.
    pub fn slope(&self) -> f64 {
        let (c, s) = self.unit();
        if c.abs() < 1e-300 {
            f64::INFINITY
        } else {
            s / c
        }
    }

    /// Point with the given slope in the chart `t ↦ span(1, t)`.
    pub fn from_slope(t: f64) -> Self {
        if t.is_infinite() {
            ProjPoint::new(PI / 2.0)
        } else {
            ProjPoint::new(t.atan())
        }
    }

    /// Tolerance-aware equality: angles closer than `TOL_ANGLE` on P¹.
    pub fn approx_eq(&self, other: &ProjPoint) -> bool {
        angle_dist(self.angle, other.angle) <= TOL_ANGLE
    }

    /// Distance on P¹ in the angle metric.
    pub fn dist(&self, other: &ProjPoint) -> f64 {
        angle_dist(self.angle, other.angle)
    }
}

impl PartialEq for ProjPoint {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other)
    }
}

fn check_distinct(points: &[ProjPoint]) -> Result<(), GeomError> {
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if points[i].approx_eq(&points[j]) {
                return Err(GeomError::DegenerateInput(format!(
                    "points {i} and {j} coincide at angle {}",
                    points[i].angle
                )));
            }
        }
    }
    Ok(())
}

/// True iff `b` lies strictly inside the positively oriented arc from `a` to `c`.
pub fn cyclic_between(a: ProjPoint, b: ProjPoint, c: ProjPoint) -> Result<bool, GeomError> {
    check_distinct(&[a, b, c])?;
    Ok(fwd(a.angle, b.angle) < fwd(a.angle, c.angle))
}

/// True iff the given points are pairwise distinct and occur in this positive cyclic order.
pub fn in_cyclic_order(points: &[ProjPoint]) -> bool {
    if check_distinct(points).is_err() {
        return false;
    }
    if points.len() < 3 {
        return true;
    }
    let base = points[0].angle;
    let offsets: Vec<f64> = points.iter().map(|p| fwd(base, p.angle)).collect();
    offsets.windows(2).all(|w| w[0] < w[1])
}

/// Cross-ratio `[a,b,c,d] = (c−a)(d−b) / ((b−a)(d−c))`, evaluated through 2×2 determinants of
/// unit representatives so that no chart needs to be chosen.
pub fn cross_ratio(a: ProjPoint, b: ProjPoint, c: ProjPoint, d: ProjPoint) -> Result<f64, GeomError> {
    check_distinct(&[a, b, c, d])?;
    let det = |p: ProjPoint, q: ProjPoint| (q.angle - p.angle).sin();
    Ok(det(a, c) * det(b, d) / (det(a, b) * det(c, d)))
}

/// An open arc of P¹ running positively from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcP1 {
    pub start: ProjPoint,
    pub end: ProjPoint,
}

impl ArcP1 {
    pub fn new(start: ProjPoint, end: ProjPoint) -> Result<Self, GeomError> {
        if start.approx_eq(&end) {
            return Err(GeomError::InvalidArc("start and end coincide".into()));
        }
        Ok(ArcP1 { start, end })
    }

    /// Arc given by a start angle and a positive length `< π`.
    pub fn from_start_len(start: f64, len: f64) -> Result<Self, GeomError> {
        if !(len > TOL_ANGLE && len < PI - TOL_ANGLE) {
            return Err(GeomError::InvalidArc(format!("length {len} outside (0, π)")));
        }
        ArcP1::new(ProjPoint::new(start), ProjPoint::new(start + len))
    }

    pub fn len(&self) -> f64 {
        fwd(self.start.angle, self.end.angle)
    }

    /// Offset of a point from the start of the arc, in `[0, π)`.
    pub fn offset(&self, p: ProjPoint) -> f64 {
        fwd(self.start.angle, p.angle)
    }

    /// Strict membership.
    pub fn contains(&self, p: ProjPoint) -> bool {
        let t = self.offset(p);
        t > 0.0 && t < self.len()
    }

    /// Midpoint of the arc.
    pub fn midpoint(&self) -> ProjPoint {
        ProjPoint::new(self.start.angle + self.len() / 2.0)
    }

    /// Hilbert density at offset `t ∈ (0, L)`: the derivative of the Hilbert metric with respect
    /// to the angle.
    pub fn density_at_offset(&self, t: f64) -> f64 {
        let l = self.len();
        l.sin() / (t.sin() * (l - t).sin())
    }

    /// Point at Hilbert distance `eps` from the point at offset `t`, moving towards the end
    /// (`forward = true`) or towards the start.
    pub fn shift_by_hilbert(&self, t: f64, eps: f64, forward: bool) -> f64 {
        let l = self.len();
        let k0 = t.sin() / (l - t).sin();
        let k = if forward { k0 * eps.exp() } else { k0 * (-eps).exp() };
        (k * l.sin()).atan2(1.0 + k * l.cos())
    }
}

/// Hilbert distance `|log [a,x,y,b]|` between two points inside an arc `(a,b)`.
pub fn hilbert_dist(arc: &ArcP1, x: ProjPoint, y: ProjPoint) -> Result<f64, GeomError> {
    for p in [x, y] {
        if !arc.contains(p) {
            return Err(GeomError::OutOfArc(p.angle));
        }
    }
    let l = arc.len();
    let tx = arc.offset(x);
    let ty = arc.offset(y);
    let v = (ty.sin() * (l - tx).sin()) / (tx.sin() * (l - ty).sin());
    Ok(v.ln().abs())
}

/// Lower estimate of the contraction factor `λ(I,J)` for arcs `J ⋐ I`: the infimum over `J` of the
/// ratio of Hilbert densities `ρ_J / ρ_I`, taken on a grid, refined locally, then reduced by a
/// safety margin. Distances inside `J` satisfy `d_J ≥ λ(I,J)·d_I`.
pub fn contraction_factor(outer: &ArcP1, inner: &ArcP1) -> Result<f64, GeomError> {
    let lo = outer.offset(inner.start);
    let hi = lo + inner.len();
    if !(lo > 0.0 && hi < outer.len()) {
        return Err(GeomError::InvalidArc("inner arc is not compactly contained in the outer arc".into()));
    }
    let ratio = |s: f64| inner.density_at_offset(s) / outer.density_at_offset(lo + s);
    let n = CONTRACTION_GRID;
    let h = inner.len() / n as f64;
    let mut best = f64::INFINITY;
    let mut best_k = 0;
    for k in 0..n {
        let v = ratio((k as f64 + 0.5) * h);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    // Golden-section refinement on the bracket around the best grid point.
    let mut a = (best_k as f64 - 0.5).max(0.0) * h + 1e-15;
    let mut b = ((best_k as f64 + 1.5) * h).min(inner.len() - 1e-15);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if ratio(c) < ratio(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best = best.min(ratio(0.5 * (a + b)));
    Ok(best - CONTRACTION_MARGIN)
}

/// A finite union of open arcs with pairwise disjoint closures, listed in cyclic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiCone {
    arcs: Vec<ArcP1>,
}

impl MultiCone {
    pub fn new(mut arcs: Vec<ArcP1>) -> Result<Self, GeomError> {
        if arcs.is_empty() {
            return Err(GeomError::InvalidMultiCone("no components".into()));
        }
        arcs.sort_by(|x, y| x.start.angle.total_cmp(&y.start.angle));
        let total: f64 = arcs.iter().map(|a| a.len()).sum();
        if total >= PI - TOL_ANGLE {
            return Err(GeomError::InvalidMultiCone("union is dense in P¹".into()));
        }
        let k = arcs.len();
        for i in 0..k {
            let cur = arcs[i];
            let next = arcs[(i + 1) % k];
            let gap = fwd(cur.end.angle, next.start.angle);
            let span = fwd(cur.start.angle, next.start.angle);
            if k > 1 && (span < cur.len() + TOL_ANGLE || gap <= TOL_ANGLE) {
                return Err(GeomError::InvalidMultiCone(format!("components {i} and {} have meeting closures", (i + 1) % k)));
            }
        }
        Ok(MultiCone { arcs })
    }

    /// Build from `[start, end]` angle pairs, the exchange format of the command line tool.
    pub fn from_angle_pairs(pairs: &[[f64; 2]]) -> Result<Self, GeomError> {
        let arcs = pairs
            .iter()
            .map(|p| ArcP1::new(ProjPoint::new(p[0]), ProjPoint::new(p[1])))
            .collect::<Result<Vec<_>, _>>()?;
        MultiCone::new(arcs)
    }

    pub fn arcs(&self) -> &[ArcP1] {
        &self.arcs
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Index of the component containing `p`, if any.
    pub fn component_of(&self, p: ProjPoint) -> Option<usize> {
        self.arcs.iter().position(|a| a.contains(p))
    }

    /// Angle pairs for serialization.
    pub fn to_angle_pairs(&self) -> Vec<[f64; 2]> {
        self.arcs.iter().map(|a| [a.start.angle(), a.end.angle()]).collect()
    }
}
