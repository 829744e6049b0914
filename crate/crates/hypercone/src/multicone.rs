//! Multicone certification of uniform hyperbolicity, unstable and stable cores, tightness and the
//! combinatorial contraction length.
//!
//! A family of multicones `(M_α)` certifies a tuple over a subshift when every allowed transition
//! `α → β` maps the closure of `M_α` into `M_β` by `A_β`. The Hilbert metrics of the components
//! then contract uniformly, which yields the growth bound `‖P‖ ≥ C^{-1/2} λ^{n/2}` for products of
//! length `n`, where `λ` and `C` are reported by [`certify`].

use crate::projgeom::{contraction_factor, fwd, wrap_angle, ArcP1, GeomError, MultiCone, ProjPoint, TOL_ANGLE};
use crate::sl2core::{Mat2, MatClass, Tolerances};
use crate::symdyn::{admissible_words, periodic_dirs, periodic_words, product_unchecked, Sft, SymError, Word};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::f64::consts::PI;
use thiserror::Error;

/// Minimal angular margin for the compact inclusion of an image arc.
pub const MARGIN_MIN: f64 = 1e-8;

/// Tolerance used by invariance checks on cores.
pub const CORE_TOL: f64 = 1e-9;

/// Largest contraction length explored by [`single_component_length`].
pub const SINGLE_COMPONENT_BUDGET: usize = 64;

/// Errors raised by the multicone machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("bad multicone family: {0}")]
    BadFamily(String),
    #[error("core iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("search budget exceeded: {0}")]
    SearchBudgetExceeded(String),
    #[error("multicone is not certified: {0}")]
    NotCertified(String),
    #[error("operation needs the full shift; use compute_sft_cores for other subshifts")]
    NotFullShift,
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// One multicone per symbol of the ambient subshift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticoneFamily {
    pub cones: Vec<MultiCone>,
}

impl MulticoneFamily {
    pub fn new(cones: Vec<MultiCone>) -> Self {
        MulticoneFamily { cones }
    }

    /// The same multicone for each of `n` symbols.
    pub fn uniform(m: MultiCone, n: usize) -> Self {
        MulticoneFamily { cones: vec![m; n] }
    }
}

/// A violated compact inclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionViolation {
    pub from: usize,
    pub to: usize,
    pub component: usize,
    /// Image arc as `[start, end]` angles.
    pub image: [f64; 2],
    /// Signed margin; negative when the image leaves every component.
    pub margin: f64,
}

/// Result of [`certify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub ok: bool,
    /// Hilbert contraction factor `λ`; meaningful when `ok`.
    pub contraction: f64,
    /// Comparison constant `C` between Hilbert and angle metrics on the image hulls.
    pub growth_constant: f64,
    /// Smallest angular margin of an image inside its target component.
    pub margin: f64,
    pub witness: Option<InclusionViolation>,
}

impl CertifyReport {
    /// The lower bound `C^{-1/2} λ^{n/2}` on the norm of any admissible product of length `n`.
    pub fn growth_bound(&self, n: usize) -> f64 {
        self.growth_constant.powf(-0.5) * self.contraction.powf(n as f64 / 2.0)
    }
}

fn image_arc(m: &Mat2, arc: &ArcP1) -> ArcP1 {
    ArcP1 { start: m.act(arc.start), end: m.act(arc.end) }
}

/// Hilbert density of `outer` at angle offset `t`.
fn density(outer: &ArcP1, t: f64) -> f64 {
    outer.density_at_offset(t)
}

/// Check that the family certifies the tuple over the subshift.
pub fn certify(tuple: &[Mat2], sft: &Sft, fam: &MulticoneFamily) -> Result<CertifyReport, ConeError> {
    let n = sft.n_symbols();
    if tuple.len() != n {
        return Err(ConeError::Sym(SymError::DimensionMismatch { tuple: tuple.len(), symbols: n }));
    }
    if fam.cones.len() != n {
        return Err(ConeError::BadFamily(format!("{} multicones for {n} symbols", fam.cones.len())));
    }
    for (i, m) in fam.cones.iter().enumerate() {
        let total: f64 = m.arcs().iter().map(|a| a.len()).sum();
        if m.is_empty() || total >= PI - TOL_ANGLE {
            return Err(ConeError::BadFamily(format!("multicone {i} is empty or dense")));
        }
    }
    let mut margin = f64::INFINITY;
    let mut witness = None;
    // Hull of the images inside each target component, stored as offsets from its start.
    let mut hulls: Vec<Vec<Option<(f64, f64)>>> = fam.cones.iter().map(|m| vec![None; m.len()]).collect();
    'outer: for alpha in 0..n {
        for beta in 0..n {
            if !sft.allows(alpha, beta) {
                continue;
            }
            let target = &fam.cones[beta];
            for (ci, comp) in fam.cones[alpha].arcs().iter().enumerate() {
                let img = image_arc(&tuple[beta], comp);
                let mut best: Option<(usize, f64, f64, f64)> = None;
                for (ti, t) in target.arcs().iter().enumerate() {
                    let lo = t.offset(img.start);
                    let hi = lo + img.len();
                    let m = lo.min(t.len() - hi);
                    if best.map_or(true, |b| m > b.1) {
                        best = Some((ti, m, lo, hi));
                    }
                }
                let (ti, m, lo, hi) = best.expect("multicones are non-empty");
                margin = margin.min(m);
                if m < MARGIN_MIN {
                    witness = Some(InclusionViolation {
                        from: alpha,
                        to: beta,
                        component: ci,
                        image: [img.start.angle(), img.end.angle()],
                        margin: m,
                    });
                    break 'outer;
                }
                let h = &mut hulls[beta][ti];
                *h = Some(match *h {
                    None => (lo, hi),
                    Some((a, b)) => (a.min(lo), b.max(hi)),
                });
            }
        }
    }
    if witness.is_some() {
        return Ok(CertifyReport { ok: false, contraction: 1.0, growth_constant: f64::INFINITY, margin, witness });
    }
    let mut lambda = f64::INFINITY;
    let mut sup_rho = 0.0f64;
    let mut inf_rho = f64::INFINITY;
    for (beta, cone) in fam.cones.iter().enumerate() {
        for (ti, t) in cone.arcs().iter().enumerate() {
            let Some((lo, hi)) = hulls[beta][ti] else { continue };
            if hi - lo > TOL_ANGLE {
                let inner = ArcP1::from_start_len(t.start.angle() + lo, hi - lo)?;
                lambda = lambda.min(contraction_factor(t, &inner)?);
            }
            // The density is symmetric and unimodal on the component, largest at the ends of the
            // hull and smallest at the point of the hull nearest the middle of the component.
            sup_rho = sup_rho.max(density(t, lo)).max(density(t, hi));
            inf_rho = inf_rho.min(density(t, (t.len() / 2.0).clamp(lo, hi)));
        }
    }
    if !lambda.is_finite() {
        // Every image is a single point: contraction is unbounded; report a large finite factor.
        lambda = 1e12;
    }
    let ok = lambda > 1.0;
    Ok(CertifyReport { ok, contraction: lambda, growth_constant: sup_rho / inf_rho, margin, witness: None })
}

/// A closed arc `[start, start + len]` of P¹; a point when `len = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedArc {
    pub start: f64,
    pub len: f64,
}

impl ClosedArc {
    pub fn new(start: f64, len: f64) -> Self {
        ClosedArc { start: wrap_angle(start), len: len.max(0.0) }
    }

    pub fn point(p: ProjPoint) -> Self {
        ClosedArc::new(p.angle(), 0.0)
    }

    /// The closed arc running positively from `a` to `b`.
    pub fn between(a: ProjPoint, b: ProjPoint) -> Self {
        ClosedArc::new(a.angle(), fwd(a.angle(), b.angle()))
    }

    pub fn end(&self) -> f64 {
        wrap_angle(self.start + self.len)
    }

    pub fn start_point(&self) -> ProjPoint {
        ProjPoint::new(self.start)
    }

    pub fn end_point(&self) -> ProjPoint {
        ProjPoint::new(self.start + self.len)
    }

    pub fn midpoint(&self) -> ProjPoint {
        ProjPoint::new(self.start + self.len / 2.0)
    }

    /// Membership with an angular tolerance.
    pub fn contains(&self, p: ProjPoint, tol: f64) -> bool {
        fwd(self.start - tol, p.angle()) <= self.len + 2.0 * tol
    }

    /// Containment of another closed arc with an angular tolerance.
    pub fn contains_arc(&self, o: &ClosedArc, tol: f64) -> bool {
        fwd(self.start - tol, o.start) + o.len <= self.len + 2.0 * tol
    }

    /// Whether the two closed arcs share a point.
    pub fn meets(&self, o: &ClosedArc) -> bool {
        fwd(self.start, o.start) <= self.len || fwd(o.start, self.start) <= o.len
    }

    /// Image under the projective action. The image length comes from the angle between the image
    /// vectors, whose cross product equals that of the endpoints for a unimodular matrix, so thin
    /// images never flip into near-full arcs by rounding.
    pub fn image(&self, m: &Mat2) -> ClosedArc {
        let a = m.act(self.start_point());
        if self.len == 0.0 {
            return ClosedArc::point(a);
        }
        if self.len >= PI {
            return ClosedArc::new(a.angle(), PI);
        }
        let (x0, y0) = (self.start.cos(), self.start.sin());
        let (x1, y1) = ((self.start + self.len).cos(), (self.start + self.len).sin());
        let (u0, v0) = (m.a * x0 + m.b * y0, m.c * x0 + m.d * y0);
        let (u1, v1) = (m.a * x1 + m.b * y1, m.c * x1 + m.d * y1);
        let l = self.len.sin().atan2(u0 * u1 + v0 * v1);
        ClosedArc::new(a.angle(), l)
    }

    /// The open arc with the same endpoints.
    pub fn interior(&self) -> Result<ArcP1, GeomError> {
        ArcP1::from_start_len(self.start, self.len)
    }

    /// Enlarge by `delta` on both sides.
    pub fn fattened(&self, delta: f64) -> ClosedArc {
        ClosedArc::new(self.start - delta, self.len + 2.0 * delta)
    }
}

/// Union of closed arcs as a sorted list of disjoint closed arcs. A union covering P¹ is returned
/// as the single arc `[0, π]`.
pub fn union_arcs(arcs: &[ClosedArc]) -> Vec<ClosedArc> {
    if arcs.is_empty() {
        return Vec::new();
    }
    let mut v: Vec<ClosedArc> = arcs.to_vec();
    v.sort_by(|a, b| a.start.total_cmp(&b.start));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for a in v {
        let (s, e) = (a.start, a.start + a.len);
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    // Absorb the arcs near 0 into an arc that wraps past π.
    loop {
        if out.len() < 2 {
            break;
        }
        let last_end = out.last().expect("non-empty").1;
        let first = out[0];
        if last_end - PI >= first.0 {
            let l = out.len() - 1;
            out[l].1 = last_end.max(first.1 + PI);
            out.remove(0);
        } else {
            break;
        }
    }
    if out.len() == 1 && out[0].1 - out[0].0 >= PI {
        return vec![ClosedArc { start: 0.0, len: PI }];
    }
    if let Some(&(s, e)) = out.last() {
        if e - s >= PI {
            return vec![ClosedArc { start: 0.0, len: PI }];
        }
    }
    out.into_iter().map(|(s, e)| ClosedArc::new(s, e - s)).collect()
}

fn gap_meets(b: f64, l2: f64, y: &ClosedArc) -> bool {
    let f = fwd(b, y.start);
    (f > 0.0 && f < l2) || fwd(y.start, b) < y.len
}

/// Merge the arcs of `x` across every gap that contains no point of `y`.
pub fn fill(x: &[ClosedArc], y: &[ClosedArc]) -> Vec<ClosedArc> {
    let u = union_arcs(x);
    let k = u.len();
    if k <= 1 {
        return u;
    }
    let keep: Vec<bool> = (0..k)
        .map(|i| {
            let b = u[i].end();
            let l2 = fwd(b, u[(i + 1) % k].start);
            y.iter().any(|ya| gap_meets(b, l2, ya))
        })
        .collect();
    let Some(first_kept) = keep.iter().position(|&g| g) else {
        return vec![ClosedArc { start: 0.0, len: PI }];
    };
    let mut out = Vec::new();
    let mut i = (first_kept + 1) % k;
    for _ in 0..k {
        let start = u[i].start;
        let mut j = i;
        while !keep[j] {
            j = (j + 1) % k;
        }
        out.push(ClosedArc::new(start, fwd(start, u[j].end()).max(u[j].len)));
        i = (j + 1) % k;
        if i == (first_kept + 1) % k {
            break;
        }
    }
    out.sort_by(|a, b| a.start.total_cmp(&b.start));
    out
}

/// Unstable and stable cores, with an estimate of the endpoint uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreSet {
    pub u: Vec<ClosedArc>,
    pub s: Vec<ClosedArc>,
    pub uncertainty: f64,
}

impl CoreSet {
    /// Common component count, if the counts agree.
    pub fn rank(&self) -> Option<usize> {
        (self.u.len() == self.s.len()).then_some(self.u.len())
    }
}

fn max_shift(a: &[ClosedArc], b: &[ClosedArc]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let ds = crate::projgeom::angle_dist(x.start, y.start);
            let de = crate::projgeom::angle_dist(x.end(), y.end());
            ds.max(de)
        })
        .fold(0.0, f64::max)
}

/// Seed length so that the number of periodic seeds stays moderate.
fn seed_length(n: usize) -> usize {
    let mut l = 1;
    while l < 12 && n.pow((l + 1) as u32) <= 4096 {
        l += 1;
    }
    l
}

struct CoreIteration<'a> {
    forward: &'a dyn Fn(&[Vec<ClosedArc>]) -> Vec<Vec<ClosedArc>>,
    backward: &'a dyn Fn(&[Vec<ClosedArc>]) -> Vec<Vec<ClosedArc>>,
    grow: bool,
}

fn iterate_cores(
    it: &CoreIteration<'_>,
    mut x: Vec<Vec<ClosedArc>>,
    mut y: Vec<Vec<ClosedArc>>,
    depth: usize,
) -> Result<(Vec<Vec<ClosedArc>>, Vec<Vec<ClosedArc>>, f64), ConeError> {
    let window = (depth / 4).max(8);
    let mut counts: Vec<Vec<usize>> = Vec::new();
    let mut change = f64::INFINITY;
    let mut quiet = 0;
    for _ in 0..depth {
        let fx = (it.forward)(&x);
        let by = (it.backward)(&y);
        let nx: Vec<Vec<ClosedArc>> = (0..x.len())
            .map(|a| {
                let mut pts = fx[a].clone();
                if it.grow {
                    pts.extend_from_slice(&x[a]);
                }
                fill(&pts, &y[a])
            })
            .collect();
        let ny: Vec<Vec<ClosedArc>> = (0..y.len())
            .map(|a| {
                let mut pts = by[a].clone();
                if it.grow {
                    pts.extend_from_slice(&y[a]);
                }
                fill(&pts, &nx[a])
            })
            .collect();
        change = (0..x.len()).map(|a| max_shift(&x[a], &nx[a]).max(max_shift(&y[a], &ny[a]))).fold(0.0, f64::max);
        x = nx;
        y = ny;
        counts.push(x.iter().chain(y.iter()).map(|v| v.len()).collect());
        if change < 1e-15 {
            quiet += 1;
            if quiet >= 3 && counts.len() >= 8 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    let tail = &counts[counts.len().saturating_sub(window)..];
    if tail.windows(2).any(|w| w[0] != w[1]) {
        return Err(ConeError::NoConvergence(format!("component counts still changing after {depth} iterations")));
    }
    for a in 0..x.len() {
        if x[a].iter().any(|c| c.len >= PI) || y[a].iter().any(|c| c.len >= PI) || x[a].is_empty() || y[a].is_empty() {
            return Err(ConeError::NoConvergence("core approximation fills P¹".into()));
        }
    }
    Ok((x, y, change.max(1e-15)))
}

/// Unstable and stable cores of a tuple over the full shift, computed from inside: the closed
/// set spanned by unstable directions of periodic products, one point for every rotation of each
/// periodic word, is grown by forward images and merged across gaps free of stable directions, and
/// dually for the stable core.
pub fn compute_cores(tuple: &[Mat2], sft: &Sft, depth: usize) -> Result<CoreSet, ConeError> {
    if !sft.is_full() {
        return Err(ConeError::NotFullShift);
    }
    if tuple.len() != sft.n_symbols() {
        return Err(ConeError::Sym(SymError::DimensionMismatch { tuple: tuple.len(), symbols: sft.n_symbols() }));
    }
    let mut us = Vec::new();
    let mut ss = Vec::new();
    for w in periodic_words(sft, seed_length(tuple.len())) {
        let p = product_unchecked(tuple, &w);
        if crate::sl2core::classify(&p) != MatClass::Hyperbolic {
            return Err(ConeError::NoConvergence(format!("periodic product {w} is not hyperbolic")));
        }
        for k in 0..w.len() {
            let (u, s) = periodic_dirs(tuple, &w.rotate(k)).map_err(|e| ConeError::NoConvergence(e.to_string()))?;
            us.push(ClosedArc::point(u));
            ss.push(ClosedArc::point(s));
        }
    }
    let x0 = fill(&us, &ss);
    let y0 = fill(&ss, &x0);
    let inv: Vec<Mat2> = tuple.iter().map(|m| m.inv()).collect();
    let fwd_map = |x: &[Vec<ClosedArc>]| vec![tuple.iter().flat_map(|m| x[0].iter().map(move |c| c.image(m))).collect()];
    let bwd_map = |y: &[Vec<ClosedArc>]| vec![inv.iter().flat_map(|m| y[0].iter().map(move |c| c.image(m))).collect()];
    let it = CoreIteration { forward: &fwd_map, backward: &bwd_map, grow: true };
    let (x, y, unc) = iterate_cores(&it, vec![x0], vec![y0], depth)?;
    Ok(CoreSet { u: x[0].clone(), s: y[0].clone(), uncertainty: unc })
}

/// Outer approximation of the cores of a tuple over the full shift from a certified multicone:
/// forward images of its closure and backward images of its complement.
pub fn compute_cores_from(tuple: &[Mat2], m: &MultiCone, depth: usize) -> Result<CoreSet, ConeError> {
    let x0: Vec<ClosedArc> = m.arcs().iter().map(|a| ClosedArc::new(a.start.angle(), a.len())).collect();
    let k = x0.len();
    let y0: Vec<ClosedArc> =
        (0..k).map(|i| ClosedArc::new(x0[i].end(), fwd(x0[i].end(), x0[(i + 1) % k].start))).collect();
    let inv: Vec<Mat2> = tuple.iter().map(|m| m.inv()).collect();
    let fwd_map = |x: &[Vec<ClosedArc>]| vec![tuple.iter().flat_map(|m| x[0].iter().map(move |c| c.image(m))).collect()];
    let bwd_map = |y: &[Vec<ClosedArc>]| vec![inv.iter().flat_map(|m| y[0].iter().map(move |c| c.image(m))).collect()];
    let it = CoreIteration { forward: &fwd_map, backward: &bwd_map, grow: false };
    let (x, y, unc) = iterate_cores(&it, vec![x0], vec![y0], depth)?;
    Ok(CoreSet { u: x[0].clone(), s: y[0].clone(), uncertainty: unc })
}

/// Per-symbol cores over a subshift of finite type. `U_α` is spanned by unstable directions of
/// periodic products whose last applied symbol is `α` and satisfies `A_α U_β ⊆ U_α` for `β → α`;
/// `S_α` is spanned by the stable directions of the same products and satisfies
/// `A_β⁻¹ S_β ⊆ S_α` for `α → β`.
pub fn compute_sft_cores(tuple: &[Mat2], sft: &Sft, depth: usize) -> Result<Vec<CoreSet>, ConeError> {
    let n = sft.n_symbols();
    if tuple.len() != n {
        return Err(ConeError::Sym(SymError::DimensionMismatch { tuple: n, symbols: sft.n_symbols() }));
    }
    let mut us = vec![Vec::new(); n];
    let mut ss = vec![Vec::new(); n];
    for w in periodic_words(sft, seed_length(n)) {
        for k in 0..w.len() {
            let r = w.rotate(k);
            if !sft.is_cyclically_admissible(&r) {
                continue;
            }
            let (u, s) = periodic_dirs(tuple, &r).map_err(|e| ConeError::NoConvergence(format!("{r}: {e}")))?;
            let last = *r.symbols().last().expect("non-empty");
            us[last].push(ClosedArc::point(u));
            ss[last].push(ClosedArc::point(s));
        }
    }
    let x0: Vec<Vec<ClosedArc>> = (0..n).map(|a| fill(&us[a], &ss[a])).collect();
    let y0: Vec<Vec<ClosedArc>> = (0..n).map(|a| fill(&ss[a], &x0[a])).collect();
    let inv: Vec<Mat2> = tuple.iter().map(|m| m.inv()).collect();
    let fwd_map = |x: &[Vec<ClosedArc>]| {
        (0..n)
            .map(|a| (0..n).filter(|&b| sft.allows(b, a)).flat_map(|b| x[b].iter().map(move |c| c.image(&tuple[a]))).collect())
            .collect()
    };
    let bwd_map = |y: &[Vec<ClosedArc>]| {
        (0..n)
            .map(|a| (0..n).filter(|&b| sft.allows(a, b)).flat_map(|b| y[b].iter().map(|c| c.image(&inv[b])).collect::<Vec<_>>()).collect())
            .collect()
    };
    let it = CoreIteration { forward: &fwd_map, backward: &bwd_map, grow: true };
    let (x, y, unc) = iterate_cores(&it, x0, y0, depth)?;
    Ok(x.into_iter().zip(y).map(|(u, s)| CoreSet { u, s, uncertainty: unc }).collect())
}

/// Reason a core set fails [`core_criterion`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoreViolation {
    DisjointnessViolation { u: usize, s: usize },
    AlternationViolation,
    CountMismatch { u: usize, s: usize },
    InvarianceViolation { symbol: usize, forward: bool, component: usize },
    IdentityProduct(Word),
}

/// Outcome of [`core_criterion`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreCheck {
    pub ok: bool,
    pub violation: Option<CoreViolation>,
}

impl CoreCheck {
    fn fail(v: CoreViolation) -> Self {
        CoreCheck { ok: false, violation: Some(v) }
    }
}

/// Whether the closed arcs of `u` and `s` alternate around the circle.
fn alternate(u: &[ClosedArc], s: &[ClosedArc]) -> bool {
    let mut tagged: Vec<(f64, bool)> = u.iter().map(|a| (a.start, true)).chain(s.iter().map(|a| (a.start, false))).collect();
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
    tagged.iter().zip(tagged.iter().cycle().skip(1)).all(|(a, b)| a.1 != b.1)
}

/// The core criterion over the full shift: `U` and `S` are disjoint, alternate, have equal
/// counts, `A_i U ⊆ U` and `A_i⁻¹ S ⊆ S` within tolerance, and no product of length at most the
/// rank is `±id`.
pub fn core_criterion(tuple: &[Mat2], cores: &CoreSet) -> CoreCheck {
    core_criterion_with(tuple, cores, &Tolerances::default())
}

pub fn core_criterion_with(tuple: &[Mat2], cores: &CoreSet, tol: &Tolerances) -> CoreCheck {
    let (u, s) = (&cores.u, &cores.s);
    for (i, a) in u.iter().enumerate() {
        for (j, b) in s.iter().enumerate() {
            if a.meets(b) {
                return CoreCheck::fail(CoreViolation::DisjointnessViolation { u: i, s: j });
            }
        }
    }
    if u.len() != s.len() || u.is_empty() {
        return CoreCheck::fail(CoreViolation::CountMismatch { u: u.len(), s: s.len() });
    }
    if !alternate(u, s) {
        return CoreCheck::fail(CoreViolation::AlternationViolation);
    }
    let t = CORE_TOL.max(cores.uncertainty * 4.0);
    // An endpoint known to within `t` is known to within `t` times the derivative after the map.
    let spread = |m: &Mat2, c: &ClosedArc| {
        t * m.act_derivative(c.start_point()).max(m.act_derivative(c.end_point())).max(1.0)
    };
    for (i, m) in tuple.iter().enumerate() {
        for (k, c) in u.iter().enumerate() {
            let img = c.image(m);
            if !u.iter().any(|d| d.contains_arc(&img, spread(m, c))) {
                return CoreCheck::fail(CoreViolation::InvarianceViolation { symbol: i, forward: true, component: k });
            }
        }
        let mi = m.inv();
        for (k, c) in s.iter().enumerate() {
            let img = c.image(&mi);
            if !s.iter().any(|d| d.contains_arc(&img, spread(&mi, c))) {
                return CoreCheck::fail(CoreViolation::InvarianceViolation { symbol: i, forward: false, component: k });
            }
        }
    }
    let rank = u.len();
    let sft = Sft::full(tuple.len());
    let mut budget = 1usize << 20;
    for len in 1..=rank {
        let ws = admissible_words(&sft, len);
        if ws.len() > budget {
            break;
        }
        budget -= ws.len();
        for w in ws {
            let p = product_unchecked(tuple, &w);
            if p.dist(&Mat2::identity()) <= tol.tol_id || p.dist(&-Mat2::identity()) <= tol.tol_id {
                return CoreCheck::fail(CoreViolation::IdentityProduct(w));
            }
        }
    }
    CoreCheck { ok: true, violation: None }
}

/// Tightness: each component of `M` contains exactly one component of `U` and each gap of `M`
/// contains exactly one component of `S`.
pub fn tightness(m: &MultiCone, cores: &CoreSet) -> bool {
    let arcs = m.arcs();
    let k = arcs.len();
    let comps: Vec<ClosedArc> = arcs.iter().map(|a| ClosedArc::new(a.start.angle(), a.len())).collect();
    let gaps: Vec<ClosedArc> =
        (0..k).map(|i| ClosedArc::new(comps[i].end(), fwd(comps[i].end(), comps[(i + 1) % k].start))).collect();
    let count_in = |c: &ClosedArc, xs: &[ClosedArc]| xs.iter().filter(|x| c.contains_arc(x, 0.0)).count();
    comps.iter().all(|c| count_in(c, &cores.u) == 1)
        && gaps.iter().all(|g| count_in(g, &cores.s) == 1)
        && cores.u.iter().all(|x| comps.iter().any(|c| c.contains_arc(x, 0.0)))
        && cores.s.iter().all(|x| gaps.iter().any(|g| g.contains_arc(x, 0.0)))
}

/// Component map of each generator on a certified multicone: `maps[i][c]` is the component
/// containing the image of component `c` under `A_i`.
pub fn component_maps(tuple: &[Mat2], m: &MultiCone) -> Result<Vec<Vec<usize>>, ConeError> {
    tuple
        .iter()
        .enumerate()
        .map(|(i, a)| {
            m.arcs()
                .iter()
                .enumerate()
                .map(|(c, arc)| {
                    let img = image_arc(a, arc);
                    m.arcs()
                        .iter()
                        .position(|t| {
                            let lo = t.offset(img.start);
                            lo > 0.0 && lo + img.len() < t.len()
                        })
                        .ok_or_else(|| ConeError::NotCertified(format!("image of component {c} under symbol {i}")))
                })
                .collect()
        })
        .collect()
}

/// Least `k ≥ 1` such that every product of length `k` maps the whole multicone into a single
/// component, over the full shift.
pub fn single_component_length(tuple: &[Mat2], m: &MultiCone) -> Result<usize, ConeError> {
    let maps = component_maps(tuple, m)?;
    let mut level: HashSet<Vec<usize>> = HashSet::new();
    level.insert((0..m.len()).collect());
    for k in 0..=SINGLE_COMPONENT_BUDGET {
        if level.iter().all(|s| s.len() == 1) {
            return Ok(k.max(1));
        }
        let mut next = HashSet::new();
        for set in &level {
            for map in &maps {
                let mut img: Vec<usize> = set.iter().map(|&c| map[c]).collect();
                img.sort_unstable();
                img.dedup();
                next.insert(img);
            }
        }
        level = next;
    }
    Err(ConeError::SearchBudgetExceeded(format!("no single-component length up to {SINGLE_COMPONENT_BUDGET}")))
}

/// Open multicone from closed arcs, shrinking the fattening if closures would meet.
fn multicone_from_closed(arcs: &[ClosedArc]) -> Result<MultiCone, GeomError> {
    let merged = union_arcs(arcs);
    MultiCone::new(merged.iter().map(|a| ArcP1::from_start_len(a.start, a.len)).collect::<Result<Vec<_>, _>>()?)
}

/// Open arcs of `P¹ ∖ S`, one per gap of the stable core.
fn complement_arcs(s: &[ClosedArc]) -> Vec<ArcP1> {
    let k = s.len();
    (0..k)
        .filter_map(|i| {
            let a = s[i].end();
            let l = fwd(a, s[(i + 1) % k].start);
            let l = if k == 1 && s[0].len == 0.0 { PI - 2e-6 } else { l };
            let a = if k == 1 && s[0].len == 0.0 { a + 1e-6 } else { a };
            ArcP1::from_start_len(a, l).ok()
        })
        .collect()
}

/// Hilbert neighbourhood of radius `eps` of a closed arc inside an open arc containing it.
fn hilbert_nbhd(v: &ArcP1, c: &ClosedArc, eps: f64) -> ClosedArc {
    let l = v.len();
    let lo = v.offset(c.start_point()).clamp(1e-15, l - 1e-15);
    let hi = (lo + c.len).clamp(1e-15, l - 1e-15);
    let lo2 = v.shift_by_hilbert(lo, eps, false);
    let hi2 = v.shift_by_hilbert(hi, eps, true);
    ClosedArc::new(v.start.angle() + lo2, hi2 - lo2)
}

/// Hilbert excess of a point over a closed arc, inside an open arc containing both.
fn hilbert_excess(v: &ArcP1, c: &ClosedArc, p: ProjPoint) -> f64 {
    let l = v.len();
    let lo = v.offset(c.start_point());
    let hi = lo + c.len;
    let t = v.offset(p);
    if t <= 0.0 || t >= l {
        return f64::INFINITY;
    }
    let k = |x: f64| (x.sin() / (l - x).sin()).ln();
    if t < lo {
        k(lo) - k(t)
    } else if t > hi {
        k(t) - k(hi)
    } else {
        0.0
    }
}

/// Build a multicone from cores over the full shift and certify it. A fattening of the unstable
/// core by a quarter of the smallest gap to the stable core is tried first; when it fails, a
/// ladder of Hilbert neighbourhoods inside the complement of the stable core is used.
pub fn fatten_cores(tuple: &[Mat2], cores: &CoreSet) -> Result<(MultiCone, CertifyReport), ConeError> {
    let sft = Sft::full(tuple.len());
    let mut min_gap = f64::INFINITY;
    for a in &cores.u {
        for b in &cores.s {
            min_gap = min_gap.min(fwd(a.end(), b.start)).min(fwd(b.end(), a.start));
        }
    }
    if !min_gap.is_finite() || min_gap <= 0.0 {
        return Err(ConeError::BadFamily("cores are not separated".into()));
    }
    let mut last_report = None;
    for delta in [min_gap / 4.0, min_gap / 16.0] {
        let arcs: Vec<ClosedArc> = cores.u.iter().map(|c| c.fattened(delta)).collect();
        if let Ok(m) = multicone_from_closed(&arcs) {
            let rep = certify(tuple, &sft, &MulticoneFamily::uniform(m.clone(), tuple.len()))?;
            if rep.ok {
                return Ok((m, rep));
            }
            last_report = Some((m, rep));
        }
    }
    let vs = complement_arcs(&cores.s);
    let host = |c: &ClosedArc| vs.iter().find(|v| v.contains(c.midpoint())).copied();
    let rank = cores.u.len().max(1);
    for n0 in [rank, 2 * rank, 3 * rank, 4 * rank] {
        if (tuple.len() as f64).powi(n0 as i32) > 16384.0 {
            break;
        }
        for eps1 in [1.0, 0.25, 4.0] {
            let nb: Vec<ClosedArc> = cores.u.iter().filter_map(|c| host(c).map(|v| hilbert_nbhd(&v, c, eps1))).collect();
            if nb.len() != cores.u.len() {
                continue;
            }
            // Largest Hilbert excess over U of the images of U(ε') by products of length n0.
            let mut eps2: f64 = 0.0;
            for w in admissible_words(&sft, n0) {
                for c in &nb {
                    for q in [c.start_point(), c.end_point()] {
                        let img = w.symbols().iter().fold(q, |x, &s| tuple[s].act(x));
                        let e = cores
                            .u
                            .iter()
                            .filter_map(|uc| host(uc).filter(|v| v.contains(img)).map(|v| hilbert_excess(&v, uc, img)))
                            .fold(f64::INFINITY, f64::min);
                        eps2 = eps2.max(e);
                    }
                }
            }
            if !(eps2 < eps1) {
                continue;
            }
            let mut pieces = Vec::new();
            for n in 0..n0 {
                let eps_n = eps2 + (eps1 - eps2) * (n + 1) as f64 / n0 as f64;
                let base: Vec<ClosedArc> =
                    cores.u.iter().filter_map(|c| host(c).map(|v| hilbert_nbhd(&v, c, eps_n))).collect();
                for w in admissible_words(&sft, n) {
                    pieces.extend(base.iter().map(|c| w.symbols().iter().fold(*c, |x, &s| x.image(&tuple[s]))));
                }
            }
            let filled = fill(&pieces, &cores.s);
            if let Ok(m) = multicone_from_closed(&filled) {
                let rep = certify(tuple, &sft, &MulticoneFamily::uniform(m.clone(), tuple.len()))?;
                if rep.ok {
                    return Ok((m, rep));
                }
                last_report = Some((m, rep));
            }
        }
    }
    match last_report {
        Some((_, rep)) => Err(ConeError::NotCertified(format!("fattened cores fail certification: {:?}", rep.witness))),
        None => Err(ConeError::NotCertified("no admissible fattening".into())),
    }
}
