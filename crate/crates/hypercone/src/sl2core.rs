//! Unimodular 2×2 matrices: trace classification, invariant directions, the canonical form of a
//! pair, and a constructive bounded normalization of tuples modulo simultaneous conjugation.

use crate::projgeom::{GeomError, ProjPoint};
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::ops::{Mul, Neg};
use thiserror::Error;

/// Numerical tolerances shared by the decision procedures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed deviation of a determinant from 1.
    pub tol_det: f64,
    /// Absolute tolerance for comparing a trace with ±2.
    pub tol_tr: f64,
    /// Max-entry distance below which a matrix counts as ±id.
    pub tol_id: f64,
    /// Half-width of the band around a strict inequality inside which classifiers report a
    /// degenerate verdict.
    pub band: f64,
    /// Tolerance on `||tr| − 2|` for parabolic witnesses.
    pub tol_par: f64,
    /// Angular tolerance for heteroclinic coincidences.
    pub tol_het: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol_det: 1e-9, tol_tr: 1e-9, tol_id: 1e-9, band: 1e-7, tol_par: 1e-7, tol_het: 1e-9 }
    }
}

/// Errors raised by matrix operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("determinant {0} differs from 1 beyond tolerance")]
    NotUnimodular(f64),
    #[error("no invariant direction: matrix is {0:?}")]
    NoInvariantDirection(MatClass),
    #[error("pair cannot be put in canonical form: {0}")]
    NotCanonicalizable(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// A real 2×2 matrix `[[a, b], [c, d]]`, expected to have determinant 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    /// Checked constructor: the determinant must be within `tol_det` of 1.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, MatError> {
        let m = Mat2 { a, b, c, d };
        let det = m.det();
        if !det.is_finite() || (det - 1.0).abs() > Tolerances::default().tol_det * m.max_abs().powi(2).max(1.0) {
            return Err(MatError::NotUnimodular(det));
        }
        Ok(m)
    }

    /// Unchecked constructor for intermediate results.
    pub const fn raw(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub const fn identity() -> Self {
        Mat2::raw(1.0, 0.0, 0.0, 1.0)
    }

    /// Rotation by `theta` acting on vectors.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::raw(c, -s, s, c)
    }

    pub fn diag(l: f64) -> Self {
        Mat2::raw(l, 0.0, 0.0, 1.0 / l)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn tr(&self) -> f64 {
        self.a + self.d
    }

    /// Inverse of a unimodular matrix (the adjugate).
    pub fn inv(&self) -> Self {
        Mat2::raw(self.d, -self.b, -self.c, self.a)
    }

    pub fn transpose(&self) -> Self {
        Mat2::raw(self.a, self.c, self.b, self.d)
    }

    /// `R · self · R⁻¹`.
    pub fn conj(&self, r: &Mat2) -> Self {
        let rinv = Mat2::raw(r.d, -r.b, -r.c, r.a).scale(1.0 / r.det());
        *r * *self * rinv
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2::raw(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// Max-entry distance to another matrix.
    pub fn dist(&self, o: &Mat2) -> f64 {
        (*self + o.neg_ref()).max_abs()
    }

    fn neg_ref(&self) -> Mat2 {
        -*self
    }

    /// Spectral norm from the closed-form singular values.
    pub fn norm(&self) -> f64 {
        let f2 = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det();
        let disc = (f2 * f2 - 4.0 * det * det).max(0.0);
        ((f2 + disc.sqrt()) / 2.0).sqrt()
    }

    pub fn apply_vec(&self, v: (f64, f64)) -> (f64, f64) {
        (self.a * v.0 + self.b * v.1, self.c * v.0 + self.d * v.1)
    }

    /// Projective action on P¹. Unimodular matrices preserve the cyclic orientation.
    pub fn act(&self, p: ProjPoint) -> ProjPoint {
        let (x, y) = self.apply_vec(p.unit());
        ProjPoint::new(y.atan2(x))
    }

    /// Derivative of the projective action in the angle metric at `p`: `1 / |A v|²` for a unit
    /// representative `v`.
    pub fn act_derivative(&self, p: ProjPoint) -> f64 {
        let (x, y) = self.apply_vec(p.unit());
        self.det() / (x * x + y * y)
    }

    /// Signed angle swept by a vector under the matrix, in `(−π, π]`.
    pub fn turn_angle(&self, theta: f64) -> f64 {
        let v = (theta.cos(), theta.sin());
        let w = self.apply_vec(v);
        (v.0 * w.1 - v.1 * w.0).atan2(v.0 * w.0 + v.1 * w.1)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::raw(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl std::ops::Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::raw(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        Mat2::raw(-self.a, -self.b, -self.c, -self.d)
    }
}

/// Product of a word written as a matrix string over named letters, multiplied left to right:
/// `"BAB"` is `B·A·B`.
pub fn word_product(letters: &[(char, Mat2)], word: &str) -> Option<Mat2> {
    let mut m = Mat2::identity();
    for ch in word.chars() {
        let (_, x) = letters.iter().find(|(c, _)| *c == ch)?;
        m = m * *x;
    }
    Some(m)
}

/// Product of a word over lettered matrices, evaluated exactly in rational arithmetic on the
/// floating-point entries and rounded once at the end. Long words of matrices with large entries
/// keep full relative accuracy this way.
pub fn word_product_exact(letters: &[(char, Mat2)], word: &str) -> Option<Mat2> {
    let exact: Vec<(char, Mat2Q)> = letters.iter().map(|(c, m)| (*c, Mat2Q::from_f64(m))).collect();
    let mut m = Mat2Q::identity();
    for ch in word.chars() {
        let (_, x) = exact.iter().find(|(c, _)| *c == ch)?;
        m = m.mul(x);
    }
    Some(m.to_f64())
}

/// An exact rational 2×2 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat2Q {
    pub a: BigRational,
    pub b: BigRational,
    pub c: BigRational,
    pub d: BigRational,
}

/// Exact conversion of a finite float into a rational.
pub fn q_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Rational from a numerator and a denominator.
pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Float approximation of a rational, accurate to a few ulps even when the numerator and
/// denominator are far outside the range of `f64`.
pub fn q_to_f64(x: &BigRational) -> f64 {
    if let Some(v) = x.to_f64().filter(|v| v.is_finite() && (*v != 0.0 || x.is_zero())) {
        return v;
    }
    let (n, d) = (x.numer(), x.denom());
    let shift = n.bits() as i64 - d.bits() as i64 - 64;
    let (n2, d2) = if shift >= 0 { (n.clone(), d << (shift as usize)) } else { (n << ((-shift) as usize), d.clone()) };
    let quotient = (n2 / d2).to_f64().unwrap_or(f64::NAN);
    quotient * 2f64.powi(shift as i32)
}

impl Mat2Q {
    pub fn new(a: BigRational, b: BigRational, c: BigRational, d: BigRational) -> Self {
        Mat2Q { a, b, c, d }
    }

    pub fn from_f64(m: &Mat2) -> Self {
        Mat2Q::new(q_from_f64(m.a), q_from_f64(m.b), q_from_f64(m.c), q_from_f64(m.d))
    }

    pub fn identity() -> Self {
        Mat2Q::new(BigRational::one(), BigRational::zero(), BigRational::zero(), BigRational::one())
    }

    pub fn det(&self) -> BigRational {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn tr(&self) -> BigRational {
        &self.a + &self.d
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().is_one()
    }

    /// Exact inverse; panics on a singular matrix.
    pub fn inv(&self) -> Self {
        let det = self.det();
        Mat2Q::new(&self.d / &det, -&self.b / &det, -&self.c / &det, &self.a / &det)
    }

    pub fn neg(&self) -> Self {
        Mat2Q::new(-&self.a, -&self.b, -&self.c, -&self.d)
    }

    /// `R · self · R⁻¹`, exactly.
    pub fn conj(&self, r: &Mat2Q) -> Self {
        r.mul(self).mul(&r.inv())
    }

    pub fn mul(&self, o: &Mat2Q) -> Self {
        Mat2Q::new(
            &self.a * &o.a + &self.b * &o.c,
            &self.a * &o.b + &self.b * &o.d,
            &self.c * &o.a + &self.d * &o.c,
            &self.c * &o.b + &self.d * &o.d,
        )
    }

    pub fn to_f64(&self) -> Mat2 {
        Mat2::raw(q_to_f64(&self.a), q_to_f64(&self.b), q_to_f64(&self.c), q_to_f64(&self.d))
    }
}

/// Trace class of a unimodular matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatClass {
    Hyperbolic,
    Parabolic,
    Elliptic,
    PlusMinusIdentity,
}

/// Classify by trace with the default tolerances.
pub fn classify(m: &Mat2) -> MatClass {
    classify_with(m, &Tolerances::default())
}

/// Classify by trace: `±id` first, then `|tr|` against 2 with a band of half-width `tol_tr`
/// reported as parabolic.
pub fn classify_with(m: &Mat2, tol: &Tolerances) -> MatClass {
    if m.dist(&Mat2::identity()) <= tol.tol_id || m.dist(&-Mat2::identity()) <= tol.tol_id {
        return MatClass::PlusMinusIdentity;
    }
    let t = m.tr().abs();
    if (t - 2.0).abs() <= tol.tol_tr {
        MatClass::Parabolic
    } else if t > 2.0 {
        MatClass::Hyperbolic
    } else {
        MatClass::Elliptic
    }
}

fn eigvec(m: &Mat2, lambda: f64) -> Result<ProjPoint, GeomError> {
    let v1 = (m.b, lambda - m.a);
    let v2 = (lambda - m.d, m.c);
    let n1 = v1.0.hypot(v1.1);
    let n2 = v2.0.hypot(v2.1);
    if n1 >= n2 {
        ProjPoint::from_vec(v1.0, v1.1)
    } else {
        ProjPoint::from_vec(v2.0, v2.1)
    }
}

/// Eigenvalue of larger modulus of a non-elliptic matrix (same sign as the trace).
pub fn leading_eigenvalue(m: &Mat2) -> f64 {
    let t = m.tr();
    let disc = (t * t - 4.0).max(0.0).sqrt();
    (t + t.signum() * disc) / 2.0
}

/// Unstable and stable directions `(u, s)`; they coincide for parabolic matrices.
pub fn invariant_dirs(m: &Mat2) -> Result<(ProjPoint, ProjPoint), MatError> {
    invariant_dirs_with(m, &Tolerances::default())
}

pub fn invariant_dirs_with(m: &Mat2, tol: &Tolerances) -> Result<(ProjPoint, ProjPoint), MatError> {
    match classify_with(m, tol) {
        cls @ (MatClass::Elliptic | MatClass::PlusMinusIdentity) => Err(MatError::NoInvariantDirection(cls)),
        MatClass::Parabolic => {
            let l = m.tr() / 2.0;
            let p = eigvec(m, l.signum())?;
            Ok((p, p))
        }
        MatClass::Hyperbolic => {
            let big = leading_eigenvalue(m);
            Ok((eigvec(m, big)?, eigvec(m, 1.0 / big)?))
        }
    }
}

/// Canonical coordinates of a pair with traces `≥ 2`: `A = [[μ,α],[0,μ⁻¹]]`,
/// `B = [[ν⁻¹,0],[β,ν]]` in the basis given by the columns of `basis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPair {
    pub mu: f64,
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub basis: Mat2,
    pub gamma: f64,
}

impl CanonicalPair {
    pub fn a(&self) -> Mat2 {
        Mat2::raw(self.mu, self.alpha, 0.0, 1.0 / self.mu)
    }

    pub fn b(&self) -> Mat2 {
        Mat2::raw(1.0 / self.nu, 0.0, self.beta, self.nu)
    }

    /// `γ` recomputed from the trace identity `tr AB = μ/ν + ν/μ + γ`.
    pub fn gamma_from_traces(tr_ab: f64, mu: f64, nu: f64) -> f64 {
        tr_ab - mu / nu - nu / mu
    }
}

/// Canonical pair of coordinates from a literal `(μ, ν, α, β)`.
pub fn canonical_matrices(mu: f64, nu: f64, alpha: f64, beta: f64) -> (Mat2, Mat2) {
    (Mat2::raw(mu, alpha, 0.0, 1.0 / mu), Mat2::raw(1.0 / nu, 0.0, beta, nu))
}

/// Put a pair with traces `≥ 2` into canonical coordinates.
pub fn canonical_form(a: &Mat2, b: &Mat2) -> Result<CanonicalPair, MatError> {
    let tol = Tolerances::default();
    for (name, m) in [("A", a), ("B", b)] {
        if m.tr() < 2.0 - tol.tol_tr {
            return Err(MatError::NotCanonicalizable(format!("tr {name} = {} is below 2", m.tr())));
        }
        if classify(m) == MatClass::PlusMinusIdentity {
            return Err(MatError::NotCanonicalizable(format!("{name} is ±id")));
        }
    }
    let (ua, _) = invariant_dirs(a)?;
    let (ub, _) = invariant_dirs(b)?;
    if ua.approx_eq(&ub) {
        return Err(MatError::NotCanonicalizable("u_A = u_B".into()));
    }
    let (x1, y1) = ua.unit();
    let (x2, mut y2) = ub.unit();
    let mut x2s = x2;
    let mut det = x1 * y2 - x2s * y1;
    if det < 0.0 {
        x2s = -x2s;
        y2 = -y2;
        det = -det;
    }
    let s = 1.0 / det.sqrt();
    let basis = Mat2::raw(x1 * s, x2s * s, y1 * s, y2 * s);
    let binv = basis.inv();
    let ca = binv * *a * basis;
    let cb = binv * *b * basis;
    let mu = ca.a;
    let nu = cb.d;
    let alpha = ca.b;
    let beta = cb.c;
    Ok(CanonicalPair { mu, nu, alpha, beta, basis, gamma: alpha * beta })
}

/// Explicit bound on the entries reachable by [`normalize_tuple`] for trace bound `C`.
///
/// After the rotation stage the selected matrix satisfies `|x₁|, |t₁| ≤ h` with `h = C/2 + 1`
/// and `|y₁| ≥ |z₁|`. Writing `D = h² + 1 ≥ |y₁z₁|`, `G = √(1 + 2h² + D²)`:
///
/// * if `|y₁| < 1` every entry of every matrix is at most `√(2h² + 2)` since the first matrix
///   has the largest entry-square sum;
/// * otherwise `|y_i| ≤ G|y₁|`, `|y_i z₁| ≤ GD`, `|y₁ z_i| ≤ C + hC + 2h|x_i| + GD`, and the
///   determinant identity `x_i(τ_i − x_i) = 1 + y_i z_i` gives `x_i² ≤ b|x_i| + c` with
///   `b = C + 2hG`, `c = 1 + G(C + hC + GD)`.
///
/// This yields `|x_i| ≤ C₂`. Then `|t_i| ≤ C₃ = C + C₂`, `|y_i z_i| ≤ C₂C₃ + 1`,
/// `|y_i z_j + y_j z_i| ≤ C + C₂² + C₃²`, and `|y_i z_j| ≤ C₄` from the quadratic whose roots are
/// `y_i z_j` and `y_j z_i`. Balancing with a diagonal conjugation bounds off-diagonal entries by
/// `√C₄`. The returned constant is `max(C₂, C₃, √C₄, 1)` with a relative roundoff allowance.
pub fn c1_bound(c: f64) -> f64 {
    let h = c / 2.0 + 1.0;
    let d = h * h + 1.0;
    let g = (1.0 + 2.0 * h * h + d * d).sqrt();
    let b = c + 2.0 * h * g;
    let cc = 1.0 + g * (c + h * c + g * d);
    let x_large = (b + (b * b + 4.0 * cc).sqrt()) / 2.0;
    let x_small = (2.0 * h * h + 2.0).sqrt();
    let c2 = x_large.max(x_small);
    let c3 = c + c2;
    let c3b = c2 * c3 + 1.0;
    let c3c = c + c2 * c2 + c3 * c3;
    let c4 = (c3c + (c3c * c3c + 4.0 * c3b * c3b).sqrt()) / 2.0;
    c2.max(c3).max(c4.sqrt()).max(1.0) * (1.0 + 1e-9)
}

/// Result of [`normalize_tuple`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalized {
    /// Conjugator with `normalized_i = R A_i R⁻¹`.
    pub r: Mat2,
    pub normalized: Vec<Mat2>,
    /// The bound `C₁(C)` that every entry satisfies.
    pub bound: f64,
}

fn qabs_max(ms: &[Mat2Q]) -> (BigRational, BigRational) {
    let mut my = BigRational::zero();
    let mut mz = BigRational::zero();
    for m in ms {
        if m.b.abs() > my {
            my = m.b.abs();
        }
        if m.c.abs() > mz {
            mz = m.c.abs();
        }
    }
    (my, mz)
}

/// Conjugate a tuple with bounded traces into a fixed compact set.
///
/// Preconditions `|tr A_i| ≤ C` and `|tr A_iA_j| ≤ C` are checked exactly. Tuples whose entries
/// already lie within `C₁(C)` are returned unchanged with `R = id`. Otherwise the stages are: pick
/// the matrix with the largest entry-square sum, rotate so that its diagonal entries coincide,
/// using the second root of the rotation equation when needed so that `|y₁| ≥ |z₁|`, then balance
/// the off-diagonal entries with a diagonal conjugation. Conjugations are carried out in exact
/// rational arithmetic so that traces are preserved up to the final rounding.
pub fn normalize_tuple(tuple: &[Mat2], c: f64) -> Result<Normalized, MatError> {
    let exact: Vec<Mat2Q> = tuple.iter().map(Mat2Q::from_f64).collect();
    let cq = q_from_f64(c);
    for (i, m) in exact.iter().enumerate() {
        if m.tr().abs() > cq {
            return Err(MatError::PreconditionViolated(format!("|tr A_{}| = {} exceeds {c}", i + 1, q_to_f64(&m.tr().abs()))));
        }
        for (j, n) in exact.iter().enumerate().skip(i + 1) {
            let t = m.mul(n).tr();
            if t.abs() > cq {
                return Err(MatError::PreconditionViolated(format!(
                    "|tr A_{}A_{}| = {} exceeds {c}",
                    i + 1,
                    j + 1,
                    q_to_f64(&t.abs())
                )));
            }
        }
    }
    let bound = c1_bound(c);
    if tuple.iter().all(|m| m.max_abs() <= bound) {
        return Ok(Normalized { r: Mat2::identity(), normalized: tuple.to_vec(), bound });
    }
    // Stage 1: the matrix with the largest entry-square sum.
    let idx = (0..tuple.len())
        .max_by(|&i, &j| {
            let f = |m: &Mat2| m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d;
            f(&tuple[i]).total_cmp(&f(&tuple[j]))
        })
        .unwrap_or(0);
    // Stage 2: rotation S_θ = [[cos, sin], [−sin, cos]] with (x−t)/2·cos2θ + (y+z)/2·sin2θ = 0,
    // which makes the diagonal entries of the selected matrix equal.
    let m1 = &exact[idx];
    let xm = q_to_f64(&(&m1.a - &m1.d));
    let yz = q_to_f64(&(&m1.b + &m1.c));
    let two_theta = (-xm).atan2(yz);
    let mut best: Option<(Mat2Q, Vec<Mat2Q>)> = None;
    for k in 0..2 {
        let theta = two_theta / 2.0 + k as f64 * std::f64::consts::FRAC_PI_2;
        let (s, co) = theta.sin_cos();
        let rot = Mat2Q::new(q_from_f64(co), q_from_f64(s), q_from_f64(-s), q_from_f64(co));
        let rotated: Vec<Mat2Q> = exact.iter().map(|m| m.conj(&rot)).collect();
        let r1 = &rotated[idx];
        if r1.b.abs() >= r1.c.abs() {
            best = Some((rot, rotated));
            break;
        }
        if best.is_none() {
            best = Some((rot, rotated));
        }
    }
    let (rot, rotated) = best.expect("two candidate rotations");
    // Stage 3: diagonal balancing y ↦ Λy, z ↦ z/Λ.
    let (my, mz) = qabs_max(&rotated);
    let myf = q_to_f64(&my);
    let mzf = q_to_f64(&mz);
    let lam2 = match (myf == 0.0, mzf == 0.0) {
        (true, true) => 1.0,
        (false, true) => 1.0 / myf,
        (true, false) => mzf,
        (false, false) => (mzf / myf).sqrt(),
    };
    let l = lam2.sqrt();
    let lq = q_from_f64(lam2);
    let normalized: Vec<Mat2> = rotated
        .iter()
        .map(|m| Mat2Q::new(m.a.clone(), &m.b * &lq, &m.c / &lq, m.d.clone()).to_f64())
        .collect();
    let r = Mat2::diag(l) * rot.to_f64();
    Ok(Normalized { r, normalized, bound })
}
