//! The decision procedure for pairs over the full 2-shift.
//!
//! A pair `(A, B)` is first sign-normalized so that both traces are non-negative. Generators that
//! are elliptic give an immediate witness. A pair that is not twisted lies in a principal
//! component. A twisted pair is pushed along the monoid generated by `F₊(A,B) = (A, AB)` and
//! `F₋(A,B) = (BA, B)`, driven only by the trace triple `(tr A, tr B, tr AB)`, until it becomes
//! free or produces an elliptic product.

use crate::projgeom::{in_cyclic_order, ProjPoint};
use crate::sl2core::{
    classify_with, invariant_dirs, q, q_from_f64, q_to_f64, Mat2, Mat2Q, MatClass, MatError, Tolerances,
};
use num::{BigRational, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;
use thiserror::Error;

/// Errors raised by the 2-shift procedures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwoShiftError {
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("degenerate tie: {0}")]
    DegenerateTie(String),
    #[error("pair is not twisted")]
    NotTwisted,
    #[error("invalid F-word character {0:?}")]
    BadSign(char),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// The trace triple `(tr A, tr B, tr AB)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceTriple<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> TraceTriple<T>
where
    T: Clone + Add<Output = T> + Sub<Output = T> + Mul<Output = T>,
{
    pub fn new(x: T, y: T, z: T) -> Self {
        TraceTriple { x, y, z }
    }

    /// The invariant `x² + y² + z² − xyz`.
    pub fn j(&self) -> T {
        let (x, y, z) = (self.x.clone(), self.y.clone(), self.z.clone());
        x.clone() * x.clone() + y.clone() * y.clone() + z.clone() * z.clone() - x * y * z
    }

    /// Traces of `F₊(A,B) = (A, AB)`: `(x, z, xz − y)`.
    pub fn phi_plus(&self) -> Self {
        TraceTriple::new(self.x.clone(), self.z.clone(), self.x.clone() * self.z.clone() - self.y.clone())
    }

    /// Traces of `F₋(A,B) = (BA, B)`: `(z, y, yz − x)`.
    pub fn phi_minus(&self) -> Self {
        TraceTriple::new(self.z.clone(), self.y.clone(), self.y.clone() * self.z.clone() - self.x.clone())
    }

    pub fn apply(&self, s: Sign) -> Self {
        match s {
            Sign::Plus => self.phi_plus(),
            Sign::Minus => self.phi_minus(),
        }
    }
}

impl TraceTriple<f64> {
    pub fn of_pair(a: &Mat2, b: &Mat2) -> Self {
        TraceTriple::new(a.tr(), b.tr(), (*a * *b).tr())
    }
}

impl TraceTriple<BigRational> {
    pub fn of_pair_q(a: &Mat2Q, b: &Mat2Q) -> Self {
        TraceTriple::new(a.tr(), b.tr(), a.mul(b).tr())
    }
}

/// A generator of the monoid acting on pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// An element `F = F_{ε_k} ∘ ⋯ ∘ F_{ε_1}` of the monoid, stored as `ε_1 … ε_k` in the order in
/// which the steps are applied to a pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FWord {
    pub signs: Vec<Sign>,
}

impl FWord {
    pub fn new(signs: Vec<Sign>) -> Self {
        FWord { signs }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// The word `F(AB)` over `{A, B}`, as a matrix string, obtained by applying the letter
    /// substitutions `σ₊: A ↦ A, B ↦ AB` and `σ₋: A ↦ BA, B ↦ B` as `σ_{ε_1}(⋯σ_{ε_k}(AB))`.
    pub fn image_of_ab(&self) -> String {
        let mut w = String::from("AB");
        for s in self.signs.iter().rev() {
            w = w
                .chars()
                .map(|c| match (s, c) {
                    (Sign::Plus, 'B') => "AB",
                    (Sign::Minus, 'A') => "BA",
                    (_, 'A') => "A",
                    _ => "B",
                })
                .collect();
        }
        w
    }

    /// Images of the letters: `(F(A), F(B))` as matrix strings.
    pub fn image_of_letters(&self) -> (String, String) {
        let (mut wa, mut wb) = (String::from("A"), String::from("B"));
        for s in &self.signs {
            match s {
                Sign::Plus => wb = format!("{wa}{wb}"),
                Sign::Minus => wa = format!("{wb}{wa}"),
            }
        }
        (wa, wb)
    }

    /// `(p, q)` where `F(AB)` has length `q` and contains `p` letters `B`.
    pub fn j_fraction(&self) -> (u64, u64) {
        let w = self.image_of_ab();
        (w.chars().filter(|&c| c == 'B').count() as u64, w.len() as u64)
    }
}

impl fmt::Display for FWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.signs {
            f.write_str(match s {
                Sign::Plus => "+",
                Sign::Minus => "-",
            })?;
        }
        Ok(())
    }
}

impl FromStr for FWord {
    type Err = TwoShiftError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(Sign::Plus),
                '-' => Ok(Sign::Minus),
                other => Err(TwoShiftError::BadSign(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(FWord::new)
    }
}

/// Orientation of a free component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(&self) -> i32 {
        match self {
            Orientation::Positive => 1,
            Orientation::Negative => -1,
        }
    }
}

/// Signs applied to `(A, B)` during normalization, each `+1` or `−1`.
pub type SignPair = (i8, i8);

/// Outcome of the decision procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classification2 {
    Principal { sign_pair: SignPair },
    NonPrincipal { fword: FWord, sign_pair: SignPair, orientation: Orientation },
    /// An elliptic product, as a matrix string in the original letters.
    EllipticWitness { word: String },
    Degenerate { reason: String },
}

/// Classification with the walk statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub classification: Classification2,
    /// Number of monoid steps taken.
    pub iterations: usize,
    /// The termination bound `⌊(tr A + tr B)/4⌋ − 1` of the normalized pair, when defined.
    pub iteration_bound: Option<i64>,
    /// `j(tr A, tr B, tr AB)` of the input pair.
    pub j_invariant: f64,
}

/// One step of the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    Plus,
    Minus,
    Free,
    Elliptic,
}

fn rel_band(a: f64, b: f64, tol: &Tolerances) -> bool {
    (a - b).abs() <= tol.band * a.abs().max(b.abs()).max(1.0)
}

/// Pair normalized so both traces are non-negative, with the signs used.
pub fn sign_normalize(a: &Mat2, b: &Mat2) -> (Mat2, Mat2, SignPair) {
    let sa: i8 = if a.tr() < 0.0 { -1 } else { 1 };
    let sb: i8 = if b.tr() < 0.0 { -1 } else { 1 };
    (a.scale(sa as f64), b.scale(sb as f64), (sa, sb))
}

/// The free test: `|tr A|, |tr B|, |tr AB| > 2` and `tr A · tr B · tr AB < 0`.
pub fn is_free(a: &Mat2, b: &Mat2) -> Result<bool, TwoShiftError> {
    is_free_with(a, b, &Tolerances::default())
}

pub fn is_free_with(a: &Mat2, b: &Mat2, tol: &Tolerances) -> Result<bool, TwoShiftError> {
    let t = TraceTriple::of_pair(a, b);
    for (name, v) in [("tr A", t.x), ("tr B", t.y), ("tr AB", t.z)] {
        if (v.abs() - 2.0).abs() <= tol.band {
            return Err(TwoShiftError::Degenerate(format!("|{name}| = {} is within the band around 2", v.abs())));
        }
    }
    let prod = t.x * t.y * t.z;
    Ok(t.x.abs() > 2.0 && t.y.abs() > 2.0 && t.z.abs() > 2.0 && prod < 0.0)
}

/// `γ = tr AB − (μ/ν + ν/μ)` for a sign-normalized pair with traces at least 2, where
/// `μ/ν + ν/μ` is the smaller root of `t² − xy t + (x² + y² − 4)`.
pub fn gamma_from_traces(x: f64, y: f64, z: f64) -> f64 {
    let disc = ((x * x - 4.0).max(0.0) * (y * y - 4.0).max(0.0)).sqrt();
    z - (x * y - disc) / 2.0
}

/// The twisted test. Non-elliptic pairs are sign-normalized; the pair is twisted when
/// `γ < 0`, equivalently `j > 4` and `tr AB < tr A tr B / 2`.
pub fn is_twisted(a: &Mat2, b: &Mat2) -> Result<bool, TwoShiftError> {
    is_twisted_with(a, b, &Tolerances::default())
}

pub fn is_twisted_with(a: &Mat2, b: &Mat2, tol: &Tolerances) -> Result<bool, TwoShiftError> {
    let (a, b, _) = sign_normalize(a, b);
    for m in [&a, &b] {
        match classify_with(m, tol) {
            MatClass::Elliptic => return Ok(false),
            MatClass::PlusMinusIdentity => return Ok(false),
            _ => {}
        }
    }
    let t = TraceTriple::of_pair(&a, &b);
    let g = gamma_from_traces(t.x, t.y, t.z);
    if g.abs() <= tol.band * t.z.abs().max(1.0) {
        return Err(TwoShiftError::Degenerate(format!("γ = {g} is within the band around 0")));
    }
    Ok(g < 0.0)
}

/// Which alternative of the walk holds for a twisted, sign-normalized pair.
pub fn step_select(a: &Mat2, b: &Mat2) -> Result<Step, TwoShiftError> {
    step_select_with(&TraceTriple::of_pair(a, b), &Tolerances::default())
}

/// Step selection from the trace triple of a twisted pair with `x, y ≥ 2`.
pub fn step_select_with(t: &TraceTriple<f64>, tol: &Tolerances) -> Result<Step, TwoShiftError> {
    let z = t.z;
    if (z.abs() - 2.0).abs() <= tol.band {
        return Err(TwoShiftError::Degenerate(format!("|tr AB| = {} is within the band around 2", z.abs())));
    }
    if z < -2.0 {
        return Ok(Step::Free);
    }
    if z.abs() < 2.0 {
        return Ok(Step::Elliptic);
    }
    let (lp, rp) = (t.x * z, 2.0 * t.y);
    let (lm, rm) = (t.y * z, 2.0 * t.x);
    if rel_band(lp, rp, tol) || rel_band(lm, rm, tol) {
        return Err(TwoShiftError::Degenerate("step comparison within the band".into()));
    }
    match (lp < rp, lm < rm) {
        (true, false) => Ok(Step::Plus),
        (false, true) => Ok(Step::Minus),
        (true, true) => Err(TwoShiftError::DegenerateTie("both F₊ and F₋ give twisted pairs".into())),
        (false, false) => Err(TwoShiftError::Degenerate("no alternative of the walk holds".into())),
    }
}

fn step_select_exact(t: &TraceTriple<BigRational>) -> Result<Step, TwoShiftError> {
    let two = q(2, 1);
    let z = &t.z;
    if z.abs() == two {
        return Err(TwoShiftError::Degenerate("|tr AB| = 2".into()));
    }
    if *z < -two.clone() {
        return Ok(Step::Free);
    }
    if z.abs() < two {
        return Ok(Step::Elliptic);
    }
    let plus = &t.x * z < &two * &t.y;
    let minus = &t.y * z < &two * &t.x;
    match (plus, minus) {
        (true, false) => Ok(Step::Plus),
        (false, true) => Ok(Step::Minus),
        (true, true) => Err(TwoShiftError::DegenerateTie("both F₊ and F₋ give twisted pairs".into())),
        (false, false) => Err(TwoShiftError::Degenerate("no alternative of the walk holds".into())),
    }
}

/// Orientation of a free pair from the cyclic order of eigendirections.
pub fn free_orientation(a: &Mat2, b: &Mat2) -> Result<Orientation, TwoShiftError> {
    let ab = *a * *b;
    let ba = *b * *a;
    let dirs = |m: &Mat2| invariant_dirs(m).map_err(TwoShiftError::from);
    let (ua, sa) = dirs(a)?;
    let (ub, sb) = dirs(b)?;
    let (uab, sab) = dirs(&ab)?;
    let (uba, sba) = dirs(&ba)?;
    let pts: [ProjPoint; 8] = [ub, uba, sba, sa, ua, uab, sab, sb];
    if in_cyclic_order(&pts) {
        return Ok(Orientation::Positive);
    }
    let mut rev = pts;
    rev.reverse();
    if in_cyclic_order(&rev) {
        return Ok(Orientation::Negative);
    }
    Err(TwoShiftError::Degenerate("eigendirections of the free pair are not in either free order".into()))
}

fn bound_of(x: f64, y: f64) -> i64 {
    ((x + y) / 4.0).floor() as i64 - 1
}

fn degenerate(reason: impl Into<String>) -> Classification2 {
    Classification2::Degenerate { reason: reason.into() }
}

/// Decide the pair with the default tolerances.
pub fn classify_pair(a: &Mat2, b: &Mat2) -> Classification2 {
    classify_pair_report(a, b, &Tolerances::default()).classification
}

/// Decide the pair, reporting the walk statistics.
pub fn classify_pair_report(a0: &Mat2, b0: &Mat2, tol: &Tolerances) -> PairReport {
    let j_invariant = TraceTriple::of_pair(a0, b0).j();
    let (a, b, sign_pair) = sign_normalize(a0, b0);
    let report = |classification, iterations, iteration_bound| PairReport {
        classification,
        iterations,
        iteration_bound,
        j_invariant,
    };
    for (name, m) in [("A", &a), ("B", &b)] {
        match classify_with(m, tol) {
            MatClass::Elliptic => return report(Classification2::EllipticWitness { word: name.into() }, 0, None),
            MatClass::PlusMinusIdentity => return report(degenerate(format!("{name} is ±id")), 0, None),
            MatClass::Parabolic => return report(degenerate(format!("{name} is parabolic")), 0, None),
            MatClass::Hyperbolic => {}
        }
    }
    let t0 = TraceTriple::of_pair(&a, &b);
    let bound = bound_of(t0.x, t0.y);
    match is_twisted_with(&a, &b, tol) {
        Err(TwoShiftError::Degenerate(r)) => return report(degenerate(r), 0, Some(bound)),
        Err(e) => return report(degenerate(e.to_string()), 0, Some(bound)),
        Ok(false) => return report(Classification2::Principal { sign_pair }, 0, Some(bound)),
        Ok(true) => {}
    }
    // The trace test must agree with the interleaving of eigendirections, in either orientation.
    if let (Ok((ua, sa)), Ok((ub, sb))) = (invariant_dirs(&a), invariant_dirs(&b)) {
        if !in_cyclic_order(&[ua, sb, ub, sa]) && !in_cyclic_order(&[sa, ub, sb, ua]) {
            return report(degenerate("trace test and eigendirection order disagree"), 0, Some(bound));
        }
    }
    let (mut ma, mut mb) = (a, b);
    let (mut wa, mut wb) = (String::from("A"), String::from("B"));
    let mut signs = Vec::new();
    loop {
        let t = TraceTriple::of_pair(&ma, &mb);
        let step = match step_select_with(&t, tol) {
            Ok(s) => s,
            Err(e) => return report(degenerate(e.to_string()), signs.len(), Some(bound)),
        };
        match step {
            Step::Free => {
                return match free_orientation(&ma, &mb) {
                    Ok(orientation) => report(
                        Classification2::NonPrincipal { fword: FWord::new(signs.clone()), sign_pair, orientation },
                        signs.len(),
                        Some(bound),
                    ),
                    Err(e) => report(degenerate(e.to_string()), signs.len(), Some(bound)),
                };
            }
            Step::Elliptic => {
                return report(Classification2::EllipticWitness { word: format!("{wa}{wb}") }, signs.len(), Some(bound));
            }
            Step::Plus => {
                mb = ma * mb;
                wb = format!("{wa}{wb}");
                signs.push(Sign::Plus);
            }
            Step::Minus => {
                ma = mb * ma;
                wa = format!("{wb}{wa}");
                signs.push(Sign::Minus);
            }
        }
        if signs.len() as i64 > bound.max(0) {
            return report(degenerate("walk exceeded the termination bound"), signs.len(), Some(bound));
        }
    }
}

/// Decide a pair of exact rational matrices. Trace comparisons are exact; only the orientation
/// of the final free pair uses floating-point eigendirections.
pub fn classify_pair_exact(a0: &Mat2Q, b0: &Mat2Q) -> PairReport {
    let j_invariant = q_to_f64(&TraceTriple::of_pair_q(a0, b0).j());
    let two = q(2, 1);
    let neg_if = |m: &Mat2Q| if m.tr().is_negative() { (m.neg(), -1i8) } else { (m.clone(), 1i8) };
    let (a, sa) = neg_if(a0);
    let (b, sb) = neg_if(b0);
    let sign_pair = (sa, sb);
    let report = |classification, iterations, iteration_bound| PairReport {
        classification,
        iterations,
        iteration_bound,
        j_invariant,
    };
    for (name, m) in [("A", &a), ("B", &b)] {
        if m.b.is_zero() && m.c.is_zero() && m.a == m.d && m.a.abs() == q(1, 1) {
            return report(degenerate(format!("{name} is ±id")), 0, None);
        }
        let t = m.tr();
        if t < two {
            return report(Classification2::EllipticWitness { word: name.into() }, 0, None);
        }
        if t == two {
            return report(degenerate(format!("{name} is parabolic")), 0, None);
        }
    }
    let t0 = TraceTriple::of_pair_q(&a, &b);
    let bound = bound_of(q_to_f64(&t0.x), q_to_f64(&t0.y));
    let j = t0.j();
    let four = q(4, 1);
    let half_xy = &t0.x * &t0.y / &two;
    if j == four && t0.z <= half_xy {
        return report(degenerate("γ = 0"), 0, Some(bound));
    }
    if !(j > four && t0.z < half_xy) {
        return report(Classification2::Principal { sign_pair }, 0, Some(bound));
    }
    let (mut ma, mut mb) = (a, b);
    let (mut wa, mut wb) = (String::from("A"), String::from("B"));
    let mut signs = Vec::new();
    loop {
        let t = TraceTriple::of_pair_q(&ma, &mb);
        let step = match step_select_exact(&t) {
            Ok(s) => s,
            Err(e) => return report(degenerate(e.to_string()), signs.len(), Some(bound)),
        };
        match step {
            Step::Free => {
                return match free_orientation(&ma.to_f64(), &mb.to_f64()) {
                    Ok(orientation) => report(
                        Classification2::NonPrincipal { fword: FWord::new(signs.clone()), sign_pair, orientation },
                        signs.len(),
                        Some(bound),
                    ),
                    Err(e) => report(degenerate(e.to_string()), signs.len(), Some(bound)),
                };
            }
            Step::Elliptic => {
                return report(Classification2::EllipticWitness { word: format!("{wa}{wb}") }, signs.len(), Some(bound));
            }
            Step::Plus => {
                mb = ma.mul(&mb);
                wb = format!("{wa}{wb}");
                signs.push(Sign::Plus);
            }
            Step::Minus => {
                ma = mb.mul(&ma);
                wa = format!("{wb}{wa}");
                signs.push(Sign::Minus);
            }
        }
        if signs.len() as i64 > bound.max(0) {
            return report(degenerate("walk exceeded the termination bound"), signs.len(), Some(bound));
        }
    }
}

/// The pair `(A, B)` with `F(A, B) = (A₀, B₀)`, using `F₊⁻¹(A,B) = (A, A⁻¹B)` and
/// `F₋⁻¹(A,B) = (B⁻¹A, B)`.
pub fn pullback(fword: &FWord, a0: &Mat2, b0: &Mat2) -> (Mat2, Mat2) {
    let (mut a, mut b) = (*a0, *b0);
    for s in fword.signs.iter().rev() {
        match s {
            Sign::Plus => b = a.inv() * b,
            Sign::Minus => a = b.inv() * a,
        }
    }
    (a, b)
}

/// Exact rational version of [`pullback`].
pub fn pullback_exact(fword: &FWord, a0: &Mat2Q, b0: &Mat2Q) -> (Mat2Q, Mat2Q) {
    let (mut a, mut b) = (a0.clone(), b0.clone());
    for s in fword.signs.iter().rev() {
        match s {
            Sign::Plus => b = a.inv().mul(&b),
            Sign::Minus => a = b.inv().mul(&a),
        }
    }
    (a, b)
}

/// The pair in canonical coordinates `A = [[μ,α],[0,μ⁻¹]]`, `B = [[ν⁻¹,0],[β,ν]]`, exactly.
pub fn canonical_pair_exact(mu: &BigRational, nu: &BigRational, alpha: &BigRational, beta: &BigRational) -> (Mat2Q, Mat2Q) {
    let z = BigRational::zero();
    (
        Mat2Q::new(mu.clone(), alpha.clone(), z.clone(), mu.recip()),
        Mat2Q::new(nu.recip(), z, beta.clone(), nu.clone()),
    )
}

/// Exact canonical pair from floats, each read as an exact rational.
pub fn canonical_pair_exact_f64(mu: f64, nu: f64, alpha: f64, beta: f64) -> (Mat2Q, Mat2Q) {
    canonical_pair_exact(&q_from_f64(mu), &q_from_f64(nu), &q_from_f64(alpha), &q_from_f64(beta))
}
