//! Rotation words, the cyclic order on `O(p/q) ⊔ O(p₀/q₀) ⊔ O(p₁/q₁)`, special words and the
//! explicit core model of each non-principal component of pairs over the full 2-shift.
//!
//! Words are matrix strings over `{A, B}`: the word `AB` stands for the product `A·B`. The stored
//! cyclic order is the positive one, in which angles on P¹ increase.

use crate::multicone::{ClosedArc, CoreSet};
use crate::projgeom::{in_cyclic_order, ProjPoint};
use crate::sl2core::{invariant_dirs, word_product_exact, Mat2};
use crate::twoshift::{free_orientation, sign_normalize, FWord, Orientation, Sign, TwoShiftError};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Angular tolerance used when matching images of core arcs.
pub const MODEL_TOL: f64 = 1e-7;

/// Errors raised by the Farey combinatorics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FareyError {
    #[error("{0} is not a reduced fraction in [0, 1]")]
    BadFraction(String),
    #[error("{0} is not an interior fraction")]
    NotInterior(Fraction),
    #[error("base point {0}/{1} is not a multiple of 1/q")]
    BadBasePoint(u64, u64),
    #[error("order violation: {0}")]
    OrderViolation(String),
    #[error(transparent)]
    TwoShift(#[from] TwoShiftError),
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A reduced fraction `p/q` with `0 ≤ p ≤ q`, `q ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fraction {
    pub p: u64,
    pub q: u64,
}

impl Fraction {
    pub fn new(p: u64, q: u64) -> Result<Self, FareyError> {
        if q == 0 || p > q || gcd(p, q) != 1 {
            return Err(FareyError::BadFraction(format!("{p}/{q}")));
        }
        Ok(Fraction { p, q })
    }

    pub fn is_interior(&self) -> bool {
        self.p > 0 && self.p < self.q
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// Interior fractions with denominator at most `q_max`, ordered by denominator then numerator.
    pub fn interior_up_to(q_max: u64) -> Vec<Fraction> {
        (2..=q_max).flat_map(|q| (1..q).filter(move |&p| gcd(p, q) == 1).map(move |p| Fraction { p, q })).collect()
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Fraction {
    type Err = FareyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FareyError::BadFraction(s.to_string());
        let (a, b) = s.split_once('/').ok_or_else(bad)?;
        Fraction::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?)
    }
}

/// The Farey parents `(p₀/q₀, p₁/q₁)` with `p₀ + p₁ = p`, `q₀ + q₁ = q`, `p₁q₀ − p₀q₁ = 1`.
pub fn farey_interval(f: Fraction) -> Result<(Fraction, Fraction), FareyError> {
    if !f.is_interior() {
        return Err(FareyError::NotInterior(f));
    }
    // p₁q₀ − p₀q₁ = 1 with the sums fixed reduces to p·q₀ − q·p₀ = 1.
    for q0 in 1..f.q {
        let num = f.p * q0;
        if num >= 1 && (num - 1) % f.q == 0 {
            let p0 = (num - 1) / f.q;
            let lo = Fraction { p: p0, q: q0 };
            let hi = Fraction { p: f.p - p0, q: f.q - q0 };
            return Ok((lo, hi));
        }
    }
    unreachable!("p is invertible modulo q for a reduced interior fraction")
}

/// The element of the monoid whose image of `AB` has slope `p/q`.
pub fn fword_of(f: Fraction) -> Result<FWord, FareyError> {
    if !f.is_interior() {
        return Err(FareyError::NotInterior(f));
    }
    let mut signs = Vec::new();
    let (mut p, mut q) = (f.p, f.q);
    while 2 * p != q {
        if 2 * p < q {
            signs.push(Sign::Plus);
            q -= p;
        } else {
            signs.push(Sign::Minus);
            let np = 2 * p - q;
            q = p;
            p = np;
        }
    }
    Ok(FWord::new(signs))
}

/// A rotation word `Θ(i/q)` of length `q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotWord {
    pub letters: String,
    /// Numerator `i` of the base point `i/q`.
    pub base: u64,
}

/// `Θ(i/q) = (θ(R^k(i/q)))_{0 ≤ k < q}` with `θ(x) = A` iff `x < 1 − p/q` and `R(x) = x + p/q`.
pub fn rotation_orbit_word(f: Fraction, i: u64) -> Result<RotWord, FareyError> {
    if i >= f.q {
        return Err(FareyError::BadBasePoint(i, f.q));
    }
    let letters = (0..f.q).map(|k| if (i + k * f.p) % f.q < f.q - f.p { 'A' } else { 'B' }).collect();
    Ok(RotWord { letters, base: i })
}

fn theta(f: Fraction, i: i64) -> String {
    let q = f.q as i64;
    rotation_orbit_word(f, i.rem_euclid(q) as u64).expect("reduced base point").letters
}

/// All words of `O(p/q)`, in lexicographic order.
pub fn orbit_words(f: Fraction) -> Vec<String> {
    let mut v: Vec<String> = (0..f.q as i64).map(|i| theta(f, i)).collect();
    v.sort();
    v.dedup();
    v
}

/// Which family a word of the cyclic order belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// `O(p/q)`.
    Main,
    /// `O(p₀/q₀)`.
    Lower,
    /// `O(p₁/q₁)`.
    Upper,
}

/// An element of the cyclic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedWord {
    pub word: String,
    pub family: Family,
    /// Rank in lexicographic order within its family.
    pub lex_rank: usize,
}

/// The cyclic order on `O(p/q) ⊔ O(p₀/q₀) ⊔ O(p₁/q₁)`, listed positively from `Θ(0)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedFamily {
    pub fraction: Fraction,
    pub elements: Vec<OrderedWord>,
}

impl OrderedFamily {
    pub fn words(&self) -> Vec<&str> {
        self.elements.iter().map(|e| e.word.as_str()).collect()
    }

    /// The order read in the negative sense, starting from `Θ(1 − 1/q)`.
    pub fn clockwise_from_last(&self) -> Vec<&str> {
        let q = self.fraction.q as i64;
        let last = theta(self.fraction, q - 1);
        let n = self.elements.len();
        let k = self.elements.iter().position(|e| e.word == last && e.family == Family::Main).expect("Θ(1−1/q) is present");
        (0..n).map(|i| self.elements[(k + n - i) % n].word.as_str()).collect()
    }

    pub fn position(&self, word: &str, family: Family) -> Option<usize> {
        self.elements.iter().position(|e| e.word == word && e.family == family)
    }

    /// Main-family words in positive cyclic order, starting from `Θ(0)`.
    pub fn main_words(&self) -> Vec<&str> {
        self.elements.iter().filter(|e| e.family == Family::Main).map(|e| e.word.as_str()).collect()
    }
}

/// The positive cyclic order. Running positively from `Θ(0)` to `Θ(1 − 1/q)` the words of
/// `O(p₁/q₁)` in lexicographic order alternate with the main words `Θ(iR(0))`, `0 < i < q₁`, in
/// lexicographic order; running on from `Θ(1 − 1/q)` back to `Θ(0)` the words of `O(p₀/q₀)` in
/// antilexicographic order alternate with the main words `Θ(R^{−i}(0))`, `0 < i < q₀`, in
/// antilexicographic order.
pub fn build_order(f: Fraction) -> Result<OrderedFamily, FareyError> {
    let (f0, f1) = farey_interval(f)?;
    let q = f.q as i64;
    let p = f.p as i64;
    let main_lex = orbit_words(f);
    let lower_lex = orbit_words(f0);
    let upper_lex = orbit_words(f1);
    let rank = |v: &Vec<String>, w: &str| v.iter().position(|x| x == w).expect("word of the family");
    let mk = |w: String, family: Family| {
        let lex_rank = match family {
            Family::Main => rank(&main_lex, &w),
            Family::Lower => rank(&lower_lex, &w),
            Family::Upper => rank(&upper_lex, &w),
        };
        OrderedWord { word: w, family, lex_rank }
    };
    let mut o1: Vec<String> = (1..f1.q as i64).map(|i| theta(f, i * p)).collect();
    o1.sort();
    let mut o0: Vec<String> = (1..f0.q as i64).map(|i| theta(f, -i * p)).collect();
    o0.sort();
    o0.reverse();
    let mut lower = lower_lex.clone();
    lower.reverse();
    let mut elements = vec![mk(theta(f, 0), Family::Main)];
    for (k, w) in upper_lex.iter().enumerate() {
        elements.push(mk(w.clone(), Family::Upper));
        if k < o1.len() {
            elements.push(mk(o1[k].clone(), Family::Main));
        }
    }
    elements.push(mk(theta(f, q - 1), Family::Main));
    for (k, w) in lower.iter().enumerate() {
        elements.push(mk(w.clone(), Family::Lower));
        if k < o0.len() {
            elements.push(mk(o0[k].clone(), Family::Main));
        }
    }
    let fam = OrderedFamily { fraction: f, elements };
    if fam.elements.len() != 2 * f.q as usize {
        return Err(FareyError::OrderViolation(format!("{} elements instead of {}", fam.elements.len(), 2 * f.q)));
    }
    Ok(fam)
}

fn substitute(w: &str, s: Sign) -> String {
    w.chars()
        .map(|c| match (s, c) {
            (Sign::Plus, 'B') => "AB",
            (Sign::Minus, 'A') => "BA",
            (_, 'A') => "A",
            _ => "B",
        })
        .collect()
}

/// Check that the substitution of the first step of `fword_of(f)` carries the cyclic order of the
/// reduced fraction onto an interval of the order of `f`, preserving the cyclic order.
pub fn descent_check(f: Fraction) -> Result<(), FareyError> {
    if f.q == 2 {
        return Ok(());
    }
    let (s, g) = if 2 * f.p < f.q {
        (Sign::Plus, Fraction::new(f.p, f.q - f.p)?)
    } else {
        (Sign::Minus, Fraction::new(2 * f.p - f.q, f.p)?)
    };
    let big = build_order(f)?;
    let small = build_order(g)?;
    let mut positions = Vec::new();
    for e in &small.elements {
        let img = substitute(&e.word, s);
        let fam = if e.family == Family::Main { Family::Main } else { Family::Lower };
        let pos = big
            .position(&img, fam)
            .or_else(|| big.position(&img, Family::Upper))
            .or_else(|| big.position(&img, Family::Lower))
            .ok_or_else(|| FareyError::OrderViolation(format!("image {img} of {} is not in the family of {f}", e.word)))?;
        positions.push(pos);
    }
    let k = positions.iter().enumerate().min_by_key(|(_, &p)| p).map(|(i, _)| i).unwrap_or(0);
    let rotated: Vec<usize> = (0..positions.len()).map(|i| positions[(k + i) % positions.len()]).collect();
    if rotated.windows(2).all(|w| w[0] < w[1]) {
        Ok(())
    } else {
        Err(FareyError::OrderViolation(format!("substitution does not preserve the cyclic order of {g}")))
    }
}

/// The special words `ω_A = Θ(p/q)`, `ω_B = Θ((p−1)/q)`, `_Bω = Θ(1 − p/q)`,
/// `_Aω = Θ(1 − (p+1)/q)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialWords {
    pub omega_a: String,
    pub omega_b: String,
    pub b_omega: String,
    pub a_omega: String,
}

pub fn special_words(f: Fraction) -> SpecialWords {
    let (p, q) = (f.p as i64, f.q as i64);
    SpecialWords { omega_a: theta(f, p), omega_b: theta(f, p - 1), b_omega: theta(f, q - p), a_omega: theta(f, q - p - 1) }
}

/// Where a generator sends a unstable core component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionEntry {
    pub generator: char,
    pub from: String,
    pub to: String,
    /// `true` when the image is the whole target component, `false` when it is a sub-arc.
    pub onto: bool,
}

/// The explicit core model of a pair in the component of an F-word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentModel {
    pub fraction: Fraction,
    pub orientation: Orientation,
    /// Words of `O(p/q)` in positive cyclic order of their unstable core components.
    pub words: Vec<String>,
    pub cores: CoreSet,
    pub action: Vec<ActionEntry>,
}

/// Cyclic membership of `x` in the closed interval from `a` to `b` of positions modulo `n`.
fn in_cyclic_interval(a: usize, x: usize, b: usize, n: usize) -> bool {
    (x + n - a) % n <= (b + n - a) % n
}

/// Build the cores and the action table of a pair whose image under `fword` is free.
pub fn component_model(fword: &FWord, a: &Mat2, b: &Mat2) -> Result<ComponentModel, FareyError> {
    let (a, b, _) = sign_normalize(a, b);
    let (fa, fb) = fword.image_of_letters();
    let letters = [('A', a), ('B', b)];
    let prod = |w: &str| word_product_exact(&letters, w).expect("letters A and B");
    let orientation = free_orientation(&prod(&fa), &prod(&fb))?;
    let reflect = Mat2::raw(1.0, 0.0, 0.0, -1.0);
    let (pa, pb) = match orientation {
        Orientation::Positive => (a, b),
        Orientation::Negative => (reflect * a * reflect, reflect * b * reflect),
    };
    let mut model = positive_model(fword, &pa, &pb)?;
    model.orientation = orientation;
    if orientation == Orientation::Negative {
        let flip = |arcs: &mut Vec<ClosedArc>| {
            for c in arcs.iter_mut() {
                *c = ClosedArc::new(-(c.start + c.len), c.len);
            }
            arcs.sort_by(|x, y| x.start.total_cmp(&y.start));
        };
        flip(&mut model.cores.u);
        flip(&mut model.cores.s);
        model.words.reverse();
    }
    Ok(model)
}

fn positive_model(fword: &FWord, a: &Mat2, b: &Mat2) -> Result<ComponentModel, FareyError> {
    let (p, q) = fword.j_fraction();
    let f = Fraction::new(p, q)?;
    let order = build_order(f)?;
    let letters = [('A', *a), ('B', *b)];
    let n = order.elements.len();
    let mut us = Vec::with_capacity(n);
    let mut ss = Vec::with_capacity(n);
    for e in &order.elements {
        let m = word_product_exact(&letters, &e.word).expect("letters A and B");
        let (u, s) = invariant_dirs(&m).map_err(|err| FareyError::OrderViolation(format!("{}: {err}", e.word)))?;
        us.push(u);
        ss.push(s);
    }
    let mut pts: Vec<ProjPoint> = Vec::with_capacity(2 * n);
    for (k, e) in order.elements.iter().enumerate() {
        match e.family {
            Family::Main => pts.extend([us[k], ss[k]]),
            _ => pts.extend([ss[k], us[k]]),
        }
    }
    if !in_cyclic_order(&pts) {
        return Err(FareyError::OrderViolation("unstable and stable directions are not in the predicted order".into()));
    }
    let main_idx: Vec<usize> = (0..n).filter(|&k| order.elements[k].family == Family::Main).collect();
    let words: Vec<String> = main_idx.iter().map(|&k| order.elements[k].word.clone()).collect();
    let iu: Vec<ClosedArc> = main_idx.iter().map(|&k| ClosedArc::between(us[(k + n - 1) % n], us[k])).collect();
    let is: Vec<ClosedArc> = main_idx.iter().map(|&k| ClosedArc::between(ss[k], ss[(k + 1) % n])).collect();
    let sp = special_words(f);
    let pos = |w: &str| words.iter().position(|x| x == w).expect("special word in O(p/q)");
    let (ia, ib) = (pos(&sp.omega_a), pos(&sp.omega_b));
    let theta0 = pos(&theta(f, 0));
    // The absorbing component for B is the lexicographically last word.
    let theta_b = pos(&theta(f, f.q as i64 - 1));
    if !(sp.omega_a.ends_with('A') && sp.omega_b.ends_with('B') && sp.a_omega.starts_with('A') && sp.b_omega.starts_with('B')) {
        return Err(FareyError::OrderViolation(format!("special words of {f} disagree with their letters")));
    }
    let qn = words.len();
    let mut action = Vec::new();
    for (gen, m) in [('A', *a), ('B', *b)] {
        for (k, w) in words.iter().enumerate() {
            let img = iu[k].image(&m);
            // Generic rule: the last letter moves to the front.
            let generic = match gen {
                'A' => k != ia && k != ib && in_cyclic_interval(ia, k, ib, qn),
                _ => k != ia && k != ib && in_cyclic_interval(ib, k, ia, qn),
            };
            let (target, onto) = if generic {
                let moved = format!("{gen}{}", &w[..w.len() - 1]);
                if !w.ends_with(gen) {
                    return Err(FareyError::OrderViolation(format!("{w} should end with {gen}")));
                }
                (pos(&moved), true)
            } else if gen == 'A' {
                (theta0, false)
            } else {
                (theta_b, false)
            };
            let ok = if onto {
                let t = &iu[target];
                crate::projgeom::angle_dist(img.start, t.start) <= MODEL_TOL
                    && crate::projgeom::angle_dist(img.end(), t.end()) <= MODEL_TOL
            } else {
                iu[target].contains_arc(&img, MODEL_TOL)
            };
            if !ok {
                return Err(FareyError::OrderViolation(format!("{gen} does not map I^u_{w} as predicted")));
            }
            action.push(ActionEntry { generator: gen, from: w.clone(), to: words[target].clone(), onto });
        }
        let mi = m.inv();
        for (k, c) in is.iter().enumerate() {
            let img = c.image(&mi);
            if !is.iter().any(|d| d.contains_arc(&img, MODEL_TOL)) {
                return Err(FareyError::OrderViolation(format!("{gen}⁻¹ does not map I^s_{} into S", words[k])));
            }
        }
    }
    let mut u = iu;
    let mut s = is;
    u.sort_by(|x, y| x.start.total_cmp(&y.start));
    s.sort_by(|x, y| x.start.total_cmp(&y.start));
    Ok(ComponentModel { fraction: f, orientation: Orientation::Positive, words, cores: CoreSet { u, s, uncertainty: 1e-12 }, action })
}
