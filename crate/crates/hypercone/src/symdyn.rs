//! Subshifts of finite type, admissible words, cocycle products along words, enumeration of
//! primitive periodic orbits and the finite-depth hyperbolicity rate.

use crate::projgeom::{angle_dist, ProjPoint};
use crate::sl2core::{classify, invariant_dirs, Mat2, MatClass, MatError};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Errors raised by symbolic operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymError {
    #[error("transition table must be a non-empty square table")]
    BadTable,
    #[error("subshift is not transitive: symbol {0} does not communicate with symbol 0")]
    NotTransitive(usize),
    #[error("inadmissible word: transition at index {index} ({from} -> {to}) is forbidden")]
    InadmissibleWord { index: usize, from: usize, to: usize },
    #[error("tuple has {tuple} matrices but the subshift has {symbols} symbols")]
    DimensionMismatch { tuple: usize, symbols: usize },
    #[error("word is empty")]
    EmptyWord,
    #[error("symbol {0} is out of range")]
    BadSymbol(usize),
    #[error("unrecognised letter {0:?}")]
    BadLetter(char),
}

/// A transitive subshift of finite type on symbols `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sft {
    allowed: Vec<Vec<bool>>,
}

impl Sft {
    /// Build from a transition table, `allowed[a][b]` meaning `a → b`, checking transitivity.
    pub fn new(allowed: Vec<Vec<bool>>) -> Result<Self, SymError> {
        let n = allowed.len();
        if n == 0 || allowed.iter().any(|row| row.len() != n) {
            return Err(SymError::BadTable);
        }
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(a) = stack.pop() {
                for b in 0..n {
                    let edge = if forward { allowed[a][b] } else { allowed[b][a] };
                    if edge && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
            seen
        };
        let fw = reach(true);
        let bw = reach(false);
        if let Some(bad) = (0..n).find(|&i| !fw[i] || !bw[i]) {
            return Err(SymError::NotTransitive(bad));
        }
        if !(0..n).any(|a| (0..n).any(|b| allowed[a][b])) {
            return Err(SymError::NotTransitive(0));
        }
        Ok(Sft { allowed })
    }

    /// The full shift on `n` symbols.
    pub fn full(n: usize) -> Self {
        Sft { allowed: vec![vec![true; n]; n] }
    }

    /// The 4-symbol subshift of finite type on `(A, B, A⁻¹, B⁻¹)` forbidding only the transitions
    /// between a generator and its inverse.
    pub fn free_group_2() -> Self {
        let mut allowed = vec![vec![true; 4]; 4];
        for (a, b) in [(0, 2), (2, 0), (1, 3), (3, 1)] {
            allowed[a][b] = false;
        }
        Sft { allowed }
    }

    pub fn n_symbols(&self) -> usize {
        self.allowed.len()
    }

    pub fn allows(&self, from: usize, to: usize) -> bool {
        self.allowed[from][to]
    }

    pub fn table(&self) -> &[Vec<bool>] {
        &self.allowed
    }

    pub fn is_full(&self) -> bool {
        self.allowed.iter().all(|r| r.iter().all(|&x| x))
    }

    /// The dual subshift, with every transition reversed.
    pub fn dual(&self) -> Sft {
        Sft { allowed: dual_table(&self.allowed) }
    }

    /// Check that consecutive transitions of `w` are allowed.
    pub fn check_admissible(&self, w: &Word) -> Result<(), SymError> {
        for &s in w.symbols() {
            if s >= self.n_symbols() {
                return Err(SymError::BadSymbol(s));
            }
        }
        for (i, pair) in w.symbols().windows(2).enumerate() {
            if !self.allows(pair[0], pair[1]) {
                return Err(SymError::InadmissibleWord { index: i, from: pair[0], to: pair[1] });
            }
        }
        Ok(())
    }

    pub fn is_admissible(&self, w: &Word) -> bool {
        self.check_admissible(w).is_ok()
    }

    /// Admissible, with the wrap-around transition from the last symbol to the first allowed too.
    pub fn is_cyclically_admissible(&self, w: &Word) -> bool {
        match (w.symbols().first(), w.symbols().last()) {
            (Some(&f), Some(&l)) => self.is_admissible(w) && self.allows(l, f),
            _ => false,
        }
    }
}

/// Transpose of a transition table; defined for any square table, transitive or not.
pub fn dual_table(allowed: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = allowed.len();
    (0..n).map(|b| (0..n).map(|a| allowed[a][b]).collect()).collect()
}

/// A finite sequence of symbols, listed in the order in which they are applied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(Vec<usize>);

/// Display letter of a symbol index.
pub fn letter(s: usize) -> char {
    char::from(b'A' + (s % 26) as u8)
}

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parse letters `A, B, C, …` given in application order.
    pub fn from_letters(s: &str) -> Result<Self, SymError> {
        s.chars()
            .map(|c| if c.is_ascii_uppercase() { Ok((c as u8 - b'A') as usize) } else { Err(SymError::BadLetter(c)) })
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }

    /// Parse a matrix string such as `"BAB"`, meaning the product `B·A·B` read left to right. The
    /// rightmost letter is applied first.
    pub fn from_matrix_string(s: &str) -> Result<Self, SymError> {
        let mut w = Word::from_letters(s)?;
        w.0.reverse();
        Ok(w)
    }

    /// The matrix string of this word, rightmost letter applied first.
    pub fn to_matrix_string(&self) -> String {
        self.0.iter().rev().map(|&s| letter(s)).collect()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Rotation starting at index `k`.
    pub fn rotate(&self, k: usize) -> Word {
        let n = self.0.len();
        Word((0..n).map(|i| self.0[(i + k) % n]).collect())
    }

    /// The lexicographically least rotation.
    pub fn min_rotation(&self) -> Word {
        (0..self.len().max(1)).map(|k| self.rotate(k)).min().unwrap_or_else(Word::empty)
    }

    /// Whether the word is not a proper power of a shorter word.
    pub fn is_primitive(&self) -> bool {
        let n = self.len();
        (1..n).filter(|d| n % d == 0).all(|d| self.0[..n - d] != self.0[d..])
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            write!(f, "{}", letter(s))?;
        }
        Ok(())
    }
}

/// Product `A_{w_k} ⋯ A_{w_1}` along an admissible word; the empty word gives the identity.
pub fn product(tuple: &[Mat2], sft: &Sft, w: &Word) -> Result<Mat2, SymError> {
    if tuple.len() != sft.n_symbols() {
        return Err(SymError::DimensionMismatch { tuple: tuple.len(), symbols: sft.n_symbols() });
    }
    sft.check_admissible(w)?;
    Ok(product_unchecked(tuple, w))
}

/// Product along a word without admissibility checks.
pub fn product_unchecked(tuple: &[Mat2], w: &Word) -> Mat2 {
    w.symbols().iter().fold(Mat2::identity(), |acc, &s| tuple[s] * acc)
}

/// Most periods of the word applied when refining a periodic direction.
const REFINE_PERIODS: usize = 200;

/// Unstable and stable directions `(u, s)` of the product along a periodic word.
///
/// The directions of the product matrix are used as starting points and then refined by applying
/// the word, and its inverse for the stable direction, one letter at a time with a normalization
/// after each letter. Products whose factors nearly cancel lose most of their significant digits,
/// while the letter-by-letter action keeps them.
pub fn periodic_dirs(tuple: &[Mat2], w: &Word) -> Result<(ProjPoint, ProjPoint), MatError> {
    let p = product_unchecked(tuple, w);
    let (u0, s0) = invariant_dirs(&p)?;
    if classify(&p) != MatClass::Hyperbolic {
        return Ok((u0, s0));
    }
    let refine = |start: ProjPoint, forward: bool| -> ProjPoint {
        let mut v = start.unit();
        let mut angle = start.angle();
        for _ in 0..REFINE_PERIODS {
            let step = |v: (f64, f64), m: &Mat2| {
                let x = m.apply_vec(v);
                let n = x.0.hypot(x.1);
                (x.0 / n, x.1 / n)
            };
            v = if forward {
                w.symbols().iter().fold(v, |v, &s| step(v, &tuple[s]))
            } else {
                w.symbols().iter().rev().fold(v, |v, &s| step(v, &tuple[s].inv()))
            };
            let next = ProjPoint::new(v.1.atan2(v.0)).angle();
            let moved = angle_dist(angle, next);
            angle = next;
            if moved < 1e-15 {
                break;
            }
        }
        ProjPoint::new(angle)
    };
    Ok((refine(u0, true), refine(s0, false)))
}

/// Lyndon words (primitive and strictly least among their rotations) of length `1..=n_max` over
/// `k` letters, in lexicographic order, by the Fredricksen–Kessler–Maiorana recursion.
fn lyndon_words(k: usize, n_max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || n_max == 0 {
        return out;
    }
    let mut w: Vec<usize> = vec![0];
    while !w.is_empty() {
        out.push(w.clone());
        let m = w.len();
        while w.len() < n_max {
            let c = w[w.len() - m];
            w.push(c);
        }
        while let Some(&last) = w.last() {
            if last == k - 1 {
                w.pop();
            } else {
                break;
            }
        }
        if let Some(last) = w.last_mut() {
            *last += 1;
        }
    }
    out
}

/// One representative per cyclic class of primitive, cyclically admissible words of length
/// `1..=n_max`, ordered by length and then lexicographically; each representative is the least
/// rotation of its class.
pub fn periodic_words(sft: &Sft, n_max: usize) -> Vec<Word> {
    let mut words: Vec<Word> =
        lyndon_words(sft.n_symbols(), n_max).into_iter().map(Word).filter(|w| sft.is_cyclically_admissible(w)).collect();
    words.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    words
}

/// All admissible words of length exactly `n`, in lexicographic order.
pub fn admissible_words(sft: &Sft, n: usize) -> Vec<Word> {
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &layer {
            for s in 0..sft.n_symbols() {
                if w.last().map_or(true, |&l| sft.allows(l, s)) {
                    let mut v = w.clone();
                    v.push(s);
                    next.push(v);
                }
            }
        }
        layer = next;
    }
    layer.into_iter().map(Word).collect()
}

/// Minimum of `‖product‖^{1/n}` over primitive periodic words of length `n ≤ n_max`, together
/// with a minimizing word. This is a finite-depth estimate of the least hyperbolicity rate.
pub fn hyperbolicity_rate(tuple: &[Mat2], sft: &Sft, n_max: usize) -> Result<(f64, Word), SymError> {
    if tuple.len() != sft.n_symbols() {
        return Err(SymError::DimensionMismatch { tuple: tuple.len(), symbols: sft.n_symbols() });
    }
    let mut best: Option<(f64, Word)> = None;
    for w in periodic_words(sft, n_max) {
        let r = product_unchecked(tuple, &w).norm().powf(1.0 / w.len() as f64);
        if best.as_ref().map_or(true, |(b, _)| r < *b) {
            best = Some((r, w));
        }
    }
    best.ok_or(SymError::EmptyWord)
}
