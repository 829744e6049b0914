//! Combinatorial multicones, monotonic correspondences and the morphisms they generate: validity,
//! composition, hyperbolicity and tightness, the morphism induced by a tuple of matrices, winding
//! numbers through lifts, and the recursion that identifies tight hyperbolic morphisms of rank `q`
//! on two generators with the Farey components of the 2-shift.
//!
//! A pair of combinatorial multicones of rank `q` is identified with `ℤ/2qℤ`: element `2i` is the
//! unstable point `u_i` and element `2i + 1` is the stable point `s_i`.

use crate::fareycomb::{farey_interval, Fraction};
use crate::multicone::{ClosedArc, CoreSet};
use crate::projgeom::{cross_ratio, in_cyclic_order, ProjPoint};
use crate::sl2core::{classify, invariant_dirs, Mat2, MatClass};
use crate::symdyn::Word;
use crate::twoshift::Orientation;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

/// Largest semigroup explored by [`morphism_hyperbolic`].
pub const CLOSURE_BUDGET: usize = 1_000_000;
/// Angular tolerance when matching images of core components.
pub const INCIDENCE_TOL: f64 = 1e-7;
/// Largest allowed gap between a lifted composition and a whole turn at a fixed point.
pub const LIFT_TOL: f64 = 1e-6;

/// Errors raised by the correspondence calculus.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrError {
    #[error("malformed correspondence: {0}")]
    BadTable(String),
    #[error("not monotonic: {clause} fails at {element}")]
    NotMonotonic { clause: String, element: String },
    #[error("semigroup closure exceeded {0} elements")]
    ClosureBudgetExceeded(usize),
    #[error("ambiguous incidence: {0}")]
    AmbiguousIncidence(String),
    #[error("height undefined: {0}")]
    HeightUndefined(String),
    #[error("product along {0} is not hyperbolic")]
    EllipticAlongWord(String),
    #[error("generator {0} is not hyperbolic")]
    NotHyperbolic(usize),
    #[error("structure violation: {0}")]
    StructureViolation(String),
    #[error("points are not in the required cyclic order")]
    NotInOrder,
}

/// A pair of combinatorial multicones of the given rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CombMulticone {
    pub rank: usize,
}

/// A monotonic correspondence, stored as its stable map `s` and unstable map `u`.
///
/// The correspondence contains the pairs `(u_i, u_{u[i]})` and `(s_{s[j]}, s_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MonotoneCorr {
    s: Vec<usize>,
    u: Vec<usize>,
}

fn not_mono(clause: &str, element: String) -> CorrError {
    CorrError::NotMonotonic { clause: clause.to_string(), element }
}

impl MonotoneCorr {
    pub fn rank(&self) -> usize {
        self.u.len()
    }

    pub fn s_map(&self) -> &[usize] {
        &self.s
    }

    pub fn u_map(&self) -> &[usize] {
        &self.u
    }

    pub fn identity(q: usize) -> Self {
        MonotoneCorr { s: (0..q).collect(), u: (0..q).collect() }
    }

    /// The constant correspondence with values `a_s`, `a_u`.
    pub fn constant(q: usize, a_s: usize, a_u: usize) -> Self {
        MonotoneCorr { s: vec![a_s; q], u: vec![a_u; q] }
    }

    pub fn is_constant(&self) -> bool {
        self.u.iter().all(|&x| x == self.u[0])
    }

    pub fn image_u(&self) -> BTreeSet<usize> {
        self.u.iter().copied().collect()
    }

    pub fn image_s(&self) -> BTreeSet<usize> {
        self.s.iter().copied().collect()
    }

    /// The unique `u`-fixed point, if any.
    pub fn fix_u(&self) -> Option<usize> {
        (0..self.rank()).find(|&i| self.u[i] == i)
    }

    pub fn fix_s(&self) -> Option<usize> {
        (0..self.rank()).find(|&j| self.s[j] == j)
    }
}

/// Check that the candidate maps form a monotonic correspondence: the successor of each pair,
/// determined by the local rule, exists and the pairs form a single cycle.
pub fn validate(s: Vec<usize>, u: Vec<usize>) -> Result<MonotoneCorr, CorrError> {
    let q = u.len();
    if q == 0 || s.len() != q {
        return Err(CorrError::BadTable(format!("maps of sizes {} and {}", s.len(), u.len())));
    }
    if let Some(&x) = s.iter().chain(u.iter()).find(|&&x| x >= q) {
        return Err(CorrError::BadTable(format!("value {x} outside rank {q}")));
    }
    let in_s: Vec<bool> = (0..q).map(|i| s.contains(&i)).collect();
    let in_u: Vec<bool> = (0..q).map(|i| u.contains(&i)).collect();
    // Pair indices: 0..q are the unstable pairs, q..2q the stable pairs.
    let mut next = vec![0usize; 2 * q];
    for i in 0..q {
        if in_s[i] {
            if s[u[i]] != i {
                return Err(not_mono("diagonal step after an unstable pair", format!("u{i}")));
            }
            next[i] = q + u[i];
        } else {
            if u[(i + 1) % q] != u[i] {
                return Err(not_mono("horizontal step after an unstable pair", format!("u{i}")));
            }
            next[i] = (i + 1) % q;
        }
    }
    for j in 0..q {
        let j1 = (j + 1) % q;
        if in_u[j1] {
            if u[(s[j] + 1) % q] != j1 {
                return Err(not_mono("diagonal step after a stable pair", format!("s{j}")));
            }
            next[q + j] = (s[j] + 1) % q;
        } else {
            if s[j1] != s[j] {
                return Err(not_mono("vertical step after a stable pair", format!("s{j}")));
            }
            next[q + j] = q + j1;
        }
    }
    let mut seen = vec![false; 2 * q];
    let mut k = 0;
    for _ in 0..2 * q {
        if seen[k] {
            return Err(not_mono("single cyclic ordering", format!("pair {k}")));
        }
        seen[k] = true;
        k = next[k];
    }
    if k != 0 {
        return Err(not_mono("single cyclic ordering", "pair 0".into()));
    }
    Ok(MonotoneCorr { s, u })
}

/// `C ∘ C'`: stable map `C_s ∘ C'_s`, unstable map `C'_u ∘ C_u`.
pub fn compose(c: &MonotoneCorr, c2: &MonotoneCorr) -> MonotoneCorr {
    let q = c.rank();
    MonotoneCorr { s: (0..q).map(|x| c.s[c2.s[x]]).collect(), u: (0..q).map(|x| c2.u[c.u[x]]).collect() }
}

/// Whether `x` lies strictly inside the positive run from `a` to `b` in `ℤ/nℤ`.
fn strictly_between(a: usize, x: usize, b: usize, n: usize) -> bool {
    let dx = (x + n - a) % n;
    let db = (b + n - a) % n;
    dx > 0 && (db == 0 || dx < db)
}

/// The stable map determined by a non-constant unstable map, when it exists.
pub fn derive_s_from_u(u: &[usize]) -> Result<MonotoneCorr, CorrError> {
    let q = u.len();
    if q == 0 || u.iter().all(|&x| x == u[0]) {
        return Err(CorrError::BadTable("the unstable map is constant, so the stable map is free".into()));
    }
    let n = 2 * q;
    let mut s: Vec<Option<usize>> = vec![None; q];
    for i in 0..q {
        let (a, b) = (2 * u[i], 2 * u[(i + 1) % q]);
        if a == b {
            continue;
        }
        for j in 0..q {
            if strictly_between(a, 2 * j + 1, b, n) {
                if s[j].is_some() {
                    return Err(not_mono("stable map assigned twice", format!("s{j}")));
                }
                s[j] = Some(i);
            }
        }
    }
    let s: Vec<usize> = s
        .into_iter()
        .enumerate()
        .map(|(j, x)| x.ok_or_else(|| not_mono("stable map undetermined", format!("s{j}"))))
        .collect::<Result<_, _>>()?;
    validate(s, u.to_vec())
}

/// A morphism of the free monoid on `N` generators into the correspondences of a multicone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism {
    pub multicone: CombMulticone,
    pub gens: Vec<MonotoneCorr>,
}

/// Exchange format for morphisms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphismJson {
    pub rank: usize,
    /// `"even_u"` when element 0 is unstable, `"even_s"` when it is stable.
    pub parity: String,
    pub gens: Vec<GenJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenJson {
    pub u: Vec<usize>,
    pub s: Vec<usize>,
}

impl Morphism {
    pub fn new(gens: Vec<MonotoneCorr>) -> Result<Self, CorrError> {
        let q = gens.first().map(|g| g.rank()).ok_or_else(|| CorrError::BadTable("no generators".into()))?;
        if gens.iter().any(|g| g.rank() != q) {
            return Err(CorrError::BadTable("generators of different ranks".into()));
        }
        Ok(Morphism { multicone: CombMulticone { rank: q }, gens })
    }

    pub fn rank(&self) -> usize {
        self.multicone.rank
    }

    /// Image of a word, composed in application order.
    pub fn image(&self, w: &Word) -> MonotoneCorr {
        w.symbols().iter().fold(MonotoneCorr::identity(self.rank()), |acc, &i| compose(&acc, &self.gens[i]))
    }

    pub fn to_json(&self) -> MorphismJson {
        MorphismJson {
            rank: self.rank(),
            parity: "even_u".into(),
            gens: self.gens.iter().map(|g| GenJson { u: g.u.clone(), s: g.s.clone() }).collect(),
        }
    }

    /// Parse the exchange format. With `"even_s"` parity the stable point `s_j` sits before
    /// `u_j`, so stable indices shift by one to reach the internal labelling.
    pub fn from_json(j: &MorphismJson) -> Result<Self, CorrError> {
        let q = j.rank;
        let shift = match j.parity.as_str() {
            "even_u" => 0,
            "even_s" => q - 1,
            other => return Err(CorrError::BadTable(format!("unknown parity {other}"))),
        };
        let mut gens = Vec::new();
        for g in &j.gens {
            if g.u.len() != q || g.s.len() != q || g.s.iter().chain(g.u.iter()).any(|&x| x >= q) {
                return Err(CorrError::BadTable("generator tables do not match the rank".into()));
            }
            let mut s = vec![0; q];
            for (jj, &v) in g.s.iter().enumerate() {
                s[(jj + shift) % q] = (v + shift) % q;
            }
            gens.push(validate(s, g.u.clone())?);
        }
        Morphism::new(gens)
    }

    /// The same morphism with the cyclic order reversed.
    pub fn reflected(&self) -> Result<Morphism, CorrError> {
        let q = self.rank();
        let su = |i: usize| (q - i) % q;
        let ss = |j: usize| q - 1 - j;
        let gens = self
            .gens
            .iter()
            .map(|g| {
                let mut u = vec![0; q];
                let mut s = vec![0; q];
                for i in 0..q {
                    u[su(i)] = su(g.u[i]);
                    s[ss(i)] = ss(g.s[i]);
                }
                validate(s, u)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Morphism::new(gens)
    }
}

/// Hyperbolicity of a morphism and the length beyond which every image is constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperbolicReport {
    pub hyperbolic: bool,
    /// Every word of length at least `ell` maps to a constant correspondence.
    pub ell: Option<usize>,
    pub semigroup_size: usize,
}

/// Closure of the generated semigroup under right multiplication; hyperbolic iff the
/// non-constant elements carry no cycle.
pub fn morphism_hyperbolic(phi: &Morphism) -> Result<HyperbolicReport, CorrError> {
    let mut index: HashMap<MonotoneCorr, usize> = HashMap::new();
    let mut nodes: Vec<MonotoneCorr> = Vec::new();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    let intern = |c: MonotoneCorr, nodes: &mut Vec<MonotoneCorr>, index: &mut HashMap<MonotoneCorr, usize>, edges: &mut Vec<Vec<usize>>, queue: &mut std::collections::VecDeque<usize>| {
        if let Some(&k) = index.get(&c) {
            return k;
        }
        let k = nodes.len();
        index.insert(c.clone(), k);
        nodes.push(c);
        edges.push(Vec::new());
        queue.push_back(k);
        k
    };
    let roots: Vec<usize> =
        phi.gens.iter().map(|g| intern(g.clone(), &mut nodes, &mut index, &mut edges, &mut queue)).collect();
    while let Some(k) = queue.pop_front() {
        if nodes[k].is_constant() {
            continue;
        }
        for g in &phi.gens {
            let c = compose(&nodes[k], g);
            let t = intern(c, &mut nodes, &mut index, &mut edges, &mut queue);
            edges[k].push(t);
            if nodes.len() > CLOSURE_BUDGET {
                return Err(CorrError::ClosureBudgetExceeded(CLOSURE_BUDGET));
            }
        }
    }
    let n = nodes.len();
    // Longest chain of non-constant nodes starting at each node; a grey revisit is a cycle.
    let mut state = vec![0u8; n];
    let mut longest = vec![0usize; n];
    fn visit(k: usize, nodes: &[MonotoneCorr], edges: &[Vec<usize>], state: &mut [u8], longest: &mut [usize]) -> bool {
        if state[k] == 2 {
            return true;
        }
        if state[k] == 1 {
            return false;
        }
        if nodes[k].is_constant() {
            state[k] = 2;
            longest[k] = 0;
            return true;
        }
        state[k] = 1;
        let mut best = 0;
        for &t in &edges[k] {
            if !visit(t, nodes, edges, state, longest) {
                return false;
            }
            best = best.max(longest[t]);
        }
        state[k] = 2;
        longest[k] = best + 1;
        true
    }
    for &r in &roots {
        if !visit(r, &nodes, &edges, &mut state, &mut longest) {
            return Ok(HyperbolicReport { hyperbolic: false, ell: None, semigroup_size: n });
        }
    }
    let ell = if MonotoneCorr::identity(phi.rank()).is_constant() {
        0
    } else {
        roots.iter().map(|&r| longest[r]).max().unwrap_or(0) + 1
    };
    Ok(HyperbolicReport { hyperbolic: true, ell: Some(ell), semigroup_size: n })
}

/// Whether the images of the generators cover both halves of the multicone.
pub fn morphism_tight(phi: &Morphism) -> bool {
    let q = phi.rank();
    let iu: BTreeSet<usize> = phi.gens.iter().flat_map(|g| g.u.iter().copied()).collect();
    let is: BTreeSet<usize> = phi.gens.iter().flat_map(|g| g.s.iter().copied()).collect();
    iu.len() == q && is.len() == q
}

/// Remove uncovered points one at a time, merging their two neighbours, until the morphism is
/// tight.
pub fn reduce_tight(phi: &Morphism) -> Result<Morphism, CorrError> {
    let mut cur = phi.clone();
    loop {
        let q = cur.rank();
        if q == 1 || morphism_tight(&cur) {
            return Ok(cur);
        }
        let iu: BTreeSet<usize> = cur.gens.iter().flat_map(|g| g.u.iter().copied()).collect();
        let is: BTreeSet<usize> = cur.gens.iter().flat_map(|g| g.s.iter().copied()).collect();
        let gens = if let Some(k) = (0..q).find(|i| !iu.contains(i)) {
            // Drop u_k; s_{k-1} and s_k merge.
            let nu = |i: usize| if i > k { i - 1 } else { i };
            let km1 = (k + q - 1) % q;
            let ns = |j: usize| {
                let j = if j == k { km1 } else { j };
                if k == 0 {
                    // s_{q-1} and s_0 merge into the last stable point.
                    if j == 0 { q - 2 } else { j - 1 }
                } else if j > k {
                    j - 1
                } else {
                    j
                }
            };
            cur.gens
                .iter()
                .map(|g| {
                    let mut u = vec![0; q - 1];
                    let mut s = vec![0; q - 1];
                    for i in (0..q).filter(|&i| i != k) {
                        u[nu(i)] = nu(g.u[i]);
                    }
                    for j in 0..q {
                        s[ns(j)] = ns(g.s[j]);
                    }
                    validate(s, u)
                })
                .collect::<Result<Vec<_>, _>>()?
        } else {
            let k = (0..q).find(|j| !is.contains(j)).expect("an uncovered point exists");
            // Drop s_k; u_k and u_{k+1} merge.
            let k1 = (k + 1) % q;
            let ns = |j: usize| if j > k { j - 1 } else { j };
            let nu = |i: usize| {
                let i = if i == k1 { k } else { i };
                if k1 == 0 {
                    // u_{q-1} and u_0 merge into u_0 of the new labelling.
                    if i == q - 1 { 0 } else { i }
                } else if i > k1 {
                    i - 1
                } else {
                    i
                }
            };
            cur.gens
                .iter()
                .map(|g| {
                    let mut u = vec![0; q - 1];
                    let mut s = vec![0; q - 1];
                    for i in 0..q {
                        u[nu(i)] = nu(g.u[i]);
                    }
                    for j in (0..q).filter(|&j| j != k) {
                        s[ns(j)] = ns(g.s[j]);
                    }
                    validate(s, u)
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        cur = Morphism::new(gens)?;
    }
}

/// The morphism induced by a tuple on the components of its cores.
pub fn induced_morphism(tuple: &[Mat2], cores: &CoreSet) -> Result<Morphism, CorrError> {
    let q = cores.rank().ok_or_else(|| CorrError::BadTable("core counts differ".into()))?;
    if q == 0 {
        return Err(CorrError::BadTable("empty cores".into()));
    }
    let mut tagged: Vec<(ClosedArc, bool)> =
        cores.u.iter().map(|a| (*a, true)).chain(cores.s.iter().map(|a| (*a, false))).collect();
    tagged.sort_by(|a, b| a.0.start.total_cmp(&b.0.start));
    let first_u = tagged.iter().position(|t| t.1).expect("unstable components exist");
    tagged.rotate_left(first_u);
    if tagged.iter().enumerate().any(|(k, t)| t.1 != (k % 2 == 0)) {
        return Err(CorrError::StructureViolation("core components do not alternate".into()));
    }
    let us: Vec<ClosedArc> = tagged.iter().step_by(2).map(|t| t.0).collect();
    let ss: Vec<ClosedArc> = tagged.iter().skip(1).step_by(2).map(|t| t.0).collect();
    let locate = |img: &ClosedArc, arcs: &[ClosedArc], what: String| -> Result<usize, CorrError> {
        let hits: Vec<usize> = (0..arcs.len()).filter(|&k| arcs[k].contains_arc(img, INCIDENCE_TOL)).collect();
        match hits.as_slice() {
            [k] => Ok(*k),
            _ => Err(CorrError::AmbiguousIncidence(format!("{what} meets {} components", hits.len()))),
        }
    };
    let mut gens = Vec::new();
    for (i, m) in tuple.iter().enumerate() {
        let u = (0..q).map(|k| locate(&us[k].image(m), &us, format!("A{i}(u{k})"))).collect::<Result<Vec<_>, _>>()?;
        let mi = m.inv();
        let s = (0..q).map(|k| locate(&ss[k].image(&mi), &ss, format!("A{i}⁻¹(s{k})"))).collect::<Result<Vec<_>, _>>()?;
        gens.push(validate(s, u)?);
    }
    Morphism::new(gens)
}

/// A lift of a monotonic correspondence to `ℤ²`, stored as the lifted values of the unstable
/// points `2i`, `0 ≤ i < q`; the lift is invariant under translation by `(2q, 2q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedCorr {
    pub base: MonotoneCorr,
    lu: Vec<i64>,
}

impl LiftedCorr {
    /// The lift whose value at `u_0` is `2·C_u(0)`.
    pub fn new(base: &MonotoneCorr) -> Self {
        let q = base.rank();
        let period = 2 * q as i64;
        let img_s = base.image_s();
        let mut lu = vec![2 * base.u[0] as i64];
        for i in 0..q - 1 {
            let prev = lu[i];
            if img_s.contains(&i) {
                let target = 2 * base.u[i + 1] as i64;
                let step = (target - prev).rem_euclid(period);
                lu.push(prev + if step == 0 { period } else { step });
            } else {
                lu.push(prev);
            }
        }
        LiftedCorr { base: base.clone(), lu }
    }

    fn period(&self) -> i64 {
        2 * self.base.rank() as i64
    }

    /// Lifted value at an unstable integer `z ≡ 2j (mod 2q)`.
    fn eval_u(&self, z: i64) -> i64 {
        let p = self.period();
        let r = z.rem_euclid(p);
        let j = (r / 2) as usize;
        self.lu[j] + (z - r)
    }

    /// `Ĉ ∘ Ĉ'`: the unstable values of `Ĉ` followed by those of `Ĉ'`.
    pub fn compose(&self, other: &LiftedCorr) -> LiftedCorr {
        LiftedCorr { base: compose(&self.base, &other.base), lu: self.lu.iter().map(|&v| other.eval_u(v)).collect() }
    }

    /// Translate vertically by `2qn`.
    pub fn shifted(&self, n: i64) -> LiftedCorr {
        let d = n * self.period();
        LiftedCorr { base: self.base.clone(), lu: self.lu.iter().map(|v| v + d).collect() }
    }

    /// The integer `n` with `(x, x + 2qn)` in the lift.
    pub fn height(&self) -> Result<i64, CorrError> {
        let q = self.base.rank();
        let p = self.period();
        let mut found = BTreeSet::new();
        for i in 0..q {
            let x = 2 * i as i64;
            let y = self.lu[i];
            if (y - x).rem_euclid(p) == 0 {
                found.insert((y - x) / p);
            }
            let next = if i + 1 < q { self.lu[i + 1] } else { self.lu[0] + p };
            let xs = x + 1;
            let mut ys = y + 1;
            while ys < next {
                if (ys - xs).rem_euclid(p) == 0 {
                    found.insert((ys - xs) / p);
                }
                ys += 2;
            }
        }
        match found.len() {
            1 => Ok(*found.iter().next().expect("one element")),
            0 => Err(CorrError::HeightUndefined("the lift meets no diagonal translate".into())),
            _ => Err(CorrError::HeightUndefined("the lift meets several diagonal translates".into())),
        }
    }

    /// The lift of height zero.
    pub fn height_zero(base: &MonotoneCorr) -> Result<LiftedCorr, CorrError> {
        let l = LiftedCorr::new(base);
        let n = l.height()?;
        Ok(l.shifted(-n))
    }
}

/// Winding number of a word from the height-zero lifts of the generators.
pub fn winding_comb(phi: &Morphism, w: &Word) -> Result<i64, CorrError> {
    if w.is_empty() {
        return Ok(0);
    }
    let lifts = phi.gens.iter().map(LiftedCorr::height_zero).collect::<Result<Vec<_>, _>>()?;
    let mut acc = lifts[w.symbols()[0]].clone();
    for &i in &w.symbols()[1..] {
        acc = acc.compose(&lifts[i]);
    }
    acc.height()
}

/// Displacement of the lift of a hyperbolic matrix that has fixed points, at angle `t`.
fn lift_displacement(m: &Mat2, t: f64) -> f64 {
    let d = m.turn_angle(t);
    if m.tr() >= 0.0 {
        d
    } else {
        d.rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI
    }
}

/// Winding number of a word from lifts of the projective actions to the universal cover.
pub fn winding_matrix(tuple: &[Mat2], w: &Word) -> Result<i64, CorrError> {
    for (i, m) in tuple.iter().enumerate() {
        if classify(m) != MatClass::Hyperbolic {
            return Err(CorrError::NotHyperbolic(i));
        }
    }
    if w.is_empty() {
        return Ok(0);
    }
    let prod = crate::symdyn::product_unchecked(tuple, w);
    if classify(&prod) == MatClass::Elliptic {
        return Err(CorrError::EllipticAlongWord(w.to_string()));
    }
    let (u, _) = invariant_dirs(&prod).map_err(|_| CorrError::EllipticAlongWord(w.to_string()))?;
    let x0 = u.angle();
    let mut t = x0;
    for &i in w.symbols() {
        t += lift_displacement(&tuple[i], t);
    }
    let turns = (t - x0) / std::f64::consts::PI;
    let n = turns.round();
    if (turns - n).abs() > LIFT_TOL {
        return Err(CorrError::HeightUndefined(format!("lift of {w} misses its fixed point by {}", turns - n)));
    }
    Ok(n as i64)
}

/// Result of [`classify_two_morphism`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwoMorphismClass {
    /// Rank one: the only morphism, realized by principal pairs.
    Trivial,
    Component { fraction: Fraction, orientation: Orientation },
}

struct Collapse {
    /// `x_s^{(0)}`, `x_s^{(1)}` as stable indices.
    xs: (usize, usize),
    /// `x_u^{(0)}`, `x_u^{(1)}` as unstable indices.
    xu: (usize, usize),
}

fn violation(msg: impl Into<String>) -> CorrError {
    CorrError::StructureViolation(msg.into())
}

/// Unstable points strictly inside the positive run between two stable points, and conversely.
fn u_between(q: usize, a_s: usize, b_s: usize) -> BTreeSet<usize> {
    (0..q).filter(|&i| strictly_between(2 * a_s + 1, 2 * i, 2 * b_s + 1, 2 * q)).collect()
}

fn s_between(q: usize, a_u: usize, b_u: usize) -> BTreeSet<usize> {
    (0..q).filter(|&j| strictly_between(2 * a_u, 2 * j + 1, 2 * b_u, 2 * q)).collect()
}

/// The unique pairs of points identified by both generators, labelled so that the images of
/// `A` and `B` are the runs between them.
fn collapse_points(a: &MonotoneCorr, b: &MonotoneCorr) -> Result<Collapse, CorrError> {
    let q = a.rank();
    let pairs = |f: &dyn Fn(usize) -> (usize, usize)| -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for x in 0..q {
            for y in x + 1..q {
                if f(x) == f(y) {
                    v.push((x, y));
                }
            }
        }
        v
    };
    let ps = pairs(&|j| (a.s[j], b.s[j]));
    let pu = pairs(&|i| (a.u[i], b.u[i]));
    if ps.len() != 1 || pu.len() != 1 {
        return Err(violation(format!(
            "expected one pair of points collapsed by both generators on each side, found {} stable and {} unstable",
            ps.len(),
            pu.len()
        )));
    }
    let (ia, ib) = (a.image_u(), b.image_u());
    let (sa, sb) = (a.image_s(), b.image_s());
    let (x, y) = ps[0];
    let xs = if u_between(q, x, y) == ia { (x, y) } else { (y, x) };
    if u_between(q, xs.0, xs.1) != ia || u_between(q, xs.1, xs.0) != ib {
        return Err(violation("unstable images are not the runs between the collapsed stable points"));
    }
    let (x, y) = pu[0];
    let xu = if s_between(q, y, x) == sa { (x, y) } else { (y, x) };
    if s_between(q, xu.1, xu.0) != sa || s_between(q, xu.0, xu.1) != sb {
        return Err(violation("stable images are not the runs between the collapsed unstable points"));
    }
    Ok(Collapse { xs, xu })
}

/// Position of an element along the positive run starting at `from`.
fn offset(from: usize, e: usize, n: usize) -> usize {
    (e + n - from) % n
}

/// The pair `(A', B') = (A, A∘B)` on the multicone where the unstable points outside the image
/// of `A` are dropped and the stable run `[x_s^{(1)}, x_s^{(0)}]` collapses to one point.
fn reduce_pair(a: &MonotoneCorr, b: &MonotoneCorr, c: &Collapse) -> Result<(MonotoneCorr, MonotoneCorr), CorrError> {
    let q = a.rank();
    let n = 2 * q;
    let (x0, x1) = c.xs;
    let e0 = 2 * x0 + 1;
    let len = offset(e0, 2 * x1 + 1, n);
    // Elements strictly between x_s^(0) and x_s^(1), in order.
    let inner: Vec<usize> = (1..len).map(|k| (e0 + k) % n).collect();
    let new_u: Vec<usize> = inner.iter().filter(|&&e| e % 2 == 0).map(|&e| e / 2).collect();
    let new_s: Vec<usize> = inner.iter().filter(|&&e| e % 2 == 1).map(|&e| e / 2).collect();
    let q2 = new_u.len();
    if q2 == 0 || new_s.len() + 1 != q2 {
        return Err(violation("reduced multicone is not alternating"));
    }
    let u_index: HashMap<usize, usize> = new_u.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let pi = |j: usize| new_s.iter().position(|&x| x == j).unwrap_or(q2 - 1);
    let pre = |k: usize| if k == q2 - 1 { x0 } else { new_s[k] };
    let lookup = |i: usize| u_index.get(&i).copied().ok_or_else(|| violation("unstable image leaves the image of A"));
    let mut au = Vec::with_capacity(q2);
    let mut bu = Vec::with_capacity(q2);
    for &i in &new_u {
        au.push(lookup(a.u[i])?);
        bu.push(lookup(a.u[b.u[i]])?);
    }
    let a_s: Vec<usize> = (0..q2).map(|k| pi(a.s[pre(k)])).collect();
    let b_s: Vec<usize> = (0..q2).map(|k| pi(b.s[a.s[pre(k)]])).collect();
    Ok((validate(a_s, au)?, validate(b_s, bu)?))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Identify a tight hyperbolic morphism on two generators with a Farey component.
///
/// The returned fraction counts the unstable image of the second generator over the rank. The
/// orientation is positive when, for the generator with the smaller image, the fixed unstable
/// point of `A` precedes the fixed stable point of `B` inside the run from `x_u^{(0)}` to
/// `x_u^{(1)}`.
pub fn classify_two_morphism(phi: &Morphism) -> Result<TwoMorphismClass, CorrError> {
    if phi.gens.len() != 2 {
        return Err(violation(format!("{} generators instead of 2", phi.gens.len())));
    }
    if !morphism_tight(phi) {
        return Err(violation("morphism is not tight"));
    }
    let h = morphism_hyperbolic(phi)?;
    if !h.hyperbolic {
        return Err(violation("morphism is not hyperbolic"));
    }
    classify_rec(&phi.gens[0], &phi.gens[1])
}

fn classify_rec(a: &MonotoneCorr, b: &MonotoneCorr) -> Result<TwoMorphismClass, CorrError> {
    let q = a.rank();
    if q == 1 {
        return Ok(TwoMorphismClass::Trivial);
    }
    let p = b.image_u().len();
    if a.image_u().len() + p != q || !a.image_u().is_disjoint(&b.image_u()) {
        return Err(violation("unstable images do not partition the unstable points"));
    }
    if q == 2 {
        if !(a.is_constant() && b.is_constant()) {
            return Err(violation("rank 2 generators are not constant"));
        }
        let orientation = if a.u[0] == (a.s[0] + 1) % 2 { Orientation::Positive } else { Orientation::Negative };
        return Ok(TwoMorphismClass::Component { fraction: Fraction::new(1, 2).expect("1/2"), orientation });
    }
    if 2 * p == q {
        return Err(violation("the two generators have images of equal size"));
    }
    if 2 * p > q {
        return match classify_rec(b, a)? {
            TwoMorphismClass::Component { fraction, orientation } => Ok(TwoMorphismClass::Component {
                fraction: Fraction::new(fraction.q - fraction.p, fraction.q).map_err(|e| violation(e.to_string()))?,
                orientation,
            }),
            TwoMorphismClass::Trivial => Err(violation("rank collapsed to 1")),
        };
    }
    if gcd(p, q) != 1 {
        return Err(violation(format!("{p} and {q} are not coprime")));
    }
    let f = Fraction::new(p as u64, q as u64).map_err(|e| violation(e.to_string()))?;
    let (f0, _) = farey_interval(f).map_err(|e| violation(e.to_string()))?;
    let phi = Morphism::new(vec![a.clone(), b.clone()])?;
    let mut found = None;
    for (orientation, m) in [(Orientation::Positive, phi.clone()), (Orientation::Negative, phi.reflected()?)] {
        let (ma, mb) = (&m.gens[0], &m.gens[1]);
        let c = collapse_points(ma, mb)?;
        let fa_u = ma.fix_u().ok_or_else(|| violation("A has no fixed unstable point"))?;
        let fb_s = mb.fix_s().ok_or_else(|| violation("B has no fixed stable point"))?;
        let n = 2 * q;
        let start = 2 * c.xu.0;
        let (o_fa, o_fb, o_end) = (offset(start, 2 * fa_u, n), offset(start, 2 * fb_s + 1, n), offset(start, 2 * c.xu.1, n));
        if o_fa < o_fb && o_fb < o_end {
            let p0 = (0..q).filter(|&i| offset(start, 2 * i, n) < o_fa).count();
            let s_start = 2 * c.xs.0 + 1;
            let o_fbs = offset(s_start, 2 * fb_s + 1, n);
            let q0 = p0 + (0..q).filter(|&j| offset(s_start, 2 * j + 1, n) < o_fbs).count();
            let delta = o_fb - o_fa - 1;
            found = Some((orientation, c, p0, q0, delta, m));
            break;
        }
    }
    let (orientation, c, p0, q0, delta, m) = found.ok_or_else(|| violation("fixed points are not ordered in either orientation"))?;
    if delta != 0 || p0 as u64 != f0.p || q0 as u64 != f0.q {
        return Err(violation(format!("position data ({p0}, {q0}, {delta}) disagree with the Farey parent {f0} of {f}")));
    }
    let (a2, b2) = reduce_pair(&m.gens[0], &m.gens[1], &c)?;
    match classify_rec(&a2, &b2)? {
        TwoMorphismClass::Component { fraction, .. } if fraction.p as usize == p && fraction.q as usize == q - p => {}
        other => return Err(violation(format!("reduced morphism gives {other:?} instead of {p}/{}", q - p))),
    }
    Ok(TwoMorphismClass::Component { fraction: f, orientation })
}

/// The rank-15 unstable maps of three generators whose morphism is tight and hyperbolic after
/// padding with constants but is induced by no tuple of matrices.
///
/// Unstable points in order: `α a b ω c d β β' d' o a' ω' b' c' α'`.
pub fn non_realizable_u_maps() -> [Vec<usize>; 3] {
    // Indices: α0 a1 b2 ω3 c4 d5 β6 β'7 d'8 o9 a'10 ω'11 b'12 c'13 α'14.
    let a = vec![3, 6, 0, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3];
    let b = vec![10, 10, 12, 13, 13, 8, 8, 9, 9, 9, 9, 9, 9, 9, 9];
    let c = vec![11, 11, 11, 11, 11, 11, 11, 11, 11, 11, 11, 11, 14, 7, 11];
    [a, b, c]
}

/// The rank-15 morphism: three derived generators followed by constants covering every point
/// their images miss.
pub fn non_realizable_fixture() -> Result<Morphism, CorrError> {
    let mut gens = non_realizable_u_maps().iter().map(|u| derive_s_from_u(u)).collect::<Result<Vec<_>, _>>()?;
    let q = 15;
    let iu: BTreeSet<usize> = gens.iter().flat_map(|g| g.u.iter().copied()).collect();
    let is: BTreeSet<usize> = gens.iter().flat_map(|g| g.s.iter().copied()).collect();
    let miss_u: Vec<usize> = (0..q).filter(|i| !iu.contains(i)).collect();
    let miss_s: Vec<usize> = (0..q).filter(|j| !is.contains(j)).collect();
    for k in 0..miss_u.len().max(miss_s.len()) {
        let a_u = miss_u.get(k).copied().unwrap_or(0);
        let a_s = miss_s.get(k).copied().unwrap_or(0);
        gens.push(MonotoneCorr::constant(q, a_s, a_u));
    }
    Morphism::new(gens)
}

/// For eight points `a' < a < b < b' < c' < c < d < d'` in cyclic order, whether
/// `[a', b', c', d'] < [a, b, c, d]`.
#[allow(clippy::too_many_arguments)]
pub fn cross_ratio_decreasing(
    a1: ProjPoint,
    a: ProjPoint,
    b: ProjPoint,
    b1: ProjPoint,
    c1: ProjPoint,
    c: ProjPoint,
    d: ProjPoint,
    d1: ProjPoint,
) -> Result<bool, CorrError> {
    if !in_cyclic_order(&[a1, a, b, b1, c1, c, d, d1]) {
        return Err(CorrError::NotInOrder);
    }
    let outer = cross_ratio(a1, b1, c1, d1).map_err(|_| CorrError::NotInOrder)?;
    let inner = cross_ratio(a, b, c, d).map_err(|_| CorrError::NotInOrder)?;
    Ok(outer < inner)
}
