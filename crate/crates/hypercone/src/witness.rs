//! Constructive witnesses that a tuple is not uniformly hyperbolic or sits on the boundary of a
//! hyperbolic component: elliptic and parabolic periodic products, products equal to `±id`, and
//! heteroclinic connections between periodic orbits.

use crate::sl2core::{classify_with, Mat2, MatClass, Tolerances};
use crate::symdyn::{admissible_words, periodic_dirs, periodic_words, product_unchecked, Sft, Word};
use serde::{Deserialize, Serialize};

/// Search budgets: longest periodic word on each side of a connection and longest connector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub k_max: usize,
    pub ell_max: usize,
    pub n_max: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { k_max: 12, ell_max: 12, n_max: 8 }
    }
}

/// A heteroclinic connection `C·u(V) = s(W)` between the periodic words `v` and `w` through the
/// connector `c`, with the angular residual of the equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heteroclinic {
    pub k_word: Word,
    pub connector_word: Word,
    pub ell_word: Word,
    pub residual: f64,
}

/// Outcome of [`diagnose_boundary`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundaryReport {
    EllipticProduct { word: Word, trace: f64 },
    ParabolicPeriodic { word: Word, trace: f64 },
    HeteroclinicConnection(Heteroclinic),
    IdentityProduct { word: Word, sign: i8 },
    NoneFound { budgets: Budgets, best_heteroclinic: Option<Heteroclinic> },
}

/// A product equal to `±id` or parabolic, found by [`search_parabolic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParabolicHit {
    Parabolic { word: Word, trace: f64 },
    Identity { word: Word, sign: i8 },
}

/// First periodic word, in shortlex order of cyclic classes, whose product has `|tr| < 2 − tol_tr`.
pub fn search_elliptic(tuple: &[Mat2], sft: &Sft, max_len: usize) -> Option<Word> {
    search_elliptic_with(tuple, sft, max_len, &Tolerances::default())
}

pub fn search_elliptic_with(tuple: &[Mat2], sft: &Sft, max_len: usize, tol: &Tolerances) -> Option<Word> {
    periodic_words(sft, max_len).into_iter().find(|w| product_unchecked(tuple, w).tr().abs() < 2.0 - tol.tol_tr)
}

/// First periodic word whose product is `±id` or parabolic.
pub fn search_parabolic(tuple: &[Mat2], sft: &Sft, max_len: usize) -> Option<ParabolicHit> {
    search_parabolic_with(tuple, sft, max_len, &Tolerances::default())
}

pub fn search_parabolic_with(tuple: &[Mat2], sft: &Sft, max_len: usize, tol: &Tolerances) -> Option<ParabolicHit> {
    for w in periodic_words(sft, max_len) {
        let p = product_unchecked(tuple, &w);
        if p.dist(&Mat2::identity()) <= tol.tol_id {
            return Some(ParabolicHit::Identity { word: w, sign: 1 });
        }
        if p.dist(&-Mat2::identity()) <= tol.tol_id {
            return Some(ParabolicHit::Identity { word: w, sign: -1 });
        }
        if (p.tr().abs() - 2.0).abs() <= tol.tol_par {
            return Some(ParabolicHit::Parabolic { trace: p.tr(), word: w });
        }
    }
    None
}

struct Periodic {
    word: Word,
    dir: f64,
}

fn hyperbolic_periodics(tuple: &[Mat2], sft: &Sft, max_len: usize, tol: &Tolerances, unstable: bool) -> Vec<Periodic> {
    periodic_words(sft, max_len)
        .into_iter()
        .filter_map(|w| {
            let p = product_unchecked(tuple, &w);
            if classify_with(&p, tol) != MatClass::Hyperbolic {
                return None;
            }
            let (u, s) = periodic_dirs(tuple, &w).ok()?;
            Some(Periodic { dir: if unstable { u.angle() } else { s.angle() }, word: w })
        })
        .collect()
}

fn cyclic_dist(a: f64, b: f64) -> f64 {
    crate::projgeom::angle_dist(a, b)
}

/// Best heteroclinic connection within the budgets: the triple `(v, c, w)` minimizing the
/// angular distance between `C·u(V)` and `s(W)`, where `V`, `W` are the periodic products and `C`
/// the connector product. Ties within `tol_het` go to the shortest total length, then to shortlex
/// order. Pairs with `v` and `w` on the same periodic orbit are skipped.
pub fn search_heteroclinic(tuple: &[Mat2], sft: &Sft, budgets: Budgets) -> Option<Heteroclinic> {
    search_heteroclinic_with(tuple, sft, budgets, &Tolerances::default())
}

pub fn search_heteroclinic_with(tuple: &[Mat2], sft: &Sft, budgets: Budgets, tol: &Tolerances) -> Option<Heteroclinic> {
    let vs = hyperbolic_periodics(tuple, sft, budgets.k_max, tol, true);
    let ws = hyperbolic_periodics(tuple, sft, budgets.ell_max, tol, false);
    let n = sft.n_symbols();
    // Stable directions bucketed by first symbol and sorted by angle.
    let mut buckets: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n];
    for (k, w) in ws.iter().enumerate() {
        buckets[w.word.symbols()[0]].push((w.dir, k));
    }
    for b in &mut buckets {
        b.sort_by(|x, y| x.0.total_cmp(&y.0));
    }
    let mut connectors = vec![Word::empty()];
    for len in 1..=budgets.n_max {
        connectors.extend(admissible_words(sft, len));
    }
    let mut best: Option<(f64, usize, Heteroclinic)> = None;
    for c in &connectors {
        let cm = product_unchecked(tuple, c);
        for v in &vs {
            let v_last = *v.word.symbols().last().expect("nonempty");
            let last = match c.symbols().first() {
                Some(&f) => {
                    if !sft.allows(v_last, f) {
                        continue;
                    }
                    *c.symbols().last().expect("nonempty")
                }
                None => v_last,
            };
            let img = cm.act(crate::projgeom::ProjPoint::new(v.dir)).angle();
            for (first, bucket) in buckets.iter().enumerate() {
                if bucket.is_empty() || !sft.allows(last, first) {
                    continue;
                }
                let pos = bucket.partition_point(|x| x.0 < img);
                let m = bucket.len();
                for off in 0..m.min(4) {
                    let idx = (pos + 2 * m + off - 2) % m;
                    let (dir, k) = bucket[idx];
                    let w = &ws[k];
                    if w.word == v.word {
                        continue;
                    }
                    let residual = cyclic_dist(img, dir);
                    let total = v.word.len() + c.len() + w.word.len();
                    let cand = Heteroclinic {
                        k_word: v.word.clone(),
                        connector_word: c.clone(),
                        ell_word: w.word.clone(),
                        residual,
                    };
                    let better = match &best {
                        None => true,
                        Some((r, t, h)) => {
                            let both_small = residual <= tol.tol_het && *r <= tol.tol_het;
                            if both_small {
                                (total, &cand.k_word, &cand.connector_word, &cand.ell_word)
                                    < (*t, &h.k_word, &h.connector_word, &h.ell_word)
                            } else {
                                residual < *r
                            }
                        }
                    };
                    if better {
                        best = Some((residual, total, cand));
                    }
                }
            }
        }
    }
    best.map(|b| b.2)
}

/// Run the searches with shared budgets and report the first witness found: a product equal to
/// `±id`, then an elliptic product, then a parabolic product, then a heteroclinic connection
/// within `tol_het`.
pub fn diagnose_boundary(tuple: &[Mat2], sft: &Sft, budgets: Budgets) -> BoundaryReport {
    diagnose_boundary_with(tuple, sft, budgets, &Tolerances::default())
}

pub fn diagnose_boundary_with(tuple: &[Mat2], sft: &Sft, budgets: Budgets, tol: &Tolerances) -> BoundaryReport {
    let len = budgets.k_max.max(budgets.ell_max);
    let para = search_parabolic_with(tuple, sft, len, tol);
    if let Some(ParabolicHit::Identity { word, sign }) = para {
        return BoundaryReport::IdentityProduct { word, sign };
    }
    if let Some(word) = search_elliptic_with(tuple, sft, len, tol) {
        let trace = product_unchecked(tuple, &word).tr();
        return BoundaryReport::EllipticProduct { word, trace };
    }
    if let Some(ParabolicHit::Parabolic { word, trace }) = para {
        return BoundaryReport::ParabolicPeriodic { word, trace };
    }
    let het = search_heteroclinic_with(tuple, sft, budgets, tol);
    match het {
        Some(h) if h.residual <= tol.tol_het => BoundaryReport::HeteroclinicConnection(h),
        other => BoundaryReport::NoneFound { budgets, best_heteroclinic: other },
    }
}

/// Re-verify a boundary report from scratch.
pub fn verify_report(tuple: &[Mat2], report: &BoundaryReport, tol: &Tolerances) -> bool {
    match report {
        BoundaryReport::EllipticProduct { word, .. } => product_unchecked(tuple, word).tr().abs() < 2.0,
        BoundaryReport::ParabolicPeriodic { word, .. } => {
            (product_unchecked(tuple, word).tr().abs() - 2.0).abs() <= tol.tol_par
        }
        BoundaryReport::IdentityProduct { word, sign } => {
            let p = product_unchecked(tuple, word);
            p.dist(&Mat2::identity().scale(*sign as f64)) <= tol.tol_id
        }
        BoundaryReport::HeteroclinicConnection(h) => heteroclinic_residual(tuple, h).is_some_and(|r| r <= tol.tol_het),
        BoundaryReport::NoneFound { .. } => true,
    }
}

/// Angular distance between `C·u(V)` and `s(W)` recomputed from the words.
pub fn heteroclinic_residual(tuple: &[Mat2], h: &Heteroclinic) -> Option<f64> {
    let (u, _) = periodic_dirs(tuple, &h.k_word).ok()?;
    let (_, s) = periodic_dirs(tuple, &h.ell_word).ok()?;
    let img = product_unchecked(tuple, &h.connector_word).act(u);
    Some(cyclic_dist(img.angle(), s.angle()))
}

/// The triple `(A₀, B₀, C₀)` on the boundary of a principal component of the full 3-shift, with
/// `C₀·u(B₀) = s(A₀)`.
pub fn heteroclinic_fixture(lambda: f64, theta: f64, nu: f64) -> [Mat2; 3] {
    let k = theta * (lambda - 1.0 / lambda);
    [
        Mat2::raw(lambda, 0.0, -k, 1.0 / lambda),
        Mat2::raw(lambda, k, 0.0, 1.0 / lambda),
        Mat2::raw(0.0, -1.0, 1.0, nu + 1.0 / nu),
    ]
}

/// Parameter constraints of the fixture: `1 < λ < 1 + √2`,
/// `(λ²+1)/(λ²−1) < θ < 2/(λ−1)` and `ν > θ`.
pub fn fixture_constraints_hold(lambda: f64, theta: f64, nu: f64) -> bool {
    let l2 = lambda * lambda;
    1.0 < lambda && lambda < 1.0 + 2f64.sqrt() && (l2 + 1.0) / (l2 - 1.0) < theta && theta < 2.0 / (lambda - 1.0) && nu > theta
}
