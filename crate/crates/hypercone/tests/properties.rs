//! Property tests for invariants that hold across the library.

use hypercone::corrdyn::{compose, validate, winding_matrix, MonotoneCorr};
use hypercone::fareycomb::{component_model, fword_of, Fraction};
use hypercone::multicone::fatten_cores;
use hypercone::projgeom::{cross_ratio, cyclic_between, ProjPoint};
use hypercone::sl2core::{canonical_matrices, normalize_tuple};
use hypercone::symdyn::periodic_words;
use hypercone::twoshift::{classify_pair, pullback, Classification2, FWord, Sign, TraceTriple};
use hypercone::witness::{heteroclinic_fixture, search_elliptic, search_heteroclinic, search_parabolic, Budgets};
use hypercone::{Mat2, Sft, Word};
use num::{BigInt, BigRational};
use proptest::prelude::*;

fn sl2() -> impl Strategy<Value = Mat2> {
    (0.3f64..3.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b, c)| Mat2::raw(a, b, c, (1.0 + b * c) / a))
}

fn free_pair() -> impl Strategy<Value = (Mat2, Mat2)> {
    (1.1f64..10.0, 1.1f64..10.0, 0.25f64..4.0, 0.0f64..8.0).prop_map(|(mu, nu, alpha, slack)| {
        let gamma = -4.0 - mu / nu - nu / mu - slack;
        canonical_matrices(mu, nu, alpha, gamma / alpha)
    })
}

fn signs(max: usize) -> impl Strategy<Value = Vec<Sign>> {
    prop::collection::vec(prop_oneof![Just(Sign::Plus), Just(Sign::Minus)], 0..=max)
}

fn rat(n: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(4))
}

/// Every valid correspondence of rank `q`.
fn correspondences(q: usize) -> Vec<MonotoneCorr> {
    let maps: Vec<Vec<usize>> = (0..q.pow(q as u32))
        .map(|k| (0..q).map(|i| k / q.pow(i as u32) % q).collect())
        .collect();
    maps.iter().flat_map(|s| maps.iter().filter_map(move |u| validate(s.clone(), u.clone()).ok())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cross_ratio_is_projectively_invariant(m in sl2(), base in 0.0f64..3.1, gaps in prop::array::uniform3(0.1f64..0.9)) {
        let pts: Vec<ProjPoint> = [0.0, gaps[0], gaps[0] + gaps[1], gaps[0] + gaps[1] + gaps[2]]
            .iter()
            .map(|t| ProjPoint::new(base + t))
            .collect();
        let before = cross_ratio(pts[0], pts[1], pts[2], pts[3]).unwrap();
        let img: Vec<ProjPoint> = pts.iter().map(|&p| m.act(p)).collect();
        let after = cross_ratio(img[0], img[1], img[2], img[3]).unwrap();
        prop_assert!((before - after).abs() <= 1e-7 * before.abs().max(1.0));
    }

    #[test]
    fn cyclic_order_has_exactly_one_orientation(a in 0.0f64..3.14, b in 0.0f64..3.14, c in 0.0f64..3.14) {
        let (pa, pb, pc) = (ProjPoint::new(a), ProjPoint::new(b), ProjPoint::new(c));
        prop_assume!((a - b).abs() > 1e-6 && (b - c).abs() > 1e-6 && (a - c).abs() > 1e-6);
        let x = cyclic_between(pa, pb, pc).unwrap();
        let y = cyclic_between(pc, pb, pa).unwrap();
        prop_assert!(x ^ y);
    }

    #[test]
    fn trace_invariant_is_exact(x in -40i64..40, y in -40i64..40, z in -40i64..40, ss in signs(12)) {
        let t0 = TraceTriple::new(rat(x), rat(y), rat(z));
        let t = ss.iter().fold(t0.clone(), |t, &s| t.apply(s));
        prop_assert_eq!(t.j(), t0.j());
    }

    #[test]
    fn pullback_is_recovered((a, b) in free_pair(), ss in signs(2)) {
        let fw = FWord::new(ss);
        let (pa, pb) = pullback(&fw, &a, &b);
        match classify_pair(&pa, &pb) {
            Classification2::NonPrincipal { fword, .. } => prop_assert_eq!(fword, fw),
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn winding_is_invariant_under_rotation(symbols in prop::collection::vec(0usize..2, 1..8), k in 0usize..8) {
        let (a, b) = canonical_matrices(2.0, 2.0, 1.0, -9.0);
        let w = Word::new(symbols);
        let r = w.rotate(k % w.len());
        prop_assert_eq!(winding_matrix(&[a, b], &w).unwrap(), winding_matrix(&[a, b], &r).unwrap());
    }

    #[test]
    fn normalization_preserves_traces(m1 in sl2(), m2 in sl2(), shear in -50.0f64..50.0, scale in 0.0f64..10.0) {
        let p = Mat2::diag(2f64.powf(scale)) * Mat2::raw(1.0, shear, 0.0, 1.0);
        prop_assume!(m1.tr().abs() <= 10.0 && m2.tr().abs() <= 10.0 && (m1 * m2).tr().abs() <= 10.0);
        let tuple = [m1.conj(&p), m2.conj(&p)];
        let out = normalize_tuple(&tuple, 10.0).unwrap();
        let n = &out.normalized;
        for (x, y) in [(m1.tr(), n[0].tr()), (m2.tr(), n[1].tr()), ((m1 * m2).tr(), (n[0] * n[1]).tr())] {
            prop_assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{} vs {}", x, y);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn certified_pairs_have_no_elliptic_or_parabolic_word((a, b) in free_pair(), ss in signs(2)) {
        let fw = FWord::new(ss);
        let (pa, pb) = pullback(&fw, &a, &b);
        let model = component_model(&fw, &pa, &pb).unwrap();
        let (_, report) = fatten_cores(&[pa, pb], &model.cores).unwrap();
        prop_assert!(report.ok);
        let sft = Sft::full(2);
        prop_assert!(search_elliptic(&[pa, pb], &sft, 8).is_none());
        prop_assert!(search_parabolic(&[pa, pb], &sft, 8).is_none());
    }

    #[test]
    fn compose_preserves_validity(i in 0usize..10_000, j in 0usize..10_000, q in 1usize..=4) {
        let all = correspondences(q);
        let (c, c2) = (&all[i % all.len()], &all[j % all.len()]);
        let k = compose(c, c2);
        prop_assert!(validate(k.s_map().to_vec(), k.u_map().to_vec()).is_ok());
    }

    #[test]
    fn fword_of_round_trips(q in 2u64..40, p in 1u64..40) {
        prop_assume!(p < q);
        if let Ok(f) = Fraction::new(p, q) {
            prop_assert_eq!(fword_of(f).unwrap().j_fraction(), (p, q));
        }
    }

    #[test]
    fn heteroclinic_residual_grows_off_the_fixture(t in 1e-6f64..1e-2) {
        let fixture = heteroclinic_fixture(2.0, 1.8, 3.0);
        let budgets = Budgets { k_max: 1, ell_max: 1, n_max: 1 };
        let exact = search_heteroclinic(&fixture, &Sft::full(3), budgets).unwrap().residual;
        let rot = Mat2::raw(t.cos(), -t.sin(), t.sin(), t.cos());
        let moved = [fixture[0], fixture[1], rot * fixture[2]];
        let best = search_heteroclinic(&moved, &Sft::full(3), budgets).unwrap().residual;
        prop_assert!(exact <= 1e-12);
        prop_assert!(best > exact && best <= 10.0 * t, "t = {}, residual {}", t, best);
    }
}

#[test]
fn periodic_words_are_lyndon_representatives() {
    for sft in [Sft::full(2), Sft::full(3), Sft::free_group_2()] {
        let words = periodic_words(&sft, 6);
        for w in &words {
            assert!(w.is_primitive(), "{w} is a power");
            assert_eq!(w.min_rotation(), *w, "{w} is not its least rotation");
        }
        let mut sorted = words.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), words.len());
    }
}
