//! Acceptance suite: twelve end-to-end criteria covering the classifier, certification, Farey
//! combinatorics, winding numbers, the correspondence calculus, boundary witnesses and
//! normalization. Each criterion prints one PASS or FAIL line.

use hypercone::corrdyn::{
    classify_two_morphism, compose, induced_morphism, morphism_hyperbolic, morphism_tight, non_realizable_fixture,
    validate, winding_comb, winding_matrix, MonotoneCorr, TwoMorphismClass,
};
use hypercone::fareycomb::{
    build_order, component_model, descent_check, farey_interval, fword_of, rotation_orbit_word, Family, Fraction,
};
use hypercone::multicone::{
    certify, compute_cores, core_criterion, fatten_cores, ClosedArc, MulticoneFamily,
};
use hypercone::projgeom::{ArcP1, MultiCone};
use hypercone::sl2core::{c1_bound, canonical_matrices, invariant_dirs, normalize_tuple, q_to_f64, Mat2Q};
use hypercone::symdyn::{admissible_words, product_unchecked};
use hypercone::twoshift::{
    classify_pair, classify_pair_exact, classify_pair_report, free_orientation, pullback, pullback_exact, Classification2,
    FWord, Orientation, Sign, TraceTriple,
};
use hypercone::witness::{fixture_constraints_hold, heteroclinic_fixture, search_heteroclinic, Budgets};
use hypercone::{Mat2, Sft, Tolerances, Word};
use num::{BigInt, BigRational, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::time::Instant;

/// Per-pair time limit for the free-pair classifier.
const FREE_PAIR_TIME_LIMIT_S: f64 = 1e-3;
/// Relative drift allowed for the trace invariant in floating point.
const J_DRIFT_TOL: f64 = 1e-9;
/// Least margin of the group-hyperbolicity inclusions.
const PINGPONG_MARGIN: f64 = 1e-6;
/// Residual required of the heteroclinic fixture.
const HETERO_RESIDUAL_TOL: f64 = 1e-12;
/// Agreement of the fixture trace with its closed form.
const HETERO_TRACE_TOL: f64 = 1e-9;
/// Relative trace preservation and idempotence drift of normalization.
const NORMALIZE_TOL: f64 = 1e-6;
/// Largest norm of the conjugators hiding a bounded tuple.
const MAX_CONJUGATOR_NORM: f64 = 1e6;

type Outcome = Result<String, String>;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `J M J` with `J = diag(1, −1)`: the mirror image of a pair in the opposite free component.
fn mirror(m: &Mat2) -> Mat2 {
    Mat2::raw(m.a, -m.b, -m.c, m.d)
}

fn mirror_q(m: &Mat2Q) -> Mat2Q {
    Mat2Q::new(m.a.clone(), -m.b.clone(), -m.c.clone(), m.d.clone())
}

/// A canonical free pair with `μ, ν ∈ [1.1, 10]` and `γ = αβ ≤ −4 − μ/ν − ν/μ`, as floats.
fn random_free_pair(rng: &mut ChaCha8Rng) -> (Mat2, Mat2) {
    let mu = rng.gen_range(1.1..10.0);
    let nu = rng.gen_range(1.1..10.0);
    let alpha = rng.gen_range(0.25..4.0);
    let gamma = -4.0 - mu / nu - nu / mu - rng.gen_range(0.0..8.0);
    canonical_matrices(mu, nu, alpha, gamma / alpha)
}

/// The same family with small-denominator rational parameters: `μ, ν` in eighths, `α` in
/// quarters and the slack of `γ` in sixteenths.
fn random_free_pair_exact(rng: &mut ChaCha8Rng) -> (Mat2Q, Mat2Q) {
    let mu = rat(rng.gen_range(9..=80), 8);
    let nu = rat(rng.gen_range(9..=80), 8);
    let alpha = rat(rng.gen_range(1..=16), 4);
    let slack = rat(rng.gen_range(1..=128), 16);
    let gamma = -(rat(4, 1) + &mu / &nu + &nu / &mu) - slack;
    let beta = gamma / &alpha;
    let z = BigRational::zero();
    (Mat2Q::new(mu.clone(), alpha, z.clone(), mu.recip()), Mat2Q::new(nu.recip(), z, beta, nu))
}

fn random_fword(rng: &mut ChaCha8Rng, max_len: usize) -> FWord {
    let n = rng.gen_range(0..=max_len);
    FWord::new((0..n).map(|_| if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus }).collect())
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<(Mat2, Mat2)> = (0..1000).map(|_| random_free_pair(&mut rng)).collect();
    let start = Instant::now();
    let verdicts: Vec<Classification2> = pairs.iter().map(|(a, b)| classify_pair(a, b)).collect();
    let per_pair = start.elapsed().as_secs_f64() / pairs.len() as f64;
    let failures = verdicts
        .iter()
        .filter(|c| !matches!(c, Classification2::NonPrincipal { fword, .. } if fword.is_empty()))
        .count();
    let detail = format!("{failures} failures over 1000 pairs, {:.1} µs per pair", per_pair * 1e6);
    if failures == 0 && per_pair < FREE_PAIR_TIME_LIMIT_S {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    let mut max_ratio = (0usize, 0i64);
    for k in 0..500 {
        let (a0, b0) = random_free_pair_exact(&mut rng);
        let flip = rng.gen_bool(0.5);
        let (a0, b0) = if flip { (mirror_q(&a0), mirror_q(&b0)) } else { (a0, b0) };
        let expected_orientation = free_orientation(&a0.to_f64(), &b0.to_f64()).map_err(|e| e.to_string())?;
        let fw = random_fword(&mut rng, 6);
        let (a, b) = pullback_exact(&fw, &a0, &b0);
        let r = classify_pair_exact(&a, &b);
        let ok_class = matches!(&r.classification,
            Classification2::NonPrincipal { fword, orientation, .. } if *fword == fw && *orientation == expected_orientation);
        let bound = r.iteration_bound.unwrap_or(-1);
        if r.iterations > max_ratio.0 {
            max_ratio = (r.iterations, bound);
        }
        if !ok_class || r.iterations as i64 > bound {
            failures.push(format!("#{k} fword {fw}: {:?}, {} iterations, bound {bound}", r.classification, r.iterations));
        }
    }
    let detail = format!(
        "{} failures over 500 exact pullbacks; longest walk {} steps (bound {})",
        failures.len(),
        max_ratio.0,
        max_ratio.1
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; first: {}", failures[0]))
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let chains = 10_000;
    let steps = 10;
    let mut exact_failures = 0;
    let mut max_drift = 0.0f64;
    for _ in 0..chains {
        let x = rat(rng.gen_range(-40..=40), 8);
        let y = rat(rng.gen_range(-40..=40), 8);
        let z = rat(rng.gen_range(-40..=40), 8);
        let mut tq = TraceTriple::new(x, y, z);
        let mut tf = TraceTriple::new(q_to_f64(&tq.x), q_to_f64(&tq.y), q_to_f64(&tq.z));
        let jq = tq.j();
        let jf = tf.j();
        for _ in 0..steps {
            let s = if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
            tq = tq.apply(s);
            tf = tf.apply(s);
            if tq.j() != jq {
                exact_failures += 1;
            }
            // Drift relative to the size of the terms of x² + y² + z² − xyz.
            let scale = tf.x * tf.x + tf.y * tf.y + tf.z * tf.z + (tf.x * tf.y * tf.z).abs();
            max_drift = max_drift.max((tf.j() - jf).abs() / scale.max(1.0));
        }
    }
    let detail = format!(
        "{} applications: {exact_failures} exact mismatches, float drift {max_drift:.2e}",
        chains * steps
    );
    if exact_failures == 0 && max_drift <= J_DRIFT_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Random multicone family with one to three arcs per symbol.
fn random_family(rng: &mut ChaCha8Rng, n: usize) -> MulticoneFamily {
    let cone = |rng: &mut ChaCha8Rng| loop {
        let k = rng.gen_range(1..=3);
        let mut starts: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..std::f64::consts::PI)).collect();
        starts.sort_by(f64::total_cmp);
        let arcs: Option<Vec<ArcP1>> = (0..k)
            .map(|i| {
                let room = if i + 1 < k { starts[i + 1] - starts[i] } else { std::f64::consts::PI - starts[i] + starts[0] };
                ArcP1::from_start_len(starts[i], rng.gen_range(0.05..0.9) * room).ok()
            })
            .collect();
        if let Some(m) = arcs.and_then(|a| MultiCone::new(a).ok()) {
            return m;
        }
    };
    MulticoneFamily::new((0..n).map(|_| cone(rng)).collect())
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pairs: Vec<(FWord, Mat2, Mat2)> = Vec::new();
    let mut rng1 = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let (a, b) = random_free_pair(&mut rng1);
        pairs.push((FWord::default(), a, b));
    }
    let mut rng2 = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        let (a0, b0) = random_free_pair_exact(&mut rng2);
        let (a0, b0) = if rng2.gen_bool(0.5) { (mirror_q(&a0), mirror_q(&b0)) } else { (a0, b0) };
        let fw = random_fword(&mut rng2, 6);
        let (a, b) = pullback_exact(&fw, &a0, &b0);
        pairs.push((fw, a.to_f64(), b.to_f64()));
    }
    let mut failures = Vec::new();
    let mut by_length = [(0usize, 0usize); 7];
    let mut min_lambda = f64::INFINITY;
    for (k, (fw, a, b)) in pairs.iter().enumerate() {
        by_length[fw.len()].1 += 1;
        let verdict = component_model(fw, a, b).map_err(|e| e.to_string()).and_then(|m| {
            if !core_criterion(&[*a, *b], &m.cores).ok {
                return Err("core criterion fails".to_string());
            }
            let (_, report) = fatten_cores(&[*a, *b], &m.cores).map_err(|e| e.to_string())?;
            if report.ok && report.contraction > 1.0 {
                Ok(report.contraction)
            } else {
                Err(format!("certify fails: {report:?}"))
            }
        });
        match verdict {
            Ok(l) => min_lambda = min_lambda.min(l),
            Err(e) => {
                by_length[fw.len()].0 += 1;
                failures.push(format!("pair #{k} fword {fw}: {e}"));
            }
        }
    }
    // Elliptic-witness pairs never certify.
    let mut elliptic = 0;
    let mut false_certs = 0;
    while elliptic < 50 {
        let mu = rng.gen_range(1.1..10.0);
        let nu = rng.gen_range(1.1..10.0);
        let (a, b) = canonical_matrices(mu, nu, rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        if !matches!(classify_pair(&a, &b), Classification2::EllipticWitness { .. }) {
            continue;
        }
        elliptic += 1;
        for _ in 0..20 {
            let fam = random_family(&mut rng, 2);
            if certify(&[a, b], &Sft::full(2), &fam).map(|r| r.ok).unwrap_or(false) {
                false_certs += 1;
            }
        }
    }
    let breakdown: Vec<String> = by_length.iter().enumerate().map(|(n, (bad, all))| format!("len {n}: {bad}/{all}")).collect();
    let detail = format!(
        "{} of {} component models fail ({}), least contraction {min_lambda:.4}; {false_certs} of {} random families certify an elliptic pair",
        failures.len(),
        pairs.len(),
        breakdown.join(", "),
        elliptic * 20
    );
    if failures.is_empty() && false_certs == 0 {
        Ok(detail)
    } else {
        Err(format!("{detail}; first: {}", failures.first().cloned().unwrap_or_default()))
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sft = Sft::full(2);
    let words: Vec<Word> = (1..=12).flat_map(|n| admissible_words(&sft, n)).collect();
    let mut violations = 0;
    let mut tuples = 0;
    let mut worst = f64::INFINITY;
    while tuples < 200 {
        let (a0, b0) = random_free_pair(&mut rng);
        let fw = random_fword(&mut rng, 3);
        let (a, b) = pullback(&fw, &a0, &b0);
        let Ok(m) = component_model(&fw, &a, &b) else { continue };
        let Ok((_, report)) = fatten_cores(&[a, b], &m.cores) else { continue };
        if !report.ok {
            continue;
        }
        tuples += 1;
        for w in &words {
            let norm = product_unchecked(&[a, b], w).norm();
            let bound = report.growth_bound(w.len());
            worst = worst.min(norm / bound);
            if norm < bound * (1.0 - 1e-12) {
                violations += 1;
            }
        }
    }
    let detail = format!("{violations} violations over {tuples} certified tuples and {} words each; least ratio {worst:.3}", words.len());
    if violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Signed angle from `center` to `x`, in `(−π/2, π/2]`.
fn offset_from(center: f64, x: f64) -> f64 {
    let d = hypercone::projgeom::fwd(center, x);
    if d > std::f64::consts::FRAC_PI_2 {
        d - std::f64::consts::PI
    } else {
        d
    }
}

fn criterion_6() -> Outcome {
    let (a, b) = canonical_matrices(2.0, 2.0, 1.0, -9.0);
    let tuple = [a, b, a.inv(), b.inv()];
    let sft = Sft::free_group_2();
    // Interval k sits around the attracting direction of generator k: u_A, u_B, s_A, s_B.
    let centers: Vec<f64> =
        tuple.iter().map(|m| invariant_dirs(m).map(|(u, _)| u.angle())).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let mut bounds = [(-0.01, 0.01); 4];
    // Grow each interval until it holds the images of every interval allowed to precede it.
    let mut converged = false;
    for _ in 0..500 {
        let mut next = bounds;
        for to in 0..4 {
            for from in (0..4).filter(|&f| sft.allows(f, to)) {
                let (lo, hi) = bounds[from];
                let img = ClosedArc::new(centers[from] + lo, hi - lo).image(&tuple[to]);
                let s = offset_from(centers[to], img.start);
                next[to].0 = next[to].0.min(s);
                next[to].1 = next[to].1.max(s + img.len);
            }
        }
        if next.iter().any(|(lo, hi)| hi - lo > std::f64::consts::FRAC_PI_2) {
            return Err("interval iteration does not close up".into());
        }
        let change = next.iter().zip(&bounds).map(|(x, y)| (x.0 - y.0).abs().max((x.1 - y.1).abs())).fold(0.0, f64::max);
        bounds = next;
        if change < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err("interval iteration did not converge".into());
    }
    let delta = 1e-3;
    let cones: Vec<MultiCone> = (0..4)
        .map(|k| {
            let (lo, hi) = bounds[k];
            ArcP1::from_start_len(centers[k] + lo - delta, hi - lo + 2.0 * delta).and_then(|i| MultiCone::new(vec![i]))
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let lengths: Vec<String> = bounds.iter().map(|(lo, hi)| format!("{:.4}", hi - lo + 2.0 * delta)).collect();
    let report = certify(&tuple, &sft, &MulticoneFamily::new(cones)).map_err(|e| e.to_string())?;
    let detail = format!(
        "intervals of lengths {lengths:?}: certified {}, margin {:.3e}, contraction {:.4}",
        report.ok, report.margin, report.contraction
    );
    if report.ok && report.margin > PINGPONG_MARGIN {
        Ok(detail)
    } else {
        Err(format!("{detail}; {:?}", report.witness))
    }
}

fn criterion_7() -> Outcome {
    let fractions = Fraction::interior_up_to(12);
    let mut problems = Vec::new();
    for &f in &fractions {
        let (f0, f1) = farey_interval(f).map_err(|e| e.to_string())?;
        let det = f1.p as i64 * f0.q as i64 - f0.p as i64 * f1.q as i64;
        if det != 1 || f0.p + f1.p != f.p || f0.q + f1.q != f.q {
            problems.push(format!("parents of {f}: {f0}, {f1}"));
        }
        if fword_of(f).map(|w| w.j_fraction()) != Ok((f.p, f.q)) {
            problems.push(format!("fword of {f}"));
        }
        if let Err(e) = descent_check(f) {
            problems.push(format!("descent {f}: {e}"));
        }
        let order = build_order(f).map_err(|e| e.to_string())?;
        let alternates = order.elements.iter().enumerate().all(|(i, e)| (e.family == Family::Main) == (i % 2 == 0));
        if !alternates || order.elements.len() as u64 != 2 * f.q {
            problems.push(format!("order of {f} does not alternate"));
        }
    }
    let f25 = Fraction::new(2, 5).map_err(|e| e.to_string())?;
    let order = build_order(f25).map_err(|e| e.to_string())?;
    let figure = ["BABAA", "BA", "ABABA", "AB", "AABAB", "AAB", "ABAAB", "ABA", "BAABA", "BAA"];
    if order.clockwise_from_last() != figure {
        problems.push(format!("2/5 order {:?}", order.clockwise_from_last()));
    }
    let theta0 = rotation_orbit_word(f25, 0).map_err(|e| e.to_string())?.letters;
    if theta0 != "AABAB" {
        problems.push(format!("Θ(0) = {theta0}"));
    }
    if fractions.len() != 45 {
        problems.push(format!("{} interior fractions with q ≤ 12", fractions.len()));
    }
    let detail = format!("{} fractions with q ≤ 12, 2/5 order and Θ(0) = {theta0}", fractions.len());
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; problems: {problems:?}"))
    }
}

/// Words of length `1..=n` whose cyclic class consists of `m` blocks `A^a B^b`.
fn block_count(w: &Word) -> Option<usize> {
    let s = w.symbols();
    if !s.contains(&0) || !s.contains(&1) {
        return None;
    }
    Some((0..s.len()).filter(|&i| s[i] == 0 && s[(i + 1) % s.len()] == 1).count())
}

fn criterion_8() -> Outcome {
    let (a, b) = canonical_matrices(2.0, 2.0, 1.0, -9.0);
    let fw: FWord = "+-".parse().map_err(|e: hypercone::twoshift::TwoShiftError| e.to_string())?;
    let (pa, pb) = pullback(&fw, &a, &b);
    let fixtures = [("free", FWord::default(), [a, b]), ("2/5", fw, [pa, pb])];
    let words: Vec<Word> = (1..=8).flat_map(|n| admissible_words(&Sft::full(2), n)).collect();
    let mut mismatches = Vec::new();
    let mut block_failures = 0;
    let mut sign_failures = 0;
    let mut checked = 0;
    for (name, fword, tuple) in &fixtures {
        let model = component_model(fword, &tuple[0], &tuple[1]).map_err(|e| e.to_string())?;
        let phi = induced_morphism(tuple, &model.cores).map_err(|e| e.to_string())?;
        for w in &words {
            let nc = winding_comb(&phi, w).map_err(|e| e.to_string())?;
            let nm = winding_matrix(tuple, w).map_err(|e| e.to_string())?;
            checked += 1;
            if nc != nm {
                mismatches.push(format!("{name} {w}: comb {nc}, matrix {nm}"));
            }
            let tr = product_unchecked(tuple, w).tr();
            if tr.signum() != if nm % 2 == 0 { 1.0 } else { -1.0 } {
                sign_failures += 1;
            }
            if *name == "free" {
                if let Some(m) = block_count(w) {
                    if nm != -(m as i64) {
                        block_failures += 1;
                    }
                }
            }
        }
    }
    let detail = format!(
        "{checked} words: {} comb/matrix mismatches, {block_failures} block-word failures, {sign_failures} trace-sign failures",
        mismatches.len()
    );
    if mismatches.is_empty() && block_failures == 0 && sign_failures == 0 {
        Ok(detail)
    } else {
        Err(format!("{detail}; first: {}", mismatches.first().cloned().unwrap_or_default()))
    }
}

/// Every valid correspondence of rank `q`.
fn all_correspondences(q: usize) -> Vec<MonotoneCorr> {
    let maps: Vec<Vec<usize>> = (0..q.pow(q as u32))
        .map(|mut k| {
            (0..q)
                .map(|_| {
                    let d = k % q;
                    k /= q;
                    d
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for s in &maps {
        for u in &maps {
            if let Ok(c) = validate(s.clone(), u.clone()) {
                out.push(c);
            }
        }
    }
    out
}

fn criterion_9() -> Outcome {
    let mut rejections = 0;
    let mut compositions = 0usize;
    let mut counts = Vec::new();
    for q in 1..=4 {
        let all = all_correspondences(q);
        counts.push(all.len());
        for c in &all {
            for c2 in &all {
                let k = compose(c, c2);
                compositions += 1;
                if validate(k.s_map().to_vec(), k.u_map().to_vec()).is_err() {
                    rejections += 1;
                }
            }
        }
    }
    let phi = non_realizable_fixture().map_err(|e| e.to_string())?;
    let tight = morphism_tight(&phi);
    let h = morphism_hyperbolic(&phi).map_err(|e| e.to_string())?;
    let detail = format!(
        "valid correspondences per rank {counts:?}, {compositions} compositions, {rejections} rejections; rank-15 fixture tight {tight}, hyperbolic {}, ℓ = {:?}",
        h.hyperbolic, h.ell
    );
    if rejections == 0 && tight && h.hyperbolic && h.ell.is_some_and(|l| l <= 4) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// A rational free pair near the boundary of the free locus, whose pullbacks stay small enough
/// for floating-point cores.
fn mild_free_pair_exact(rng: &mut ChaCha8Rng) -> (Mat2Q, Mat2Q) {
    let mu = rat(rng.gen_range(9..=16), 8);
    let nu = rat(rng.gen_range(9..=16), 8);
    let alpha = rat(rng.gen_range(2..=8), 4);
    let slack = rat(rng.gen_range(1..=16), 16);
    let gamma = -(rat(4, 1) + &mu / &nu + &nu / &mu) - slack;
    let beta = gamma / &alpha;
    let z = BigRational::zero();
    (Mat2Q::new(mu.clone(), alpha, z.clone(), mu.recip()), Mat2Q::new(nu.recip(), z, beta, nu))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let fractions = Fraction::interior_up_to(8);
    let mut failures = Vec::new();
    let mut per_orientation = [0usize; 2];
    for k in 0..100 {
        let f = fractions[k % fractions.len()];
        let fw = fword_of(f).map_err(|e| e.to_string())?;
        let (a0, b0) = mild_free_pair_exact(&mut rng);
        let (a0, b0) = if k % 2 == 1 { (mirror_q(&a0), mirror_q(&b0)) } else { (a0, b0) };
        let (aq, bq) = pullback_exact(&fw, &a0, &b0);
        let (expected_fw, expected_or) = match classify_pair_exact(&aq, &bq).classification {
            Classification2::NonPrincipal { fword, orientation, .. } => (fword, orientation),
            other => {
                failures.push(format!("{f}: classify_pair gave {other:?}"));
                continue;
            }
        };
        let (p, q) = expected_fw.j_fraction();
        let (a, b) = (aq.to_f64(), bq.to_f64());
        let result = compute_cores(&[a, b], &Sft::full(2), 60)
            .map_err(|e| e.to_string())
            .and_then(|c| induced_morphism(&[a, b], &c).map_err(|e| e.to_string()))
            .and_then(|phi| classify_two_morphism(&phi).map_err(|e| e.to_string()));
        match result {
            Ok(TwoMorphismClass::Component { fraction, orientation })
                if (fraction.p, fraction.q) == (p, q) && orientation == expected_or =>
            {
                per_orientation[k % 2] += 1;
            }
            other => failures.push(format!("{f} ({expected_or:?}): {other:?}")),
        }
    }
    let detail = format!(
        "{} of 100 pairs over the {} components with q ≤ 8 disagree ({} positive, {} negative agree)",
        failures.len(),
        fractions.len(),
        per_orientation[0],
        per_orientation[1]
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; first: {}", failures[0]))
    }
}

fn criterion_11() -> Outcome {
    let (lambda, theta, nu) = (2.0, 1.8, 3.0);
    let t = heteroclinic_fixture(lambda, theta, nu);
    let constraints = fixture_constraints_hold(lambda, theta, nu);
    let lower = (lambda * lambda + 1.0) / (lambda * lambda - 1.0);
    let upper = 2.0 / (lambda - 1.0);
    let tr_ab = (t[0] * t[1]).tr();
    let expected = 4.0 - 3.24 * 2.25 + 0.25;
    let h = search_heteroclinic(&t, &Sft::full(3), Budgets { k_max: 1, ell_max: 1, n_max: 1 });
    let words = h.as_ref().map(|h| (h.k_word.to_string(), h.connector_word.to_string(), h.ell_word.to_string()));
    let residual = h.as_ref().map_or(f64::INFINITY, |h| h.residual);
    let detail = format!(
        "witness {words:?}, residual {residual:.1e}; {lower:.4} < θ = {theta} < {upper:.4}; tr A₀B₀ = {tr_ab:.12}"
    );
    let ok = residual <= HETERO_RESIDUAL_TOL
        && words == Some(("B".into(), "C".into(), "A".into()))
        && constraints
        && lower < theta
        && theta < upper
        && (tr_ab - expected).abs() <= HETERO_TRACE_TOL
        && tr_ab < -2.0;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// A unimodular matrix with dyadic entries: `a = ±2^e`, `b, c` in eighths, `d = (1 + bc)/a`.
fn dyadic_matrix(rng: &mut ChaCha8Rng) -> Mat2 {
    let a = if rng.gen_bool(0.5) { 1.0 } else { -1.0 } * 2f64.powi(rng.gen_range(-1..=1));
    let b = rng.gen_range(-16..=16) as f64 / 8.0;
    let c = rng.gen_range(-16..=16) as f64 / 8.0;
    Mat2::raw(a, b, c, (1.0 + b * c) / a)
}

fn word_traces(t: &[Mat2Q]) -> Vec<BigRational> {
    let n = t.len();
    let mut out = Vec::new();
    for len in 1..=3u32 {
        for k in 0..n.pow(len) {
            let mut m = Mat2Q::identity();
            let mut k = k;
            for _ in 0..len {
                m = t[k % n].mul(&m);
                k /= n;
            }
            out.push(m.tr());
        }
    }
    out
}

fn criterion_12() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let c = 10.0;
    let c1 = c1_bound(c);
    let mut failures = Vec::new();
    let mut worst_trace = 0.0f64;
    let mut worst_idem = 0.0f64;
    let mut max_input = 0.0f64;
    let mut done = 0;
    while done < 500 {
        let n = rng.gen_range(2..=3);
        let tuple: Vec<Mat2> = (0..n).map(|_| dyadic_matrix(&mut rng)).collect();
        let exact: Vec<Mat2Q> = tuple.iter().map(Mat2Q::from_f64).collect();
        let bounded = (0..n).all(|i| {
            exact[i].tr().abs() <= rat(9, 1) && (0..n).all(|j| exact[i].mul(&exact[j]).tr().abs() <= rat(9, 1))
        });
        if !bounded {
            continue;
        }
        done += 1;
        // Conjugator D·S with an integer shear product S and a dyadic diagonal D, so every
        // conjugated entry stays exact in binary floating point.
        let p = loop {
            let s1 = Mat2::raw(1.0, rng.gen_range(-20..=20) as f64, 0.0, 1.0);
            let s2 = Mat2::raw(1.0, 0.0, rng.gen_range(-20..=20) as f64, 1.0);
            let d = Mat2::diag(2f64.powi(rng.gen_range(0..=19)));
            let p = d * s1 * s2;
            if p.norm() <= MAX_CONJUGATOR_NORM {
                break p;
            }
        };
        let conj: Vec<Mat2> = tuple.iter().map(|m| m.conj(&p)).collect();
        max_input = max_input.max(p.norm());
        let conj_exact: Vec<Mat2Q> = conj.iter().map(Mat2Q::from_f64).collect();
        if conj_exact.iter().any(|m| !m.is_unimodular()) {
            failures.push("conjugated tuple lost exactness".to_string());
            continue;
        }
        let out = match normalize_tuple(&conj, c) {
            Ok(o) => o,
            Err(e) => {
                failures.push(e.to_string());
                continue;
            }
        };
        if out.normalized.iter().any(|m| m.max_abs() > c1) {
            failures.push(format!("entry above C1 = {c1}"));
        }
        let before = word_traces(&conj_exact);
        let after = word_traces(&out.normalized.iter().map(Mat2Q::from_f64).collect::<Vec<_>>());
        for (x, y) in before.iter().zip(&after) {
            let (x, y) = (q_to_f64(x), q_to_f64(y));
            worst_trace = worst_trace.max((x - y).abs() / x.abs().max(1.0));
        }
        match normalize_tuple(&out.normalized, c) {
            Ok(again) => {
                for (x, y) in again.normalized.iter().zip(&out.normalized) {
                    worst_idem = worst_idem.max(x.dist(y));
                }
            }
            Err(e) => failures.push(format!("renormalization: {e}")),
        }
    }
    let detail = format!(
        "500 tuples, conjugator norms up to {max_input:.2e}: {} failures, trace drift {worst_trace:.1e}, idempotence drift {worst_idem:.1e}, C1 = {c1:.1}",
        failures.len()
    );
    if failures.is_empty() && worst_trace <= NORMALIZE_TOL && worst_idem <= NORMALIZE_TOL {
        Ok(detail)
    } else {
        Err(format!("{detail}; first: {}", failures.first().cloned().unwrap_or_default()))
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("free detection", criterion_1),
        ("pullback recovery", criterion_2),
        ("trace invariant", criterion_3),
        ("certification and classification", criterion_4),
        ("growth bound", criterion_5),
        ("group hyperbolicity", criterion_6),
        ("Farey combinatorics", criterion_7),
        ("winding cross-check", criterion_8),
        ("correspondence calculus", criterion_9),
        ("two-generator realizability", criterion_10),
        ("heteroclinic fixture", criterion_11),
        ("normalization", criterion_12),
    ];
    let mut failed = Vec::new();
    // Written straight to the process stdout so the lines appear without --nocapture.
    let mut out = std::io::stdout();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        let line = match &result {
            Ok(d) => format!("criterion {:>2} PASS [{name}] {d} ({secs:.1}s)\n", i + 1),
            Err(d) => format!("criterion {:>2} FAIL [{name}] {d} ({secs:.1}s)\n", i + 1),
        };
        out.write_all(line.as_bytes()).unwrap();
        out.flush().unwrap();
        if result.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn orientation_of_mirrored_free_pair_is_negative() {
    let (a, b) = canonical_matrices(2.0, 2.0, 1.0, -9.0);
    assert_eq!(free_orientation(&a, &b).unwrap(), Orientation::Positive);
    assert_eq!(free_orientation(&mirror(&a), &mirror(&b)).unwrap(), Orientation::Negative);
    let r = classify_pair_report(&a, &b, &Tolerances::default());
    assert_eq!(r.iterations, 0);
}
