//! Thin adapters from parsed inputs to the library operations, each returning a JSON payload and
//! an exit code.

use crate::output::{exit, CliError};
use crate::spec::{Mode, TupleSpec};
use hypercone::corrdyn::{induced_morphism, winding_comb, winding_matrix, CorrError};
use hypercone::fareycomb::{
    build_order, component_model, farey_interval, fword_of, orbit_words, special_words, FareyError, Fraction,
};
use hypercone::multicone::{
    certify, compute_cores, compute_sft_cores, core_criterion, fatten_cores, ClosedArc, ConeError, CoreSet,
    MulticoneFamily,
};
use hypercone::sl2core::{normalize_tuple, MatError, Tolerances};
use hypercone::symdyn::product_unchecked;
use hypercone::twoshift::{classify_pair_exact, classify_pair_report, Classification2, FWord, PairReport};
use hypercone::witness::{diagnose_boundary_with, BoundaryReport, Budgets, Heteroclinic};
use hypercone::{MultiCone, Word};
use serde_json::{json, Value};

pub type Outcome = Result<(Value, i32), CliError>;

fn ok(v: Value) -> Outcome {
    Ok((v, exit::OK))
}

pub fn cone_error(e: ConeError) -> CliError {
    match e {
        ConeError::SearchBudgetExceeded(_) => CliError::budget(e.to_string()),
        ConeError::NoConvergence(_) | ConeError::NotCertified(_) => CliError::degenerate(e.to_string()),
        _ => CliError::input(e.to_string()),
    }
}

fn corr_error(e: CorrError) -> CliError {
    match e {
        CorrError::ClosureBudgetExceeded(_) => CliError::budget(e.to_string()),
        CorrError::BadTable(_) => CliError::input(e.to_string()),
        _ => CliError::degenerate(e.to_string()),
    }
}

fn farey_error(e: FareyError) -> CliError {
    match e {
        FareyError::BadFraction(_) | FareyError::NotInterior(_) | FareyError::BadBasePoint(..) => CliError::input(e.to_string()),
        _ => CliError::degenerate(e.to_string()),
    }
}

fn mat_error(e: MatError) -> CliError {
    CliError::input(e.to_string())
}

fn arcs_json(arcs: &[ClosedArc]) -> Value {
    Value::Array(arcs.iter().map(|a| json!([a.start, a.end()])).collect())
}

fn cores_json(c: &CoreSet) -> Value {
    json!({ "u": arcs_json(&c.u), "s": arcs_json(&c.s), "uncertainty": c.uncertainty, "rank": c.rank() })
}

fn pair_of(spec: &TupleSpec) -> Result<(), CliError> {
    if spec.matrices.len() != 2 || !spec.full_shift {
        return Err(CliError::input("this command needs a pair over the full 2-shift"));
    }
    Ok(())
}

/// Serialize a pair report in the flat layout used by `classify2`.
pub fn pair_report_json(r: &PairReport) -> (Value, i32) {
    let mut v = json!({
        "variant": Value::Null,
        "sign_pair": Value::Null,
        "fword": Value::Null,
        "fraction": Value::Null,
        "orientation": Value::Null,
        "witness": Value::Null,
        "reason": Value::Null,
        "iterations": r.iterations,
        "iteration_bound": r.iteration_bound,
        "j_invariant": r.j_invariant,
    });
    let mut code = exit::OK;
    match &r.classification {
        Classification2::Principal { sign_pair } => {
            v["variant"] = json!("principal");
            v["sign_pair"] = json!([sign_pair.0, sign_pair.1]);
        }
        Classification2::NonPrincipal { fword, sign_pair, orientation } => {
            let (p, q) = fword.j_fraction();
            v["variant"] = json!("non_principal");
            v["sign_pair"] = json!([sign_pair.0, sign_pair.1]);
            v["fword"] = json!(fword.to_string());
            v["fraction"] = json!(format!("{p}/{q}"));
            v["orientation"] = json!(format!("{orientation:?}").to_lowercase());
        }
        Classification2::EllipticWitness { word } => {
            v["variant"] = json!("elliptic");
            v["witness"] = json!(word);
        }
        Classification2::Degenerate { reason } => {
            v["variant"] = json!("degenerate");
            v["reason"] = json!(reason);
            code = exit::DEGENERATE;
        }
    }
    (v, code)
}

pub fn classify2(spec: &TupleSpec, tol: &Tolerances) -> Outcome {
    pair_of(spec)?;
    let r = match spec.mode {
        Mode::Float => classify_pair_report(&spec.matrices[0], &spec.matrices[1], tol),
        Mode::Rational => classify_pair_exact(&spec.exact[0], &spec.exact[1]),
    };
    let (mut v, code) = pair_report_json(&r);
    v["mode"] = json!(spec.mode);
    Ok((v, code))
}

/// Read a multicone file: `{"arcs": [[start, end], …]}` for one multicone shared by all symbols,
/// or `{"cones": [[[start, end], …], …]}` with one multicone per symbol.
pub fn read_multicone_family(path: &std::path::Path, n: usize) -> Result<MulticoneFamily, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let parse = |x: &Value| -> Result<MultiCone, CliError> {
        let pairs: Vec<[f64; 2]> =
            serde_json::from_value(x.clone()).map_err(|e| CliError::input(format!("bad arc list: {e}")))?;
        MultiCone::from_angle_pairs(&pairs).map_err(|e| CliError::input(e.to_string()))
    };
    if let Some(a) = v.get("arcs") {
        Ok(MulticoneFamily::uniform(parse(a)?, n))
    } else if let Some(Value::Array(cs)) = v.get("cones") {
        if cs.len() != n {
            return Err(CliError::input(format!("{} multicones for {n} symbols", cs.len())));
        }
        Ok(MulticoneFamily::new(cs.iter().map(parse).collect::<Result<_, _>>()?))
    } else {
        Err(CliError::input("multicone file needs \"arcs\" or \"cones\""))
    }
}

pub fn certify_cmd(spec: &TupleSpec, multicone: Option<&std::path::Path>, depth: usize) -> Outcome {
    let (family, source) = match multicone {
        Some(path) => (read_multicone_family(path, spec.matrices.len())?, "file"),
        None => {
            if !spec.full_shift {
                return Err(CliError::input("certification over a proper subshift needs --multicone"));
            }
            let cores = compute_cores(&spec.matrices, &spec.sft, depth).map_err(cone_error)?;
            let (m, _) = fatten_cores(&spec.matrices, &cores).map_err(cone_error)?;
            (MulticoneFamily::uniform(m, spec.matrices.len()), "fattened cores")
        }
    };
    let report = certify(&spec.matrices, &spec.sft, &family).map_err(cone_error)?;
    let cones: Vec<Value> = family.cones.iter().map(|m| json!(m.to_angle_pairs())).collect();
    ok(json!({
        "certified": report.ok,
        "contraction": report.contraction,
        "growth_constant": report.growth_constant,
        "margin": report.margin,
        "violation": report.witness,
        "source": source,
        "multicones": cones,
    }))
}

pub fn cores_cmd(spec: &TupleSpec, depth: usize, tol: &Tolerances) -> Outcome {
    if spec.full_shift {
        let cores = compute_cores(&spec.matrices, &spec.sft, depth).map_err(cone_error)?;
        let check = hypercone::multicone::core_criterion_with(&spec.matrices, &cores, tol);
        ok(json!({ "shift": "full", "cores": [cores_json(&cores)], "core_criterion": check }))
    } else {
        let cores = compute_sft_cores(&spec.matrices, &spec.sft, depth).map_err(cone_error)?;
        ok(json!({ "shift": "sft", "cores": cores.iter().map(cores_json).collect::<Vec<_>>() }))
    }
}

/// Parse `--fword` or `--pq` into an F-word.
pub fn fword_arg(fword: Option<&str>, pq: Option<&str>) -> Result<FWord, CliError> {
    match (fword, pq) {
        (Some(s), _) => s.parse::<FWord>().map_err(|e| CliError::input(e.to_string())),
        (None, Some(pq)) => {
            let f: Fraction = pq.parse().map_err(|e: FareyError| CliError::input(e.to_string()))?;
            fword_of(f).map_err(farey_error)
        }
        (None, None) => Err(CliError::input("give --fword or --pq")),
    }
}

pub fn describe(fw: &FWord, spec: Option<&TupleSpec>) -> Outcome {
    let (p, q) = fw.j_fraction();
    let f = Fraction::new(p, q).map_err(farey_error)?;
    let (fa, fb) = fw.image_of_letters();
    let order = build_order(f).map_err(farey_error)?;
    let mut v = json!({
        "fword": fw.to_string(),
        "fraction": f.to_string(),
        "image_a": fa,
        "image_b": fb,
        "image_ab": fw.image_of_ab(),
        "orbit_words": orbit_words(f),
        "order": order.words(),
        "special_words": special_words(f),
        "model": Value::Null,
    });
    if let Some(spec) = spec {
        pair_of(spec)?;
        let m = component_model(fw, &spec.matrices[0], &spec.matrices[1]).map_err(farey_error)?;
        v["model"] = json!({
            "orientation": format!("{:?}", m.orientation).to_lowercase(),
            "words": m.words,
            "cores": cores_json(&m.cores),
            "action": m.action,
        });
    }
    ok(v)
}

pub fn farey(pq: &str) -> Outcome {
    let f: Fraction = pq.parse().map_err(|e: FareyError| CliError::input(e.to_string()))?;
    let (f0, f1) = farey_interval(f).map_err(farey_error)?;
    let order = build_order(f).map_err(farey_error)?;
    ok(json!({
        "fraction": f.to_string(),
        "parents": [f0.to_string(), f1.to_string()],
        "fword": fword_of(f).map_err(farey_error)?.to_string(),
        "orbit_words": orbit_words(f),
        "cyclic_order": order.clockwise_from_last(),
        "positive_order": order.elements,
        "special_words": special_words(f),
    }))
}

pub fn winding(spec: &TupleSpec, word: &str, depth: usize) -> Outcome {
    let w = Word::from_matrix_string(word).map_err(|e| CliError::input(e.to_string()))?;
    if w.is_empty() || w.symbols().iter().any(|&s| s >= spec.matrices.len()) {
        return Err(CliError::input(format!("word {word:?} does not fit a tuple of {} matrices", spec.matrices.len())));
    }
    let n = winding_matrix(&spec.matrices, &w).map_err(corr_error)?;
    let comb = if spec.full_shift {
        compute_cores(&spec.matrices, &spec.sft, depth)
            .ok()
            .and_then(|c| induced_morphism(&spec.matrices, &c).ok())
            .and_then(|phi| winding_comb(&phi, &w).ok())
    } else {
        None
    };
    ok(json!({
        "word": word,
        "trace": product_unchecked(&spec.matrices, &w).tr(),
        "winding_matrix": n,
        "winding_comb": comb,
    }))
}

fn het_json(h: &Heteroclinic) -> Value {
    json!({
        "k_word": h.k_word.to_matrix_string(),
        "connector_word": h.connector_word.to_matrix_string(),
        "ell_word": h.ell_word.to_matrix_string(),
        "residual": h.residual,
    })
}

pub fn witness(spec: &TupleSpec, budgets: Budgets, tol: &Tolerances) -> Outcome {
    let r = diagnose_boundary_with(&spec.matrices, &spec.sft, budgets, tol);
    let v = match &r {
        BoundaryReport::EllipticProduct { word, trace } => {
            json!({ "variant": "elliptic_product", "word": word.to_matrix_string(), "trace": trace })
        }
        BoundaryReport::ParabolicPeriodic { word, trace } => {
            json!({ "variant": "parabolic_periodic", "word": word.to_matrix_string(), "trace": trace })
        }
        BoundaryReport::IdentityProduct { word, sign } => {
            json!({ "variant": "identity_product", "word": word.to_matrix_string(), "sign": sign })
        }
        BoundaryReport::HeteroclinicConnection(h) => {
            let mut v = het_json(h);
            v["variant"] = json!("heteroclinic_connection");
            v
        }
        BoundaryReport::NoneFound { best_heteroclinic, .. } => {
            json!({ "variant": "none_found", "best_heteroclinic": best_heteroclinic.as_ref().map(het_json) })
        }
    };
    ok(v)
}

pub fn normalize(spec: &TupleSpec, bound: f64) -> Outcome {
    let n = normalize_tuple(&spec.matrices, bound).map_err(mat_error)?;
    let m = |x: &hypercone::Mat2| json!([[x.a, x.b], [x.c, x.d]]);
    ok(json!({
        "r": m(&n.r),
        "normalized": n.normalized.iter().map(m).collect::<Vec<_>>(),
        "entry_bound": n.bound,
        "trace_bound": bound,
    }))
}

/// Cores, and a certified multicone when one is found, for the diagram.
pub fn svg_data(spec: &TupleSpec, depth: usize) -> Result<(CoreSet, Option<MultiCone>), CliError> {
    if !spec.full_shift {
        return Err(CliError::input("diagrams are drawn for the full shift only"));
    }
    let cores = compute_cores(&spec.matrices, &spec.sft, depth).map_err(cone_error)?;
    let cone = if core_criterion(&spec.matrices, &cores).ok {
        fatten_cores(&spec.matrices, &cores).ok().filter(|(_, r)| r.ok).map(|(m, _)| m)
    } else {
        None
    };
    Ok((cores, cone))
}
