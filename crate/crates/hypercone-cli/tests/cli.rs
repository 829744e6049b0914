//! End-to-end runs of the `hypercone` binary on fixture files.

use hypercone::sl2core::canonical_matrices;
use hypercone::twoshift::{pullback, FWord};
use hypercone::Mat2;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::Command;

fn scratch_dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("hypercone-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write_json(name: &str, v: &Value) -> PathBuf {
    let p = scratch_dir().join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn mat(m: &Mat2) -> Value {
    json!([[m.a, m.b], [m.c, m.d]])
}

fn spec(ms: &[Mat2]) -> Value {
    json!({ "matrices": ms.iter().map(mat).collect::<Vec<_>>() })
}

struct Run {
    code: i32,
    stdout: String,
    envelopes: Vec<Value>,
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hypercone"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let envelopes = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    Run { code: out.status.code().unwrap(), stdout, envelopes }
}

fn free_pair() -> [Mat2; 2] {
    let (a, b) = canonical_matrices(2.0, 2.0, 1.0, -9.0);
    [a, b]
}

#[test]
fn classify2_free_pair() {
    let p = write_json("free.json", &spec(&free_pair()));
    let r = run(&["classify2", "--input", p.to_str().unwrap()], &[]);
    assert_eq!(r.code, 0);
    let pl = &r.envelopes[0]["payload"];
    assert_eq!(pl["variant"], "non_principal");
    assert_eq!(pl["fword"], "");
    assert_eq!(pl["orientation"], "positive");
    assert_eq!(r.envelopes[0]["command"], "classify2");
    assert!(r.envelopes[0]["tolerances"]["tol_tr"].is_number());
}

#[test]
fn classify2_elliptic_and_rational_mode() {
    let (a, b) = canonical_matrices(8.0, 2.0, 1.0, -1.0);
    let p = write_json("ell.json", &spec(&[a, b]));
    let r = run(&["classify2", "--input", p.to_str().unwrap()], &[]);
    assert_eq!(r.code, 0);
    assert_eq!(r.envelopes[0]["payload"]["variant"], "elliptic");
    assert_eq!(r.envelopes[0]["payload"]["witness"], "BAB");
    let q = write_json(
        "exact.json",
        &json!({ "matrices": [[["2", "1"], ["0", "1/2"]], [["1/2", "0"], ["-9", "2"]]], "mode": "rational" }),
    );
    let r = run(&["classify2", "--input", q.to_str().unwrap()], &[]);
    assert_eq!(r.code, 0);
    assert_eq!(r.envelopes[0]["payload"]["mode"], "rational");
    assert_eq!(r.envelopes[0]["payload"]["variant"], "non_principal");
}

#[test]
fn classify2_pullback_recovers_fword() {
    let [a, b] = free_pair();
    let fw: FWord = "+-+".parse().unwrap();
    let (pa, pb) = pullback(&fw, &a, &b);
    let p = write_json("pulled.json", &spec(&[pa, pb]));
    let r = run(&["classify2", "--input", p.to_str().unwrap()], &[]);
    assert_eq!(r.envelopes[0]["payload"]["fword"], "+-+");
}

#[test]
fn degenerate_and_input_exit_codes() {
    let shear = write_json("shear.json", &json!({ "matrices": [[[1, 1e-12], [0, 1]], [[1, 0], [1e-12, 1]]] }));
    let r = run(&["classify2", "--input", shear.to_str().unwrap()], &[]);
    assert_eq!(r.code, 2);
    assert_eq!(r.envelopes[0]["payload"]["variant"], "degenerate");

    let bad = write_json("baddet.json", &json!({ "matrices": [[[2, 1], [0, 1]], [[1, 0], [0, 1]]] }));
    assert_eq!(run(&["classify2", "--input", bad.to_str().unwrap()], &[]).code, 1);
    assert_eq!(run(&["classify2", "--input", "/nonexistent/spec.json"], &[]).code, 1);
    let three = write_json("three.json", &spec(&[Mat2::diag(2.0), Mat2::diag(3.0), Mat2::diag(4.0)]));
    assert_eq!(run(&["classify2", "--input", three.to_str().unwrap()], &[]).code, 1);
    let p = write_json("free-b.json", &spec(&free_pair()));
    assert_eq!(run(&["witness", "--input", p.to_str().unwrap(), "--budget", "1,2"], &[]).code, 1);
    assert_eq!(run(&["farey", "--pq", "3/2"], &[]).code, 1);
}

#[test]
fn farey_two_fifths_figure_order() {
    let r = run(&["farey", "--pq", "2/5"], &[]);
    assert_eq!(r.code, 0);
    let order: Vec<String> = serde_json::from_value(r.envelopes[0]["payload"]["cyclic_order"].clone()).unwrap();
    assert_eq!(order, ["BABAA", "BA", "ABABA", "AB", "AABAB", "AAB", "ABAAB", "ABA", "BAABA", "BAA"]);
    assert_eq!(r.envelopes[0]["payload"]["fword"], "+-");
}

#[test]
fn describe_with_component_model() {
    let [a, b] = free_pair();
    let fw: FWord = "+-".parse().unwrap();
    let (pa, pb) = pullback(&fw, &a, &b);
    let p = write_json("describe.json", &spec(&[pa, pb]));
    let r = run(&["describe", "--fword", "+-", "--input", p.to_str().unwrap()], &[]);
    assert_eq!(r.code, 0);
    let pl = &r.envelopes[0]["payload"];
    assert_eq!(pl["fraction"], "2/5");
    assert_eq!(pl["model"]["cores"]["rank"], 5);
    assert_eq!(pl["model"]["orientation"], "positive");
}

#[test]
fn winding_of_free_pair() {
    let p = write_json("wind.json", &spec(&free_pair()));
    let r = run(&["winding", "--input", p.to_str().unwrap(), "--word", "AB"], &[]);
    assert_eq!(r.code, 0);
    assert_eq!(r.envelopes[0]["payload"]["winding_matrix"], -1);
    assert_eq!(r.envelopes[0]["payload"]["winding_comb"], -1);
}

#[test]
fn witness_on_heteroclinic_fixture() {
    let t = hypercone::witness::heteroclinic_fixture(2.0, 1.8, 3.0);
    let p = write_json("het.json", &spec(&t));
    let r = run(&["witness", "--input", p.to_str().unwrap(), "--budget", "1,1,1"], &[]);
    assert_eq!(r.code, 0);
    let pl = &r.envelopes[0]["payload"];
    assert_eq!(pl["variant"], "heteroclinic_connection");
    assert_eq!((pl["k_word"].as_str(), pl["connector_word"].as_str(), pl["ell_word"].as_str()), (Some("B"), Some("C"), Some("A")));
    assert!(pl["residual"].as_f64().unwrap() <= 1e-12);
    assert_eq!(r.envelopes[0]["budgets"], json!({ "k_max": 1, "ell_max": 1, "n_max": 1 }));
}

#[test]
fn witness_none_found_for_certified_pair() {
    let p = write_json("free-w.json", &spec(&free_pair()));
    let r = run(&["witness", "--input", p.to_str().unwrap(), "--budget", "4,4,2"], &[]);
    assert_eq!(r.code, 0);
    let pl = &r.envelopes[0]["payload"];
    assert_eq!(pl["variant"], "none_found");
    assert!(pl["best_heteroclinic"]["residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn normalize_conjugated_pair() {
    let k = 1000.0;
    let d = Mat2::raw(k, 0.0, 0.0, 1.0 / k);
    let [a, b] = free_pair();
    let p = write_json("norm.json", &spec(&[a.conj(&d), b.conj(&d)]));
    let r = run(&["normalize", "--input", p.to_str().unwrap(), "--bound", "10"], &[]);
    assert_eq!(r.code, 0);
    let pl = &r.envelopes[0]["payload"];
    let bound = pl["entry_bound"].as_f64().unwrap();
    let entries: Vec<[[f64; 2]; 2]> = serde_json::from_value(pl["normalized"].clone()).unwrap();
    assert!(entries.iter().flatten().flatten().all(|x| x.abs() <= bound));
    let rm: [[f64; 2]; 2] = serde_json::from_value(pl["r"].clone()).unwrap();
    assert!((rm[0][0] * rm[1][1] - rm[0][1] * rm[1][0] - 1.0).abs() < 1e-9);
    assert!(rm[0][1].abs() + rm[1][0].abs() + (rm[0][0] - 1.0).abs() > 1e-3);
}

#[test]
fn certify_from_cores_and_from_file() {
    let p = write_json("cert.json", &spec(&free_pair()));
    let r = run(&["certify", "--input", p.to_str().unwrap()], &[]);
    assert_eq!(r.code, 0);
    let pl = &r.envelopes[0]["payload"];
    assert_eq!(pl["certified"], true);
    assert!(pl["contraction"].as_f64().unwrap() > 1.0);
    let m = write_json("cone.json", &json!({ "arcs": pl["multicones"][0] }));
    let r2 = run(&["certify", "--input", p.to_str().unwrap(), "--multicone", m.to_str().unwrap()], &[]);
    assert_eq!(r2.envelopes[0]["payload"]["certified"], true);
    assert_eq!(r2.envelopes[0]["payload"]["source"], "file");
}

#[test]
fn cores_rank_two_for_free_pair() {
    let p = write_json("cores.json", &spec(&free_pair()));
    let r = run(&["cores", "--input", p.to_str().unwrap()], &[]);
    assert_eq!(r.code, 0);
    assert_eq!(r.envelopes[0]["payload"]["cores"][0]["rank"], 2);
    assert_eq!(r.envelopes[0]["payload"]["core_criterion"]["ok"], true);
}

#[test]
fn svg_diagrams() {
    let p = write_json("svg-free.json", &spec(&free_pair()));
    let out = scratch_dir().join("free.svg");
    let r = run(&["svg", "--input", p.to_str().unwrap(), "--svg", out.to_str().unwrap()], &[]);
    assert_eq!(r.code, 0);
    let s = &r.envelopes[0]["payload"]["summary"];
    assert_eq!((s["u_arcs"].as_u64(), s["s_arcs"].as_u64(), s["points"].as_u64()), (Some(2), Some(2), Some(4)));
    let doc = std::fs::read_to_string(&out).unwrap();
    assert!(doc.starts_with("<svg") && doc.trim_end().ends_with("</svg>"));

    let [a, b] = free_pair();
    let (pa, pb) = pullback(&"+-".parse().unwrap(), &a, &b);
    let p = write_json("svg-25.json", &spec(&[pa, pb]));
    let out = scratch_dir().join("two-fifths.svg");
    let r = run(&["svg", "--input", p.to_str().unwrap(), "--svg", out.to_str().unwrap()], &[]);
    let s = &r.envelopes[0]["payload"]["summary"];
    assert_eq!((s["u_arcs"].as_u64(), s["s_arcs"].as_u64()), (Some(5), Some(5)));

    let p = write_json("svg-principal.json", &spec(&[Mat2::diag(2.0), Mat2::diag(3.0)]));
    let out = scratch_dir().join("principal.svg");
    let r = run(&["svg", "--input", p.to_str().unwrap(), "--svg", out.to_str().unwrap()], &[]);
    let s = &r.envelopes[0]["payload"]["summary"];
    assert_eq!((s["u_arcs"].as_u64(), s["s_arcs"].as_u64()), (Some(1), Some(1)));
}

#[test]
fn batch_order_and_determinism() {
    let [a, b] = free_pair();
    let specs: Vec<Value> = ["", "+", "-", "+-", "-+", "++-"]
        .iter()
        .map(|s| {
            let (pa, pb) = pullback(&s.parse().unwrap(), &a, &b);
            spec(&[pa, pb])
        })
        .collect();
    let p = write_json("batch.json", &Value::Array(specs));
    let r1 = run(&["classify2", "--input", p.to_str().unwrap()], &[]);
    let r2 = run(&["classify2", "--input", p.to_str().unwrap()], &[]);
    assert_eq!(r1.stdout, r2.stdout);
    let fwords: Vec<&str> = r1.envelopes.iter().map(|e| e["payload"]["fword"].as_str().unwrap()).collect();
    assert_eq!(fwords, ["", "+", "-", "+-", "-+", "++-"]);
    let digests: std::collections::BTreeSet<&str> = r1.envelopes.iter().map(|e| e["input_digest"].as_str().unwrap()).collect();
    assert_eq!(digests.len(), 6);
}

#[test]
fn tolerance_override_from_environment() {
    let p = write_json("tol.json", &spec(&free_pair()));
    let r = run(&["classify2", "--input", p.to_str().unwrap()], &[("HYPERCONE_TOL", "1e-6")]);
    assert_eq!(r.envelopes[0]["tolerances"]["tol_tr"].as_f64(), Some(1e-6));
    assert!(r.stdout.contains("\"tol_tr\":9.9999999999999995e-7"));
    assert_eq!(run(&["classify2", "--input", p.to_str().unwrap()], &[("HYPERCONE_TOL", "abc")]).code, 1);
}
