//! `hypercone`: decide and certify uniform hyperbolicity of SL(2,R) tuples from the command line.
//!
//! Every command prints one JSON envelope per input specification, one per line, in input order.
//! The process exit code is the largest code among the envelopes: 0 ok, 1 bad input, 2 degenerate
//! verdict, 3 budget exhausted.

mod commands;
mod output;
mod spec;
mod svg;

use clap::{Args, Parser, Subcommand};
use hypercone::sl2core::Tolerances;
use hypercone::witness::Budgets;
use output::{exit, to_fixed_json, CliError, Envelope};
use rayon::prelude::*;
use serde_json::{json, Value};
use spec::{digest_bytes, Mode, TupleSpec};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "hypercone", version, about = "Uniform hyperbolicity of SL(2,R) tuples over subshifts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// JSON file with one tuple specification or an array of them.
    #[arg(long)]
    input: PathBuf,
    /// Arithmetic mode, overriding the `mode` field of the specifications.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a pair over the full 2-shift.
    Classify2 {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Certify a tuple with a multicone family from a file or from fattened cores.
    Certify {
        #[command(flatten)]
        input: InputArgs,
        /// Multicone file: {"arcs": [[start, end], ...]} or {"cones": [[[start, end], ...], ...]}.
        #[arg(long)]
        multicone: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        depth: usize,
    },
    /// Compute the unstable and stable cores.
    Cores {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 40)]
        depth: usize,
    },
    /// Describe the component of an F-word or fraction, with the core model of an optional pair.
    Describe {
        #[arg(long)]
        fword: Option<String>,
        #[arg(long)]
        pq: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Winding number of a word, given as a matrix string such as "AB".
    Winding {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 40)]
        depth: usize,
    },
    /// Search for boundary witnesses.
    Witness {
        #[command(flatten)]
        input: InputArgs,
        /// Budgets K,L,N: periodic word lengths on both sides and connector length.
        #[arg(long, default_value = "12,12,8")]
        budget: String,
    },
    /// Conjugate a tuple with bounded traces into a compact set.
    Normalize {
        #[command(flatten)]
        input: InputArgs,
        /// Trace bound C.
        #[arg(long, default_value_t = 10.0)]
        bound: f64,
    },
    /// Rotation words and their cyclic order for a fraction p/q.
    Farey {
        #[arg(long)]
        pq: String,
    },
    /// Draw cores, multicone, invariant directions and the generator action as SVG.
    Svg {
        #[command(flatten)]
        input: InputArgs,
        /// Output file; with several inputs the index is appended before the extension.
        #[arg(long)]
        svg: PathBuf,
        #[arg(long, default_value_t = 40)]
        depth: usize,
    },
}

fn tolerances() -> Result<Tolerances, CliError> {
    let mut tol = Tolerances::default();
    if let Ok(s) = std::env::var("HYPERCONE_TOL") {
        let t: f64 = s.trim().parse().map_err(|_| CliError::input(format!("HYPERCONE_TOL={s:?} is not a number")))?;
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::input(format!("HYPERCONE_TOL={s:?} must be positive")));
        }
        tol.tol_tr = t;
    }
    Ok(tol)
}

fn parse_budget(s: &str) -> Result<Budgets, CliError> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::input(format!("--budget {s:?} is not K,L,N")))?;
    match parts[..] {
        [k, l, n] if k >= 1 && l >= 1 => Ok(Budgets { k_max: k, ell_max: l, n_max: n }),
        _ => Err(CliError::input(format!("--budget {s:?} needs three numbers with K, L ≥ 1"))),
    }
}

fn svg_path(base: &std::path::Path, index: usize, count: usize) -> PathBuf {
    if count == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("diagram");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("svg");
    base.with_file_name(format!("{stem}-{index}.{ext}"))
}

/// Run a per-specification command over every specification in the input file in parallel.
fn batch<F>(name: &str, input: &InputArgs, budgets: Value, tol: Tolerances, f: F) -> Vec<Envelope>
where
    F: Fn(usize, usize, &TupleSpec) -> commands::Outcome + Sync,
{
    let values = match spec::read_specs(&input.input) {
        Ok(v) => v,
        Err(e) => return vec![Envelope::new(name, String::new(), Err(e), budgets, tol)],
    };
    let count = values.len();
    values
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let digest = digest_bytes(&serde_json::to_vec(v).expect("JSON values serialize"));
            let outcome = TupleSpec::from_value(v, input.mode, &tol).and_then(|s| f(i, count, &s));
            Envelope::new(name, digest, outcome, budgets.clone(), tol)
        })
        .collect()
}

fn run(cli: Cli) -> Vec<Envelope> {
    let tol = match tolerances() {
        Ok(t) => t,
        Err(e) => return vec![Envelope::new("setup", String::new(), Err(e), Value::Null, Tolerances::default())],
    };
    match cli.command {
        Command::Classify2 { input } => batch("classify2", &input, Value::Null, tol, |_, _, s| commands::classify2(s, &tol)),
        Command::Certify { input, multicone, depth } => batch("certify", &input, json!({ "depth": depth }), tol, |_, _, s| {
            commands::certify_cmd(s, multicone.as_deref(), depth)
        }),
        Command::Cores { input, depth } => {
            batch("cores", &input, json!({ "depth": depth }), tol, |_, _, s| commands::cores_cmd(s, depth, &tol))
        }
        Command::Describe { fword, pq, input } => {
            let digest = digest_bytes(format!("{fword:?} {pq:?}").as_bytes());
            let fw = match commands::fword_arg(fword.as_deref(), pq.as_deref()) {
                Ok(fw) => fw,
                Err(e) => return vec![Envelope::new("describe", digest, Err(e), Value::Null, tol)],
            };
            match input {
                None => vec![Envelope::new("describe", digest, commands::describe(&fw, None), Value::Null, tol)],
                Some(path) => {
                    let args = InputArgs { input: path, mode: None };
                    batch("describe", &args, Value::Null, tol, |_, _, s| commands::describe(&fw, Some(s)))
                }
            }
        }
        Command::Winding { input, word, depth } => {
            batch("winding", &input, json!({ "depth": depth }), tol, |_, _, s| commands::winding(s, &word, depth))
        }
        Command::Witness { input, budget } => {
            let budgets = match parse_budget(&budget) {
                Ok(b) => b,
                Err(e) => return vec![Envelope::new("witness", String::new(), Err(e), Value::Null, tol)],
            };
            let bj = serde_json::to_value(budgets).expect("budgets serialize");
            batch("witness", &input, bj, tol, |_, _, s| commands::witness(s, budgets, &tol))
        }
        Command::Normalize { input, bound } => {
            batch("normalize", &input, json!({ "bound": bound }), tol, |_, _, s| commands::normalize(s, bound))
        }
        Command::Farey { pq } => {
            let digest = digest_bytes(pq.as_bytes());
            vec![Envelope::new("farey", digest, commands::farey(&pq), Value::Null, tol)]
        }
        Command::Svg { input, svg: out, depth } => batch("svg", &input, json!({ "depth": depth }), tol, |i, count, s| {
            let (cores, cone) = commands::svg_data(s, depth)?;
            let (doc, summary) = svg::render(&s.matrices, &cores, cone.as_ref());
            let path = svg_path(&out, i, count);
            std::fs::write(&path, doc).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
            Ok((json!({ "path": path.display().to_string(), "summary": summary }), exit::OK))
        }),
    }
}

fn main() {
    let envelopes = run(Cli::parse());
    let mut out = std::io::stdout().lock();
    for e in &envelopes {
        // A closed pipe (for example `| head`) ends the output quietly.
        if writeln!(out, "{}", to_fixed_json(e)).is_err() {
            break;
        }
    }
    let code = envelopes.iter().map(|e| e.exit_code).max().unwrap_or(exit::OK);
    std::process::exit(code);
}
