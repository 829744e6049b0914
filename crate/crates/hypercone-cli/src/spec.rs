//! Input files: tuple specifications with matrices, the ambient subshift and the arithmetic mode.

use crate::output::CliError;
use hypercone::sl2core::{q_from_f64, q_to_f64, Mat2Q, Tolerances};
use hypercone::{Mat2, Sft};
use num::{BigInt, BigRational, One};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Arithmetic used by the commands that support exact evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Float,
    Rational,
}

/// The subshift part of a specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ShiftSpec {
    Full,
    Sft { allowed: Vec<Vec<bool>> },
}

/// A parsed tuple specification.
#[derive(Debug, Clone)]
pub struct TupleSpec {
    pub matrices: Vec<Mat2>,
    pub exact: Vec<Mat2Q>,
    pub sft: Sft,
    pub full_shift: bool,
    pub mode: Mode,
}

/// Hex SHA-256 of a byte string.
pub fn digest_bytes(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_entry(v: &Value) -> Result<BigRational, CliError> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(BigRational::from_integer(BigInt::from(i)))
            } else {
                let x = n.as_f64().ok_or_else(|| CliError::input(format!("unreadable number {n}")))?;
                Ok(q_from_f64(x))
            }
        }
        Value::String(s) => parse_rational(s),
        other => Err(CliError::input(format!("matrix entry {other} is neither a number nor a string"))),
    }
}

/// Parse an integer, a fraction `p/q` or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, CliError> {
    let s = s.trim();
    let bad = || CliError::input(format!("cannot read {s:?} as a rational number"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Ok(i) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(i));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').ok_or_else(bad)?;
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || int.len() + frac.len() == 0 {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let r = BigRational::new(digits, num::pow(BigInt::from(10), frac.len()));
    Ok(if neg { -r } else { r })
}

fn parse_matrix(v: &Value, k: usize, tol: &Tolerances) -> Result<(Mat2, Mat2Q), CliError> {
    let rows = v.as_array().filter(|r| r.len() == 2).ok_or_else(|| CliError::input(format!("matrix {k} is not a 2×2 array")))?;
    let mut e = Vec::with_capacity(4);
    for row in rows {
        let row = row.as_array().filter(|r| r.len() == 2).ok_or_else(|| CliError::input(format!("matrix {k} is not a 2×2 array")))?;
        for x in row {
            e.push(parse_entry(x)?);
        }
    }
    let q = Mat2Q::new(e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone());
    let f = Mat2::new(q_to_f64(&e[0]), q_to_f64(&e[1]), q_to_f64(&e[2]), q_to_f64(&e[3]));
    let f = f.map_err(|err| CliError::input(format!("matrix {k}: {err}")))?;
    if (q_to_f64(&q.det()) - 1.0).abs() > tol.tol_det {
        return Err(CliError::input(format!("matrix {k} has determinant {}", q_to_f64(&q.det()))));
    }
    Ok((f, q))
}

impl TupleSpec {
    /// Parse one specification from a JSON value.
    pub fn from_value(v: &Value, mode_override: Option<Mode>, tol: &Tolerances) -> Result<Self, CliError> {
        let obj = v.as_object().ok_or_else(|| CliError::input("a tuple specification must be a JSON object"))?;
        let mats = obj
            .get("matrices")
            .and_then(Value::as_array)
            .filter(|m| !m.is_empty())
            .ok_or_else(|| CliError::input("missing non-empty \"matrices\" array"))?;
        let mut matrices = Vec::new();
        let mut exact = Vec::new();
        for (k, m) in mats.iter().enumerate() {
            let (f, q) = parse_matrix(m, k, tol)?;
            matrices.push(f);
            exact.push(q);
        }
        let shift: ShiftSpec = match obj.get("shift") {
            None => ShiftSpec::Full,
            Some(s) => serde_json::from_value(s.clone()).map_err(|e| CliError::input(format!("bad \"shift\": {e}")))?,
        };
        let (sft, full_shift) = match shift {
            ShiftSpec::Full => (Sft::full(matrices.len()), true),
            ShiftSpec::Sft { allowed } => {
                if allowed.len() != matrices.len() {
                    return Err(CliError::input(format!(
                        "transition table has {} rows for {} matrices",
                        allowed.len(),
                        matrices.len()
                    )));
                }
                let full = allowed.iter().all(|r| r.iter().all(|&b| b));
                (Sft::new(allowed).map_err(|e| CliError::input(e.to_string()))?, full)
            }
        };
        let mode = match (mode_override, obj.get("mode")) {
            (Some(m), _) => m,
            (None, None) => Mode::Float,
            (None, Some(m)) => serde_json::from_value(m.clone()).map_err(|e| CliError::input(format!("bad \"mode\": {e}")))?,
        };
        if mode == Mode::Rational && exact.iter().any(|m| m.det() != BigRational::one()) {
            return Err(CliError::input("rational mode needs matrices with determinant exactly 1"));
        }
        Ok(TupleSpec { matrices, exact, sft, full_shift, mode })
    }
}

/// Read an input file holding one specification or an array of them.
pub fn read_specs(path: &std::path::Path) -> Result<Vec<Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(match v {
        Value::Array(items) => items,
        other => vec![other],
    })
}
