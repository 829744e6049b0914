//! Result envelopes, deterministic JSON formatting and exit codes.

use hypercone::sl2core::Tolerances;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::Value;
use std::io;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 1;
    pub const DEGENERATE: i32 = 2;
    pub const BUDGET: i32 = 3;
}

/// A command failure with the exit code it maps to.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: exit::INPUT, message: message.into() }
    }

    pub fn degenerate(message: impl Into<String>) -> Self {
        CliError { code: exit::DEGENERATE, message: message.into() }
    }

    pub fn budget(message: impl Into<String>) -> Self {
        CliError { code: exit::BUDGET, message: message.into() }
    }
}

/// The self-describing result of one command on one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub command: String,
    pub input_digest: String,
    pub exit_code: i32,
    pub payload: Value,
    pub budgets: Value,
    pub tolerances: Tolerances,
    pub version: String,
}

impl Envelope {
    pub fn new(command: &str, input_digest: String, outcome: Result<(Value, i32), CliError>, budgets: Value, tol: Tolerances) -> Self {
        let (payload, exit_code) = match outcome {
            Ok((p, code)) => (p, code),
            Err(e) => (serde_json::json!({ "error": e.message }), e.code),
        };
        Envelope {
            command: command.to_string(),
            input_digest,
            exit_code,
            payload,
            budgets,
            tolerances: tol,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Compact JSON with every float written in scientific notation with 17 significant digits.
struct FixedFloat;

impl Formatter for FixedFloat {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize with fixed float formatting. Object keys keep the order of the value, which is
/// sorted for `serde_json::Value` maps and declaration order for structs.
pub fn to_fixed_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(buf).expect("JSON is UTF-8")
}
