//! Artifact emission: every number is rounded to 12 significant digits, the
//! JSON key order is fixed, and the same invocation always produces the
//! same bytes.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Round to 12 significant digits by a round trip through scientific
/// notation, which is well defined across the whole finite range.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("scientific notation round-trips")
}

fn round_numbers(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(x) = n.as_f64() {
                if n.is_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(sig12(x)) {
                        *n = rounded;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// One CSV line; fields are joined with commas and no quoting, which every
/// emitted field shape (labels, counters, rounded numbers) satisfies.
pub struct Row(pub Vec<String>);

pub fn cell(x: f64) -> String {
    format!("{}", sig12(x))
}

/// Write a finished artifact to `--out` or stdout.
pub fn emit(out: Option<&PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            std::io::stdout().write_all(body.as_bytes()).context("cannot write to stdout")
        }
    }
}

pub fn render_json(value: Value) -> String {
    let mut value = value;
    round_numbers(&mut value);
    let mut body = serde_json::to_string_pretty(&value).expect("JSON tree serializes");
    body.push('\n');
    body
}

pub fn render_csv(header: &str, rows: Vec<Row>) -> String {
    let mut body = String::from(header);
    body.push('\n');
    for row in rows {
        body.push_str(&row.0.join(","));
        body.push('\n');
    }
    body
}
