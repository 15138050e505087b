//! Report values and their two renderings.

use std::fmt::Write;

use abnet_core::lattice::GroupDesc;
use abnet_core::matrix::Matrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

/// Integers are JSON numbers when they fit in `i64` and decimal strings otherwise.
pub fn int(v: &BigInt) -> Value {
    match v.to_i64() {
        Some(n) => json!(n),
        None => json!(v.to_string()),
    }
}

pub fn ints(v: &[BigInt]) -> Value {
    Value::Array(v.iter().map(int).collect())
}

/// Rationals are written `p/q`, or as integers when `q = 1`.
pub fn rational(v: &BigRational) -> Value {
    if v.is_integer() {
        int(v.numer())
    } else {
        json!(v.to_string())
    }
}

pub fn rationals(v: &[BigRational]) -> Value {
    Value::Array(v.iter().map(rational).collect())
}

pub fn int_matrix(m: &Matrix<BigInt>) -> Value {
    Value::Array(m.to_rows().iter().map(|r| ints(r)).collect())
}

pub fn rat_matrix(m: &Matrix<BigRational>) -> Value {
    Value::Array(m.to_rows().iter().map(|r| rationals(r)).collect())
}

pub fn group(g: &GroupDesc) -> Value {
    json!({
        "invariant_factors": ints(&g.invariant_factors),
        "free_rank": g.free_rank,
        "order": g.order().as_ref().map_or(Value::Null, int),
        "display": g.to_string(),
    })
}

pub fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(value).expect("values always serialize");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut out = String::new();
            text(value, 0, &mut out);
            out
        }
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) if items.iter().all(|i| !i.is_array() && !i.is_object()) => Some(format!(
            "[{}]",
            items.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")
        )),
        _ => None,
    }
}

fn text(value: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                match scalar(v) {
                    Some(s) => writeln!(out, "{pad}{k}: {s}").unwrap(),
                    None => {
                        writeln!(out, "{pad}{k}:").unwrap();
                        text(v, depth + 1, out);
                    }
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match scalar(item) {
                    Some(s) => writeln!(out, "{pad}{s}").unwrap(),
                    None => {
                        writeln!(out, "{pad}-").unwrap();
                        text(item, depth + 1, out);
                    }
                }
            }
        }
        other => writeln!(out, "{pad}{}", scalar(other).unwrap_or_default()).unwrap(),
    }
}
