//! Canonical JSON: sorted keys, two-space indentation, floats with 17
//! significant digits and non-finite floats as the strings `"inf"`, `"-inf"`
//! and `"nan"`. Identical values always render to identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;
use serde_value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Canon {
    Null,
    Bool(bool),
    Int(i128),
    Float(f64),
    Str(String),
    Array(Vec<Canon>),
    Object(BTreeMap<String, Canon>),
}

impl Canon {
    pub fn from_serialize<T: Serialize + ?Sized>(x: &T) -> Result<Canon, String> {
        let v = serde_value::to_value(x).map_err(|e| e.to_string())?;
        Ok(Canon::from_value(v))
    }

    fn from_value(v: Value) -> Canon {
        match v {
            Value::Bool(b) => Canon::Bool(b),
            Value::U8(x) => Canon::Int(x.into()),
            Value::U16(x) => Canon::Int(x.into()),
            Value::U32(x) => Canon::Int(x.into()),
            Value::U64(x) => Canon::Int(x.into()),
            Value::I8(x) => Canon::Int(x.into()),
            Value::I16(x) => Canon::Int(x.into()),
            Value::I32(x) => Canon::Int(x.into()),
            Value::I64(x) => Canon::Int(x.into()),
            Value::F32(x) => Canon::Float(x.into()),
            Value::F64(x) => Canon::Float(x),
            Value::Char(c) => Canon::Str(c.to_string()),
            Value::String(s) => Canon::Str(s),
            Value::Unit => Canon::Null,
            Value::Option(None) => Canon::Null,
            Value::Option(Some(x)) | Value::Newtype(x) => Canon::from_value(*x),
            Value::Seq(xs) => Canon::Array(xs.into_iter().map(Canon::from_value).collect()),
            Value::Bytes(b) => Canon::Array(b.into_iter().map(|x| Canon::Int(x.into())).collect()),
            Value::Map(m) => Canon::Object(
                m.into_iter()
                    .map(|(k, v)| {
                        let key = match Canon::from_value(k) {
                            Canon::Str(s) => s,
                            other => other.render_compact(),
                        };
                        (key, Canon::from_value(v))
                    })
                    .collect(),
            ),
        }
    }

    /// Inserts `key` into an object; other values are left alone.
    pub fn insert(&mut self, key: &str, value: Canon) {
        if let Canon::Object(m) = self {
            m.insert(key.to_string(), value);
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0, true);
        out.push('\n');
        out
    }

    fn render_compact(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0, false);
        out
    }

    fn write(&self, out: &mut String, depth: usize, pretty: bool) {
        let pad = |out: &mut String, d: usize| {
            if pretty {
                out.push('\n');
                out.push_str(&"  ".repeat(d));
            }
        };
        match self {
            Canon::Null => out.push_str("null"),
            Canon::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Canon::Int(x) => write!(out, "{x}").unwrap(),
            Canon::Float(x) => out.push_str(&format_float(*x)),
            Canon::Str(s) => out.push_str(&serde_json::to_string(s).unwrap()),
            Canon::Array(xs) if xs.is_empty() => out.push_str("[]"),
            Canon::Object(m) if m.is_empty() => out.push_str("{}"),
            Canon::Array(xs) => {
                out.push('[');
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    pad(out, depth + 1);
                    x.write(out, depth + 1, pretty);
                }
                pad(out, depth);
                out.push(']');
            }
            Canon::Object(m) => {
                out.push('{');
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    pad(out, depth + 1);
                    out.push_str(&serde_json::to_string(k).unwrap());
                    out.push_str(if pretty { ": " } else { ":" });
                    v.write(out, depth + 1, pretty);
                }
                pad(out, depth);
                out.push('}');
            }
        }
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "\"nan\"".into()
    } else if x.is_infinite() {
        if x > 0.0 { "\"inf\"" } else { "\"-inf\"" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// CSV cell form of a float: the same digits, unquoted.
pub fn csv_float(x: f64) -> String {
    format_float(x).trim_matches('"').to_string()
}
