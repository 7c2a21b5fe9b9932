//! Deterministic text output: 17-significant-digit floats in CSV and JSON.

use std::io::Write;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Version tag carried by every JSON document.
pub const SCHEMA_VERSION: &str = "1";

/// `x` with 17 significant digits, e.g. `1.0000000000000000e0`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

struct Float17;

impl Formatter for Float17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Compact JSON with every float in [`fmt17`] form, newline terminated.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Float17);
    value.serialize(&mut ser).map_err(|e| Error::Format(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

/// `{schema_version, command, config, ...body}`; a non-object body is
/// stored under `result`.
pub fn envelope<C: Serialize, B: Serialize>(command: &str, config: &C, body: &B) -> Result<Value> {
    let conv = |e: serde_json::Error| Error::Format(e.to_string());
    let mut out = Map::new();
    out.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    out.insert("command".into(), Value::from(command));
    out.insert("config".into(), serde_json::to_value(config).map_err(conv)?);
    match serde_json::to_value(body).map_err(conv)? {
        Value::Object(fields) => out.extend(fields),
        other => {
            out.insert("result".into(), other);
        }
    }
    Ok(Value::Object(out))
}

/// One CSV line from already formatted cells.
pub fn csv_line(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}
