//! Report envelopes and their three text forms.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::args::Format;

/// Fields every report carries so that a saved file explains itself.
pub struct Envelope {
    pub command: &'static str,
    pub config: Value,
    pub backend: Option<&'static str>,
    pub seed: Option<u64>,
    pub tolerance: Value,
    pub result: Value,
}

impl Envelope {
    pub fn to_value(&self) -> Value {
        json!({
            "tool": "retrobell",
            "version": retrobell_core::VERSION,
            "command": self.command,
            "config": self.config,
            "backend": self.backend,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "result": self.result,
        })
    }
}

/// One `path: value` line per scalar. Numbers go through the same
/// serializer as the JSON form, so both show identical digits.
pub fn human(value: &Value) -> String {
    let mut out = String::new();
    flatten("", value, &mut out);
    out
}

fn flatten(prefix: &str, value: &Value, out: &mut String) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(items) if items.iter().all(|v| !v.is_object() && !v.is_array()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push_str(&format!("{prefix}: [{}]\n", parts.join(", ")));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        v => out.push_str(&format!("{prefix}: {}\n", scalar(v))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Renders in the chosen format. `csv` is the command's table, if it has one.
pub fn render(format: Format, envelope: &Envelope, csv: Option<String>) -> Result<String, String> {
    let v = envelope.to_value();
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&v).map_err(|e| e.to_string())?,
        Format::Human => human(&v),
        Format::Csv => csv.ok_or_else(|| format!("{} has no csv form", envelope.command))?,
    };
    Ok(if text.ends_with('\n') { text } else { text + "\n" })
}

pub fn emit(text: &str, output: Option<&Path>) -> std::io::Result<()> {
    match output {
        Some(path) => fs::write(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

/// Bounds quoted alongside every CHSH result.
pub fn chsh_bounds() -> Value {
    let mut m = Map::new();
    m.insert("lhv".into(), json!(retrobell_core::chsh::LHV_BOUND));
    m.insert("tsirelson".into(), json!(retrobell_core::chsh::TSIRELSON_BOUND));
    m.insert("pr_box".into(), json!(retrobell_core::chsh::PR_BOX_VALUE));
    Value::Object(m)
}

pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| e.to_string())?;
    for r in rows {
        w.write_record(r).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn human_flattens_nested_values() {
        let v = json!({"a": {"b": 0.1, "c": [1, 2]}, "d": [{"e": "x"}], "f": null});
        assert_eq!(human(&v), "a.b: 0.1\na.c: [1, 2]\nd[0].e: x\nf: null\n");
    }
}
