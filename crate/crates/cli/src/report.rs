//! Rendering of reports as JSON, CSV or plain text.

use clap::ValueEnum;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// A finished report: the JSON tree plus flat rows for CSV output.
pub struct Report {
    pub json: Value,
    pub rows: Vec<Vec<(String, String)>>,
}

impl Report {
    pub fn render(&self, format: Format) -> Result<String, String> {
        match format {
            Format::Json => Ok(render_json(&self.json)),
            Format::Csv => render_csv(&self.rows),
            Format::Text => {
                let mut out = String::new();
                flatten_text("", &self.json, &mut out);
                Ok(out)
            }
        }
    }
}

/// Pretty JSON in insertion order with a trailing newline. Parsing this and
/// rendering again reproduces the same bytes.
pub fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn render_csv(rows: &[Vec<(String, String)>]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(first) = rows.first() {
        w.write_record(first.iter().map(|(k, _)| k)).map_err(|e| e.to_string())?;
    }
    for row in rows {
        w.write_record(row.iter().map(|(_, v)| v)).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

fn flatten_text(prefix: &str, v: &Value, out: &mut String) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten_text(&key(k), x, out);
            }
        }
        Value::Array(xs) if xs.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in xs.iter().enumerate() {
                flatten_text(&key(&i.to_string()), x, out);
            }
        }
        Value::Array(xs) => {
            let items: Vec<String> = xs.iter().map(scalar).collect();
            out.push_str(&format!("{prefix}: [{}]\n", items.join(", ")));
        }
        _ => out.push_str(&format!("{prefix}: {}\n", scalar(v))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}
