//! Rendering of key/value reports and row tables in the three output formats.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Ordered key/value pairs; one JSON object, one CSV row, or an aligned table.
#[derive(Debug, Default)]
pub struct Report {
    fields: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn field(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => {
                let width = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                let mut out = String::new();
                for (k, v) in &self.fields {
                    let _ = writeln!(out, "{k:<width$}  {}", plain(v));
                }
                out
            }
            Format::Csv => {
                let keys: Vec<&str> = self.fields.iter().map(|(k, _)| k.as_str()).collect();
                let values: Vec<String> = self.fields.iter().map(|(_, v)| plain(v)).collect();
                csv_lines(std::iter::once(keys.iter().map(|s| s.to_string()).collect()).chain([values]))
            }
            Format::Json => {
                let map: Map<String, Value> = self.fields.iter().cloned().collect();
                format!("{}\n", serde_json::to_string_pretty(&Value::Object(map)).expect("JSON values serialize"))
            }
        }
    }
}

/// Rows of numbers under a header; JSON wraps them in an object with `meta`.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub meta: Report,
}

impl Table {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => {
                let mut out = String::new();
                for h in &self.header {
                    let _ = write!(out, "{h:>24}");
                }
                out.push('\n');
                for row in &self.rows {
                    for v in row {
                        let _ = write!(out, "{v:>24.16e}");
                    }
                    out.push('\n');
                }
                out
            }
            Format::Csv => csv_lines(
                std::iter::once(self.header.iter().map(|s| s.to_string()).collect()).chain(
                    self.rows
                        .iter()
                        .map(|row| row.iter().map(|v| format!("{v:.16e}")).collect()),
                ),
            ),
            Format::Json => {
                let mut map: Map<String, Value> = self.meta.fields.iter().cloned().collect();
                let rows = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .header
                            .iter()
                            .zip(row)
                            .map(|(h, v)| (h.to_string(), Value::from(*v)))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                map.insert("rows".into(), Value::Array(rows));
                format!("{}\n", serde_json::to_string_pretty(&Value::Object(map)).expect("JSON values serialize"))
            }
        }
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_lines(rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("writing to memory cannot fail");
    }
    String::from_utf8(w.into_inner().expect("flushed")).expect("fields are UTF-8")
}
