//! Tabular output in CSV or JSON.

use std::io::Write;

use clap::ValueEnum;
use maxsketch::stream_io::fmt_real;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// An ordered record; field order is the CSV column order.
#[derive(Debug, Clone, Default)]
pub struct Record(pub Vec<(String, Value)>);

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (k, v) in &self.0 {
            map.insert(k.clone(), v.clone());
        }
        Value::Object(map)
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) if n.is_f64() => fmt_real(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes records as a CSV table (header from the first record) or a JSON
/// array. A single record is written as a bare JSON object.
pub fn write_records<W: Write + ?Sized>(
    out: &mut W,
    format: OutputFormat,
    records: &[Record],
) -> CliResult {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if let Some(first) = records.first() {
                w.write_record(first.0.iter().map(|(k, _)| k.as_str()))
                    .map_err(|e| CliError::data(e.to_string()))?;
            }
            for r in records {
                w.write_record(r.0.iter().map(|(_, v)| csv_cell(v)))
                    .map_err(|e| CliError::data(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::data(e.to_string()))?;
            out.write_all(&bytes)?;
        }
        OutputFormat::Json => {
            let value = match records {
                [single] => single.to_json(),
                many => Value::Array(many.iter().map(Record::to_json).collect()),
            };
            let text = serde_json::to_string_pretty(&value).map_err(|e| CliError::data(e.to_string()))?;
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}
