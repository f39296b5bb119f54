use std::io::{self, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use crate::args::Format;

/// Flat table for CSV output.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// A command's result in every output shape.
#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub body: Map<String, Value>,
    pub table: Table,
    pub human: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: &'static str, config: Value) -> Self {
        Self {
            command,
            config,
            body: Map::new(),
            table: Table::default(),
            human: Vec::new(),
        }
    }

    pub fn field(&mut self, key: &str, value: impl Into<Value>) {
        self.body.insert(key.to_owned(), value.into());
    }

    pub fn line(&mut self, key: &str, value: impl Into<String>) {
        self.human.push((key.to_owned(), value.into()));
    }
}

pub fn render(report: &Report, format: Format, timestamp: bool) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    match format {
        Format::Json => {
            let mut obj = Map::new();
            obj.insert("command".into(), json!(report.command));
            obj.insert("config".into(), report.config.clone());
            for (k, v) in &report.body {
                obj.insert(k.clone(), v.clone());
            }
            if timestamp {
                let secs = SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0);
                obj.insert("timestamp".into(), json!(secs));
            }
            serde_json::to_writer_pretty(&mut out, &Value::Object(obj))?;
            out.push(b'\n');
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut out);
            w.write_record(&report.table.header)?;
            for row in &report.table.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Format::Human => {
            writeln!(out, "# {}", report.command)?;
            for (k, v) in config_lines(&report.config) {
                writeln!(out, "config.{k}: {v}")?;
            }
            for (k, v) in &report.human {
                writeln!(out, "{k}: {v}")?;
            }
        }
    }
    Ok(out)
}

fn config_lines(config: &Value) -> Vec<(String, String)> {
    match config {
        Value::Object(map) => map
            .iter()
            .map(|(k, v)| {
                let v = match v {
                    Value::Number(n) if n.is_f64() => n.as_f64().map(sig6).unwrap_or_default(),
                    Value::Number(n) => n.to_string(),
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                (k.clone(), v)
            })
            .collect(),
        _ => Vec::new(),
    }
}

/// Six significant digits, trailing zeros trimmed.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

pub fn opt_sig6(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_else(|| "none".into())
}

pub fn opt_csv(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
