//! Result serialization. Every artifact starts with the tool version, the
//! config hash and the seed.
//!
//! * CSV: `#` comment lines, then a header row and RFC 4180 records. Floats
//!   use 17 significant digits (`{:.16e}`), which round-trip exactly.
//! * JSON: `{"meta": …, "results": …}`; floats in shortest round-trip form.
//! * JSONL: a `{"meta": …}` line, then one record per line.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Str(String),
    Empty,
}

impl Cell {
    pub fn ty(t: usize) -> Cell {
        Cell::Int(t as i64 + 1)
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Str(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) => json!(x),
            Cell::Str(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `#` lines under the meta line.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Rows as JSON objects keyed by column.
    pub fn records(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.to_json())).collect()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    pub results: Value,
}

pub fn render(report: &Report, meta: &Meta, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => render_csv(report, meta),
        Format::Json => {
            let doc = json!({"meta": meta, "results": report.results});
            let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Jsonl => {
            let mut out = Vec::new();
            let mut line = |v: &Value| -> Result<(), CliError> {
                serde_json::to_writer(&mut out, v).map_err(|e| CliError::Io(e.to_string()))?;
                out.push(b'\n');
                Ok(())
            };
            line(&json!({ "meta": meta }))?;
            for r in report.table.records() {
                line(&r)?;
            }
            Ok(out)
        }
    }
}

fn render_csv(report: &Report, meta: &Meta) -> Result<Vec<u8>, CliError> {
    let mut out =
        format!("# {} {} command={} config_sha256={}", meta.tool, meta.version, meta.command, meta.config_sha256);
    if let Some(seed) = meta.seed {
        out.push_str(&format!(" seed={seed}"));
    }
    out.push('\n');
    for n in &report.table.notes {
        out.push_str(&format!("# {n}\n"));
    }
    let mut bytes = out.into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut bytes);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&report.table.columns).map_err(io)?;
        for row in &report.table.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(bytes)
}

/// Comment lines, header and records of a CSV artifact.
pub type ParsedCsv = (Vec<String>, Vec<String>, Vec<Vec<String>>);

/// Parses a CSV artifact back into its parts.
pub fn parse_csv(text: &str) -> Result<ParsedCsv, CliError> {
    let comments: Vec<String> = text.lines().take_while(|l| l.starts_with('#')).map(str::to_owned).collect();
    let body: String = text.lines().skip(comments.len()).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let header = r.headers().map_err(io)?.iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_owned).collect()).map_err(io))
        .collect::<Result<_, _>>()?;
    Ok((comments, header, rows))
}
