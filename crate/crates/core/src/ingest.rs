//! Clinical free-text records read from JSON-lines or CSV files.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One extracted text field of a clinical database row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub record_id: String,
    pub table: String,
    pub field: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patient_ref: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IngestFormat {
    Jsonl,
    Csv,
}

impl IngestFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" | "json" => Some(Self::Jsonl),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

impl FromStr for IngestFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Ok(Self::Jsonl),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown ingest format {other:?} (expected jsonl or csv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based line number in the source file.
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: usize,
    pub reasons: Vec<Rejection>,
}

/// Records that parsed, with their row numbers, and rows that did not.
#[derive(Debug, Default)]
pub struct ParsedRecords {
    pub records: Vec<(usize, AnnotationRecord)>,
    pub rejections: Vec<Rejection>,
}

const CSV_REQUIRED: [&str; 4] = ["record_id", "table", "field", "text"];

/// Parses file contents. Malformed rows become rejections; only a missing or
/// incomplete CSV header fails the whole input.
pub fn parse_records(text: &str, format: IngestFormat) -> Result<ParsedRecords> {
    match format {
        IngestFormat::Jsonl => Ok(parse_jsonl(text)),
        IngestFormat::Csv => parse_csv(text),
    }
}

pub fn read_records(path: &Path, format: IngestFormat) -> Result<ParsedRecords> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text, format)
}

fn parse_jsonl(text: &str) -> ParsedRecords {
    let mut out = ParsedRecords::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<AnnotationRecord>(line) {
            Ok(r) => out.records.push((i + 1, r)),
            Err(e) => out.rejections.push(Rejection { row: i + 1, reason: format!("malformed row: {e}") }),
        }
    }
    out
}

fn parse_csv(text: &str) -> Result<ParsedRecords> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Validation(format!("unreadable CSV header: {e}")))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut positions = Vec::new();
    for name in CSV_REQUIRED {
        positions.push(column(name).ok_or_else(|| Error::Validation(format!("CSV header lacks column {name:?}")))?);
    }
    let patient = column("patient_ref");

    let mut out = ParsedRecords::default();
    for row in reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                out.rejections.push(Rejection { row: line, reason: format!("malformed row: {e}") });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != headers.len() {
            out.rejections.push(Rejection {
                row: line,
                reason: format!("malformed row: expected {} fields, found {}", headers.len(), row.len()),
            });
            continue;
        }
        let get = |i: usize| row.get(i).unwrap_or_default().to_string();
        let record = AnnotationRecord {
            record_id: get(positions[0]),
            table: get(positions[1]),
            field: get(positions[2]),
            text: get(positions[3]),
            patient_ref: patient.map(get).filter(|p| !p.is_empty()),
        };
        out.records.push((line, record));
    }
    Ok(out)
}

/// Field-level checks that do not depend on what is already stored.
pub fn check_record(record: &AnnotationRecord) -> std::result::Result<(), String> {
    if record.record_id.trim().is_empty() {
        return Err("empty record_id".to_string());
    }
    if record.text.trim().is_empty() {
        return Err("empty text".to_string());
    }
    Ok(())
}
