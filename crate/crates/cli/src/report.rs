//! Report emission: a header block, a summary object and optional rows.
//!
//! JSON reports are `{header, summary, rows}`. CSV reports start with `# `
//! comment lines holding the header and summary, followed by the rows (or the
//! summary as a single row when there are none). Wall time is never written
//! into reports, so equal runs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub version: &'static str,
    pub command: &'static str,
    /// Effective arguments after config expansion.
    pub args: Vec<String>,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub summary: Map<String, Value>,
    pub rows: Vec<Value>,
    /// Free text printed before the table on stdout.
    pub text: Option<String>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) -> CliResult<()> {
        self.summary.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Merge the fields of a serializable struct into the summary.
    pub fn extend(&mut self, value: impl Serialize) -> CliResult<()> {
        match serde_json::to_value(value)? {
            Value::Object(map) => {
                self.summary.extend(map);
                Ok(())
            }
            other => Err(CliError::Report(format!("expected an object, got {other}"))),
        }
    }

    pub fn push_row(&mut self, row: impl Serialize) -> CliResult<()> {
        self.rows.push(serde_json::to_value(row)?);
        Ok(())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn to_json(header: &Header, report: &Report) -> CliResult<String> {
    let doc = serde_json::json!({
        "header": header,
        "summary": report.summary,
        "rows": report.rows,
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn to_csv(header: &Header, report: &Report) -> CliResult<String> {
    let mut out = String::new();
    let _ = writeln!(out, "# version: {}", header.version);
    let _ = writeln!(out, "# command: {}", header.command);
    let _ = writeln!(out, "# args: {}", header.args.join(" "));
    let _ = writeln!(out, "# seed: {}", header.seed);
    let _ = writeln!(out, "# workers: {}", header.workers);
    let single;
    let rows: &[Value] = if report.rows.is_empty() {
        single = [Value::Object(report.summary.clone())];
        &single
    } else {
        let _ = writeln!(out, "# summary: {}", Value::Object(report.summary.clone()));
        &report.rows
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(Value::Object(first)) = rows.first() {
        let cols: Vec<&String> = first.keys().collect();
        w.write_record(cols.iter().map(|c| c.as_str()))?;
        for row in rows {
            let Value::Object(map) = row else {
                return Err(CliError::Report("CSV rows must be objects".into()));
            };
            w.write_record(cols.iter().map(|c| map.get(*c).map(cell).unwrap_or_default()))?;
        }
    }
    let body = w.into_inner().map_err(|e| CliError::Report(e.to_string()))?;
    out.push_str(&String::from_utf8(body).map_err(|e| CliError::Report(e.to_string()))?);
    Ok(out)
}

/// Human-readable rendering for stdout.
pub fn to_table(report: &Report) -> String {
    let mut out = String::new();
    if let Some(text) = &report.text {
        out.push_str(text);
        if !text.ends_with('\n') {
            out.push('\n');
        }
    }
    for (k, v) in &report.summary {
        let _ = writeln!(out, "{k} = {}", cell(v));
    }
    let Some(Value::Object(first)) = report.rows.first() else {
        return out;
    };
    let cols: Vec<&String> = first.keys().collect();
    let grid: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| cols.iter().map(|c| r.get(c.as_str()).map(cell).unwrap_or_default()).collect())
        .collect();
    let widths: Vec<usize> = cols
        .iter()
        .enumerate()
        .map(|(i, c)| grid.iter().map(|r| r[i].chars().count()).chain([c.chars().count()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    if !report.summary.is_empty() {
        out.push('\n');
    }
    let _ = writeln!(out, "{}", line(cols.iter().map(|c| c.as_str()).collect()));
    for r in &grid {
        let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
    }
    out
}

/// Write the report file, choosing CSV for a `.csv` extension.
pub fn write(path: &Path, header: &Header, report: &Report) -> CliResult<()> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let text = if is_csv { to_csv(header, report)? } else { to_json(header, report)? };
    fs::write(path, text)?;
    Ok(())
}
