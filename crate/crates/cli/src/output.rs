//! Rendering of reports as JSON, CSV or plain text.

use std::io::Write;

use serde_json::{Map, Value};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// A single record, or a table with a fixed column list.
pub enum Report {
    Record {
        command: &'static str,
        fields: Map<String, Value>,
    },
    Table {
        command: &'static str,
        meta: Map<String, Value>,
        columns: Vec<&'static str>,
        rows: Vec<Map<String, Value>>,
    },
}

pub fn render(report: &Report, format: Format, out: &mut impl Write) -> std::io::Result<()> {
    match format {
        Format::Json => render_json(report, out),
        Format::Csv => render_csv(report, out),
        Format::Text => render_text(report, out),
    }
}

fn render_json(report: &Report, out: &mut impl Write) -> std::io::Result<()> {
    let mut doc = Map::new();
    doc.insert("schema".into(), SCHEMA_VERSION.into());
    match report {
        Report::Record { command, fields } => {
            doc.insert("command".into(), (*command).into());
            doc.extend(fields.clone());
        }
        Report::Table {
            command,
            meta,
            rows,
            ..
        } => {
            doc.insert("command".into(), (*command).into());
            doc.extend(meta.clone());
            doc.insert(
                "rows".into(),
                Value::Array(rows.iter().cloned().map(Value::Object).collect()),
            );
        }
    }
    serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))?;
    writeln!(out)
}

/// Flatten nested objects into dotted keys; arrays stay as JSON text.
fn flatten(prefix: &str, value: &Value, into: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, into);
            }
        }
        other => into.push((prefix.to_string(), cell(other))),
    }
}

fn cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_error(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

fn render_csv(report: &Report, out: &mut impl Write) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    match report {
        Report::Record { fields, .. } => {
            let mut flat = Vec::new();
            flatten("", &Value::Object(fields.clone()), &mut flat);
            writer
                .write_record(flat.iter().map(|(k, _)| k))
                .map_err(csv_error)?;
            writer
                .write_record(flat.iter().map(|(_, v)| v))
                .map_err(csv_error)?;
        }
        Report::Table { columns, rows, .. } => {
            writer.write_record(columns).map_err(csv_error)?;
            for row in rows {
                writer
                    .write_record(
                        columns
                            .iter()
                            .map(|c| row.get(*c).map(cell).unwrap_or_default()),
                    )
                    .map_err(csv_error)?;
            }
        }
    }
    writer.flush()
}

fn render_text(report: &Report, out: &mut impl Write) -> std::io::Result<()> {
    match report {
        Report::Record { command, fields } => {
            writeln!(out, "# {command}")?;
            let mut flat = Vec::new();
            flatten("", &Value::Object(fields.clone()), &mut flat);
            let width = flat.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in flat {
                writeln!(out, "{k:<width$}  {v}")?;
            }
        }
        Report::Table {
            command,
            meta,
            columns,
            rows,
        } => {
            writeln!(out, "# {command}")?;
            let mut flat = Vec::new();
            flatten("", &Value::Object(meta.clone()), &mut flat);
            for (k, v) in flat {
                writeln!(out, "# {k}: {v}")?;
            }
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|row| {
                    columns
                        .iter()
                        .map(|c| row.get(*c).map(cell).unwrap_or_default())
                        .collect()
                })
                .collect();
            let widths: Vec<usize> = columns
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    cells
                        .iter()
                        .map(|r| r[i].len())
                        .chain([c.len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let line = |items: Vec<&str>| {
                items
                    .iter()
                    .zip(&widths)
                    .map(|(s, w)| format!("{s:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            writeln!(out, "{}", line(columns.to_vec()))?;
            for row in &cells {
                writeln!(out, "{}", line(row.iter().map(String::as_str).collect()))?;
            }
        }
    }
    Ok(())
}
