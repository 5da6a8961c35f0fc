use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct Row {
    value: f64,
}

pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    reader
        .deserialize::<Row>()
        .enumerate()
        .map(|(i, r)| {
            r.map(|r| r.value)
                .with_context(|| format!("{}: bad row {}", path.display(), i + 1))
        })
        .collect()
}

pub fn write_values(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    for &value in values {
        w.serialize(Row { value })?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes to `path` if given, otherwise to stdout.
pub fn emit<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            std::io::stdout().write_all(to_json(value)?.as_bytes())?;
            Ok(())
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))
}

pub fn write_csv_rows(path: &Path, header: [&str; 2], rows: impl IntoIterator<Item = (String, usize)>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header)?;
    for (k, v) in rows {
        w.write_record([k, v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn error_kind(e: &arseg::Error) -> &'static str {
    use arseg::Error::*;
    match e {
        InvalidSpec(_) => "invalid-spec",
        NonStationary(_) => "non-stationary",
        Empty => "empty",
        TooShort { .. } => "too-short",
        NonFinite(_) => "non-finite",
        DegenerateSeries(_) => "degenerate-series",
        DomainError(_) => "domain-error",
        SingularMatrix(_) => "singular-matrix",
        Infeasible(_) => "infeasible",
        OutOfRange { .. } => "out-of-range",
        InvalidVector(_) => "invalid-vector",
    }
}

/// Structured error report for stderr.
pub fn error_json(e: &anyhow::Error) -> String {
    let kind = e
        .chain()
        .find_map(|c| c.downcast_ref::<arseg::Error>())
        .map_or("io", error_kind);
    serde_json::json!({
        "schema": arseg::SCHEMA,
        "error": { "kind": kind, "message": format!("{e:#}") },
    })
    .to_string()
}
