//! CSV/JSON emission with a config-echo header and atomic writes.

use crate::config::{fmt, OutFormat};
use anyhow::{Context, Result};
use lgsf::sweep::{Cell, SweepTable};
use std::io::Write;
use std::path::Path;

fn cell_csv(c: &Cell) -> String {
    match c {
        Cell::Num(x) => fmt(*x),
        Cell::Text(s) => s.clone(),
        Cell::Bool(b) => b.to_string(),
        Cell::Missing => String::new(),
    }
}

fn cell_json(c: &Cell) -> serde_json::Value {
    match c {
        Cell::Num(x) => serde_json::json!(x),
        Cell::Text(s) => serde_json::json!(s),
        Cell::Bool(b) => serde_json::json!(b),
        Cell::Missing => serde_json::Value::Null,
    }
}

/// Renders the table with `#`-prefixed metadata lines echoing the config.
pub fn render_csv(command: &str, echo: &[(String, String)], table: &SweepTable) -> String {
    let mut out = String::new();
    out.push_str(&format!("# command = {command}\n"));
    for (k, v) in echo {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(cell_csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn render_json(command: &str, echo: &[(String, String)], table: &SweepTable) -> String {
    let config: serde_json::Map<String, serde_json::Value> = echo
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::json!(v)))
        .collect();
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: serde_json::Map<String, serde_json::Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| (c.clone(), cell_json(v)))
                .collect();
            serde_json::Value::Object(obj)
        })
        .collect();
    let doc = serde_json::json!({
        "command": command,
        "config": config,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

/// Writes atomically: temp file in the target directory, then rename. No
/// partial files on failure.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
            let tmp = match dir {
                Some(d) => d.join(format!(
                    ".{}.tmp",
                    path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
                )),
                None => Path::new(&format!(
                    ".{}.tmp",
                    path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
                ))
                .to_path_buf(),
            };
            {
                let mut f = std::fs::File::create(&tmp)
                    .with_context(|| format!("cannot create {}", tmp.display()))?;
                f.write_all(content.as_bytes())?;
                f.sync_all()?;
            }
            std::fs::rename(&tmp, path)
                .with_context(|| format!("cannot move output to {}", path.display()))?;
            Ok(())
        }
    }
}

pub fn emit(
    command: &str,
    format: OutFormat,
    echo: &[(String, String)],
    table: &SweepTable,
    path: Option<&Path>,
) -> Result<()> {
    let content = match format {
        OutFormat::Csv => render_csv(command, echo, table),
        OutFormat::Json => render_json(command, echo, table),
    };
    write_output(path, &content)
}
