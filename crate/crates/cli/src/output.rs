//! Report emission: comma-separated tables with a header row, written
//! atomically enough for batch use (full string assembled, then one write).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Environment variable that relocates relative output paths.
pub const OUT_DIR_ENV: &str = "DEALBID_OUT_DIR";

/// Applies the output-directory override: a relative report path lands under
/// `DEALBID_OUT_DIR` when that is set, an absolute path is left alone.
pub fn resolve_out_path(out: &Path) -> PathBuf {
    if out.is_absolute() {
        return out.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(out),
        _ => out.to_path_buf(),
    }
}

/// One report table. Rows are built as strings so every column formats
/// identically no matter which experiment produced it; floats use the
/// shortest round-trip decimal form.
pub struct Table {
    header: &'static str,
    rows: Vec<String>,
}

impl Table {
    pub fn new(header: &'static str) -> Table {
        Table { header, rows: Vec::new() }
    }

    pub fn row(&mut self, fields: &[Field]) {
        let mut line = String::new();
        for (i, field) in fields.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            match field {
                Field::Str(s) => line.push_str(s),
                Field::Int(v) => {
                    let _ = write!(line, "{v}");
                }
                Field::Float(v) => {
                    let _ = write!(line, "{v}");
                }
                Field::Bool(b) => line.push(if *b { '1' } else { '0' }),
                Field::OptInt(v) => {
                    if let Some(v) = v {
                        let _ = write!(line, "{v}");
                    }
                }
            }
        }
        self.rows.push(line);
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.header.len() + 1 + self.rows.len() * 64);
        out.push_str(self.header);
        out.push('\n');
        for row in &self.rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.render())
    }
}

pub enum Field<'a> {
    Str(&'a str),
    Int(u64),
    Float(f64),
    Bool(bool),
    /// Empty cell when absent.
    OptInt(Option<u64>),
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("cannot create output directory {}", parent.display()))?;
        }
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
