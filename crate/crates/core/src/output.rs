//! CSV emission with fixed formatting so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    Int(i64),
    Float(f64),
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Float(v)
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v as i64)
    }
}

impl From<i64> for Field {
    fn from(v: i64) -> Self {
        Field::Int(v)
    }
}

impl Field {
    fn render(self) -> String {
        match self {
            Field::Int(i) => i.to_string(),
            Field::Float(f) => float(f),
        }
    }
}

/// One header line, then one line per row.
pub fn render_csv(header: &[&str], rows: &[Vec<Field>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|f| f.render()).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<Field>]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, render_csv(header, rows))?;
    Ok(path)
}

/// File name of a solution snapshot, e.g. `solution_t0.5.csv`.
pub fn snapshot_name(t: f64) -> String {
    format!("solution_t{t}.csv")
}
