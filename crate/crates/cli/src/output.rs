//! Report and table writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.path(name), text).with_context(|| format!("cannot write {name}"))
    }

    pub fn csv(&self, name: &str, table: &Table) -> Result<()> {
        fs::write(self.path(name), table.render()).with_context(|| format!("cannot write {name}"))
    }
}

/// Comma-separated table; floats use the shortest round-trip representation.
pub struct Table {
    header: Vec<String>,
    rows: Vec<String>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.header.len(), "row width");
        let mut line = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            match c {
                Cell::Int(v) => write!(line, "{v}").unwrap(),
                Cell::Float(v) => write!(line, "{v:?}").unwrap(),
                Cell::Missing => {}
            }
        }
        self.rows.push(line);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

pub enum Cell {
    Int(i64),
    Float(f64),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Float)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_round_trip_floats() {
        let mut t = Table::new(&["m", "area"]);
        t.row(&[(-2i32).into(), 0.1f64.into()]);
        t.row(&[3usize.into(), None.into()]);
        assert_eq!(t.render(), "m,area\n-2,0.1\n3,\n");
        let x = 1.0f64 / 3.0;
        let mut u = Table::new(&["x"]);
        u.row(&[x.into()]);
        let parsed: f64 = u.render().lines().nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, x);
    }
}
