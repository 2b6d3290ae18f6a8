//! CSV and JSON artifacts.
//!
//! Artifacts are collected in memory and written in one go at the end of a
//! run, so a run that fails validation never touches the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pxlap_core::GridFunction;
use serde::Serialize;

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Default)]
pub struct Artifacts(Vec<Artifact>);

impl Artifacts {
    pub fn push(&mut self, name: &str, contents: String) {
        self.0.push(Artifact {
            name: name.to_string(),
            contents,
        });
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) {
        self.push(name, to_json(value));
    }

    /// Fields sharing a grid, one value column each.
    pub fn csv(&mut self, name: &str, columns: &[(&str, &GridFunction)]) {
        self.push(name, fields_csv(columns));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|a| a.name.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.contents.as_str())
    }

    /// Writes every artifact into `dir` (created if needed).
    pub fn write_all(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        self.0
            .iter()
            .map(|a| {
                let path = dir.join(&a.name);
                fs::write(&path, &a.contents)?;
                Ok(path)
            })
            .collect()
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// `x[,y],<columns>` with 17 significant digits, row-major node order.
pub fn fields_csv(columns: &[(&str, &GridFunction)]) -> String {
    let grid = columns[0].1.grid();
    debug_assert!(columns.iter().all(|(_, f)| f.grid() == grid));
    let mut out = String::new();
    out.push_str(if grid.dim() == 1 { "x" } else { "x,y" });
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for k in 0..grid.len() {
        let [x, y] = grid.point(k);
        write!(out, "{x:.16e}").unwrap();
        if grid.dim() == 2 {
            write!(out, ",{y:.16e}").unwrap();
        }
        for (_, f) in columns {
            write!(out, ",{:.16e}", f.get(k)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Rows of numbers under a header, 17 significant digits.
pub fn table_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
