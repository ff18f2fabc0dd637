//! CSV tables, metadata sidecars and the plot manifest.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Version of the CSV, metadata, summary and manifest layouts.
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

/// Column-major table with a fixed column order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.columns.push((name.into(), values));
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, v)| v.len())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some((name, _)) = self.columns.iter().find(|(_, v)| v.len() != self.rows()) {
            bail!("column {name} has a different length");
        }
        if let Some((name, _)) = self.columns.iter().find(|(_, v)| v.iter().any(|x| !x.is_finite())) {
            bail!("column {name} contains a non-finite value");
        }
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(self.names())?;
        for i in 0..self.rows() {
            w.write_record(self.columns.iter().map(|(_, v)| format_number(v[i])))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut columns: Vec<(String, Vec<f64>)> = names.into_iter().map(|n| (n, Vec::new())).collect();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            for (k, field) in record.iter().enumerate() {
                let x: f64 = field
                    .parse()
                    .with_context(|| format!("{} row {}: bad number {field:?}", path.display(), line + 2))?;
                columns[k].1.push(x);
            }
        }
        Ok(Self { columns })
    }
}

/// Shortest representation that parses back to the same value.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Plot layout of a dataset directory: one image per panel, each drawn from
/// CSV columns only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub title: String,
    pub panels: Vec<Panel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    /// Image file stem.
    pub name: String,
    pub title: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub csv: String,
    pub column: String,
    pub label: String,
    #[serde(default)]
    pub dashed: bool,
}

impl Manifest {
    pub fn csv_files(&self) -> Vec<String> {
        let mut files: Vec<String> = self
            .panels
            .iter()
            .flat_map(|p| p.series.iter().map(|s| s.csv.clone()))
            .collect();
        files.sort();
        files.dedup();
        files
    }
}
