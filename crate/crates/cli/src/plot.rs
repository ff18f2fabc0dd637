//! SVG line plots drawn from a dataset directory's CSV files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use plotters::prelude::*;

use crate::output::{Manifest, Panel, Table, MANIFEST_FILE, SUMMARY_FILE};

const PALETTE: [RGBColor; 6] = [
    RGBColor(190, 30, 160),
    RGBColor(210, 40, 40),
    RGBColor(30, 80, 200),
    RGBColor(20, 140, 60),
    RGBColor(230, 130, 0),
    RGBColor(0, 0, 0),
];

fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        bail!(
            "{} holds no dataset; expected {MANIFEST_FILE}, {SUMMARY_FILE} and the per-point CSV files written by `run` or `figure`",
            dir.display()
        );
    }
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Render every panel of the manifest in `dir` into `out` (default
/// `dir/plots`). Returns the written files in manifest order.
pub fn emit_plots(dir: &Path, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let manifest = load_manifest(dir)?;
    let missing: Vec<String> = manifest
        .csv_files()
        .into_iter()
        .filter(|f| !dir.join(f).exists())
        .collect();
    if !missing.is_empty() {
        bail!("missing dataset files in {}: {}", dir.display(), missing.join(", "));
    }
    let mut tables = BTreeMap::new();
    for file in manifest.csv_files() {
        tables.insert(file.clone(), Table::read_csv(&dir.join(&file))?);
    }
    let mut problems = Vec::new();
    for panel in &manifest.panels {
        for s in &panel.series {
            let table = &tables[&s.csv];
            for column in ["t", s.column.as_str()] {
                if table.column(column).is_none() {
                    problems.push(format!("{}: column {column}", s.csv));
                }
            }
        }
    }
    if !problems.is_empty() {
        problems.sort();
        problems.dedup();
        bail!("missing columns: {}", problems.join(", "));
    }
    let out = out.map_or_else(|| dir.join("plots"), Path::to_path_buf);
    fs::create_dir_all(&out)?;
    manifest
        .panels
        .iter()
        .map(|panel| {
            let path = out.join(format!("{}.svg", panel.name));
            draw_panel(panel, &tables, &path)?;
            Ok(path)
        })
        .collect()
}

type Curve<'a> = (&'a str, bool, Vec<(f64, f64)>);

fn draw_panel(panel: &Panel, tables: &BTreeMap<String, Table>, path: &Path) -> Result<()> {
    let curves: Vec<Curve> = panel
        .series
        .iter()
        .map(|s| {
            let t = &tables[&s.csv];
            let x = t.column("t").unwrap();
            let y = t.column(&s.column).unwrap();
            (
                s.label.as_str(),
                s.dashed,
                x.iter().copied().zip(y.iter().copied()).collect(),
            )
        })
        .collect();
    let points = curves.iter().flat_map(|c| c.2.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0 < x1) {
        x1 = x0 + 1.0;
    }
    let pad = if y1 > y0 {
        0.05 * (y1 - y0)
    } else {
        0.5 * y0.abs().max(1.0)
    };
    let (y0, y1) = (y0 - pad, y1 + pad);

    let root = SVGBackend::new(path, (800, 520)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| anyhow!("{e}"))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(&panel.title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| anyhow!("{e}"))?;
    chart
        .configure_mesh()
        .x_desc("omega0 t")
        .y_desc(panel.y_label.as_str())
        .draw()
        .map_err(|e| anyhow!("{e}"))?;
    for (i, (label, dashed, data)) in curves.into_iter().enumerate() {
        let color = if dashed { BLACK } else { PALETTE[i % PALETTE.len()] };
        let style = color.stroke_width(2);
        let series = if dashed {
            chart.draw_series(DashedLineSeries::new(data, 6, 4, style))
        } else {
            chart.draw_series(LineSeries::new(data, style))
        }
        .map_err(|e| anyhow!("{e}"))?;
        series
            .label(label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| anyhow!("{e}"))?;
    root.present().map_err(|e| anyhow!("{e}"))?;
    Ok(())
}
