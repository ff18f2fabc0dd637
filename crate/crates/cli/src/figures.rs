//! Dataset presets for the six published figures.

use std::path::Path;

use anyhow::{bail, Result};

use crate::config::{GridSpec, InitialState, RunConfig, Temperature, SPECTRAL_CLASSES, STRONG_ETAS, WEAK_ETAS};
use crate::output::{write_json, Manifest, Panel, Series, FORMAT_VERSION, MANIFEST_FILE};
use crate::run::{point_file, run_sweep, RunReport};

pub const FIGURES: [&str; 6] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"];

/// Grid and coupling overrides, mainly for quick previews.
#[derive(Debug, Clone, Default)]
pub struct FigureOverrides {
    pub t_end: Option<f64>,
    pub steps: Option<usize>,
    pub rows: Option<usize>,
    pub eta: Option<Vec<f64>>,
}

pub fn figure_config(name: &str, overrides: &FigureOverrides) -> Result<RunConfig> {
    let mut cfg = RunConfig {
        name: name.to_string(),
        ..RunConfig::default()
    };
    cfg.reservoir.s = SPECTRAL_CLASSES.to_vec();
    cfg.reservoir.eta = WEAK_ETAS.iter().chain(&STRONG_ETAS).copied().collect();
    cfg.temperature = Temperature::Kelvin(2.0);
    cfg.grid = GridSpec {
        t_end: 50.0,
        steps: 5000,
        rows: None,
    };
    cfg.initial = InitialState::Thermal { n0: 50.0 };
    let o = &mut cfg.outputs;
    match name {
        "fig1" | "fig2" => {
            // |u| and kappa do not depend on temperature
            cfg.temperature = Temperature::Theta(0.0);
            o.observables = false;
        }
        "fig3" => o.observables = false,
        "fig4" => {
            cfg.reservoir.s = vec![0.5];
            cfg.reservoir.eta = vec![0.1];
            cfg.grid = GridSpec {
                t_end: 500.0,
                steps: 10_000,
                rows: Some(1000),
            };
        }
        "fig5" => {}
        "fig6" => cfg.temperature = Temperature::Kelvin(0.002),
        _ => bail!("unknown figure {name:?}; expected one of {}", FIGURES.join(", ")),
    }
    if let Some(t) = overrides.t_end {
        cfg.grid.t_end = t;
    }
    if let Some(n) = overrides.steps {
        cfg.grid.steps = n;
    }
    if let Some(r) = overrides.rows {
        cfg.grid.rows = Some(r);
    }
    if let Some(eta) = &overrides.eta {
        cfg.reservoir.eta = eta.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Panels of a figure: one per coupling, the three spectral classes and the
/// Born-Markov curve, which is the same for all classes when omega_c = 1.
pub fn figure_manifest(cfg: &RunConfig) -> Manifest {
    let name = cfg.name.as_str();
    let file = |s: f64, eta: f64| format!("{}.csv", point_file(cfg, &crate::config::Point { s, eta }));
    let class = |s: f64| match s {
        s if s < 1.0 => "sub-Ohmic",
        1.0 => "Ohmic",
        _ => "super-Ohmic",
    };
    let mut panels = Vec::new();
    if name == "fig4" {
        let (s, eta) = (cfg.reservoir.s[0], cfg.reservoir.eta[0]);
        let csv = file(s, eta);
        let series = |cols: &[(&str, &str)]| {
            cols.iter()
                .map(|(c, l)| Series {
                    csv: csv.clone(),
                    column: c.to_string(),
                    label: l.to_string(),
                    dashed: *c != cols[0].0,
                })
                .collect()
        };
        panels.push(Panel {
            name: "fig4a".into(),
            title: format!("s = {s}, eta = {eta}"),
            y_label: "u(t)".into(),
            series: series(&[("re_u", "Re u"), ("im_u", "Im u")]),
        });
        panels.push(Panel {
            name: "fig4b".into(),
            title: format!("s = {s}, eta = {eta}"),
            y_label: "photon number".into(),
            series: series(&[("v", "v(t)"), ("n", "n(t)")]),
        });
    } else {
        let (column, y_label) = match name {
            "fig1" => ("abs_u", "|u(t)|"),
            "fig2" => ("kappa", "kappa(t)"),
            "fig3" => ("v", "v(t)"),
            _ => ("n", "n(t)"),
        };
        for &eta in &cfg.reservoir.eta {
            let mut series: Vec<Series> = cfg
                .reservoir
                .s
                .iter()
                .map(|&s| Series {
                    csv: file(s, eta),
                    column: column.to_string(),
                    label: format!("{} (s = {s})", class(s)),
                    dashed: false,
                })
                .collect();
            series.push(Series {
                csv: file(cfg.reservoir.s[0], eta),
                column: format!("{column}_bm"),
                label: "Born-Markov".into(),
                dashed: true,
            });
            panels.push(Panel {
                name: format!("{name}_eta{eta}"),
                title: format!("eta = {eta}"),
                y_label: y_label.into(),
                series,
            });
        }
    }
    Manifest {
        format_version: FORMAT_VERSION,
        title: name.to_string(),
        panels,
    }
}

pub fn reproduce_figure(name: &str, overrides: &FigureOverrides, dir: &Path, workers: usize) -> Result<RunReport> {
    let cfg = figure_config(name, overrides)?;
    let report = run_sweep(&cfg, dir, workers)?;
    write_json(&dir.join(MANIFEST_FILE), &figure_manifest(&cfg))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let d = FigureOverrides::default();
        let f1 = figure_config("fig1", &d).unwrap();
        assert_eq!(f1.points().len(), 24);
        assert_eq!(figure_manifest(&f1).panels.len(), 8);
        let f4 = figure_config("fig4", &d).unwrap();
        assert_eq!(f4.points().len(), 1);
        assert_eq!(figure_manifest(&f4).panels.len(), 2);
        let f5 = figure_config("fig5", &d).unwrap();
        assert!((f5.theta() - 12.458).abs() < 0.005);
        assert_eq!(f5.initial, InitialState::Thermal { n0: 50.0 });
        let f6 = figure_config("fig6", &d).unwrap();
        assert!((f6.theta() - 0.012458).abs() < 5e-6);
        assert!(figure_config("fig7", &d).is_err());
    }

    #[test]
    fn manifest_references_existing_columns() {
        for name in FIGURES {
            let cfg = figure_config(name, &FigureOverrides::default()).unwrap();
            let manifest = figure_manifest(&cfg);
            for point in cfg.points() {
                let file = format!("{}.csv", point_file(&cfg, &point));
                assert!(manifest.csv_files().contains(&file) || name == "fig4");
            }
        }
    }
}
