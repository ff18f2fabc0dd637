//! Parameter sweeps: one CSV, one metadata sidecar and optionally one
//! populations CSV per point, plus a single summary for the whole sweep.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use cavity_core::dynamics::{displaced_thermal_populations, geometric_populations, SINGULAR_AMPLITUDE};
use cavity_core::greens::{detect_plateau, MAX_STEP_TIMES_CUTOFF};
use cavity_core::oracle::exact_uv_oracle;
use cavity_core::*;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{InitialState, Point, RunConfig, STRONG_ETAS, WEAK_ETAS};
use crate::output::{write_json, Manifest, Panel, Series, Table, FORMAT_VERSION, SUMMARY_FILE};

/// Fraction of the rows used for steady-state estimates.
pub const TRAILING_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub label: String,
    pub s: f64,
    pub eta: f64,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_abs_u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_inf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_inf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_mode: Option<BoundModeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<Flags>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleDeviation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flags {
    /// `|u|` settles to a nonzero value over the trailing window.
    pub u_plateau: bool,
    pub kappa_negative: bool,
    /// First time at which `|u|` fell below the singularity threshold.
    pub singular_coefficients_at: Option<f64>,
    pub invariants_hold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleDeviation {
    pub max_u_error: f64,
    pub max_v_error: f64,
}

#[derive(Debug, Clone)]
pub struct PointOutput {
    pub table: Table,
    pub populations: Option<Table>,
    pub summary: PointSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub format_version: u32,
    pub points: Vec<PointSummary>,
}

impl RunReport {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.status != "ok").count()
    }
}

pub fn trailing_mean(values: &[f64]) -> f64 {
    let window = ((values.len() as f64 * TRAILING_FRACTION).ceil() as usize).clamp(1, values.len());
    let tail = &values[values.len() - window..];
    tail.iter().sum::<f64>() / window as f64
}

pub fn point_file(cfg: &RunConfig, point: &Point) -> String {
    format!("{}_{}", cfg.name, point.label())
}

pub fn compute_point(cfg: &RunConfig, point: Point) -> Result<PointOutput> {
    let theta = cfg.theta();
    let spectral = SpectralDensity::new(point.eta, point.s, cfg.reservoir.omega_c)?;
    let rc = ReservoirConfig::new(spectral, theta)?;
    let grid = TimeGrid::new(cfg.grid.t_end, cfg.grid.steps)?;
    let gf = GreenFunctions::compute(&rc, grid, Some(cfg.grid.stride()))?;
    let bm = BmSolution::new(&rc)?;
    let ct = coefficients(&gf);
    let times = gf.sample_times();
    let u = gf.sampled_u();
    let v = gf.v().to_vec();
    let (o, c) = (cfg.outputs, cfg.compare);
    let alpha0 = cfg.initial.alpha();
    let n0 = cfg.initial.mean();
    let abs_u: Vec<f64> = u.iter().map(|z| z.norm()).collect();
    let n: Vec<f64> = u.iter().zip(&v).map(|(z, v)| z.norm_sqr() * n0 + v).collect();

    let mut table = Table::default();
    table.push("t", times.clone());
    let mut oracle = None;
    if o.green_functions {
        table.push("re_u", u.iter().map(|z| z.re).collect());
        table.push("im_u", u.iter().map(|z| z.im).collect());
        table.push("abs_u", abs_u.clone());
        table.push("v", v.clone());
        if c.bm {
            let u_bm: Vec<Complex64> = times.iter().map(|&t| bm.u(t)).collect();
            table.push("re_u_bm", u_bm.iter().map(|z| z.re).collect());
            table.push("im_u_bm", u_bm.iter().map(|z| z.im).collect());
            table.push("abs_u_bm", u_bm.iter().map(|z| z.norm()).collect());
            table.push("v_bm", times.iter().map(|&t| bm.v(t)).collect());
        }
        if c.oracle {
            let dr = discretize_reservoir(&spectral, c.oracle_modes, c.oracle_bandwidth * spectral.omega_c())?;
            dr.check_window(cfg.grid.t_end)?;
            let (u_ex, v_ex) = exact_uv_oracle(&dr, theta, OMEGA0, &times)?;
            oracle = Some(OracleDeviation {
                max_u_error: u.iter().zip(&u_ex).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
                max_v_error: v.iter().zip(&v_ex).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            });
            table.push("abs_u_oracle", u_ex.iter().map(|z| z.norm()).collect());
            table.push("v_oracle", v_ex);
        }
    }
    if o.coefficients {
        let flagged = |x: &[f64]| -> Vec<f64> {
            x.iter()
                .zip(&ct.valid)
                .map(|(&x, &ok)| if ok { x } else { 0.0 })
                .collect()
        };
        table.push("omega_prime", flagged(&ct.omega_prime));
        table.push("kappa", flagged(&ct.kappa));
        table.push("kappa_tilde", flagged(&ct.kappa_tilde));
        table.push("valid", ct.valid.iter().map(|&ok| if ok { 1.0 } else { 0.0 }).collect());
        if c.bm {
            let rows = times.len();
            table.push("omega_prime_bm", vec![bm.omega_prime; rows]);
            table.push("kappa_bm", vec![bm.kappa; rows]);
            table.push("kappa_tilde_bm", vec![bm.kappa_tilde(); rows]);
        }
        if c.second_order {
            let second = second_order_coefficients(&rc, gf.grid())?;
            let pick = |x: &[f64]| -> Vec<f64> { (0..times.len()).map(|j| x[gf.sample_index(j)]).collect() };
            table.push("omega_prime_2nd", pick(&second.omega_prime));
            table.push("kappa_2nd", pick(&second.kappa));
            table.push("kappa_tilde_2nd", pick(&second.kappa_tilde));
        }
    }
    if o.observables {
        table.push("n", n.clone());
        table.push("re_a", u.iter().map(|z| (z * alpha0).re).collect());
        table.push("im_a", u.iter().map(|z| (z * alpha0).im).collect());
        if c.bm {
            table.push("n_bm", times.iter().map(|&t| bm.photon_number(t, n0)).collect());
        }
    }

    let populations = o.populations.then(|| {
        let levels = o.population_levels;
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(times.len());
        for j in 0..times.len() {
            let (probs, tail) = match cfg.initial {
                InitialState::Coherent { .. } => {
                    let alpha = u[j] * alpha0;
                    let dim = fock_cutoff(alpha.norm_sqr() + v[j]).max(levels);
                    let p = displaced_thermal_populations(alpha, v[j], dim);
                    let tail = p[levels..].iter().sum::<f64>();
                    (p[..levels].to_vec(), tail)
                }
                _ => {
                    let mean = n[j];
                    let tail = (mean / (1.0 + mean)).powi(levels as i32);
                    (geometric_populations(mean, levels), tail)
                }
            };
            let mut row = probs;
            row.push(tail);
            rows.push(row);
        }
        let mut t = Table::default();
        t.push("t", times.clone());
        for k in 0..=levels {
            let name = if k == levels {
                "tail".to_string()
            } else {
                format!("p{k}")
            };
            t.push(name, rows.iter().map(|r| r[k]).collect());
        }
        t
    });

    let window = ((times.len() as f64 * TRAILING_FRACTION).ceil() as usize).max(1);
    let steady_abs_u = trailing_mean(&abs_u);
    let summary = PointSummary {
        label: point.label(),
        s: point.s,
        eta: point.eta,
        status: "ok",
        error: None,
        steady_abs_u: Some(steady_abs_u),
        v_inf: Some(trailing_mean(&v)),
        n_inf: Some(trailing_mean(&n)),
        bound_mode: Some(bound_mode_diagnostic(&spectral)?),
        flags: Some(Flags {
            u_plateau: steady_abs_u > 1e-2 && detect_plateau(&abs_u, window, 1e-3).is_some(),
            kappa_negative: ct.kappa.iter().zip(&ct.valid).any(|(&k, &ok)| ok && k < 0.0),
            singular_coefficients_at: ct.first_invalid_time(),
            invariants_hold: gf.invariants().holds(),
        }),
        oracle,
    };
    Ok(PointOutput {
        table,
        populations,
        summary,
    })
}

fn metadata(cfg: &RunConfig, point: &Point, output: &PointOutput) -> serde_json::Value {
    json!({
        "format_version": FORMAT_VERSION,
        "code_version": env!("CARGO_PKG_VERSION"),
        "point": point,
        "columns": output.table.names(),
        "derived": {
            "theta": cfg.theta(),
            "dt": cfg.grid.dt(),
            "row_stride": cfg.grid.stride(),
            "photon_energy_micro_ev": cfg.units.scale().photon_energy_micro_ev(),
        },
        "solver": {
            "u_scheme": "implicit trapezoid",
            "v_method": "circulant FFT double convolution",
            "rate_route": "equation of motion (du/dt = -i u - memory integral)",
            "max_dt_times_omega_c": MAX_STEP_TIMES_CUTOFF,
            "singular_amplitude": SINGULAR_AMPLITUDE,
            "kernel_quadrature": "adaptive Gauss-Kronrod 21, abs tol 1e-10 eta omega_c^2",
            "invalid_rows": "coefficients written as 0 with valid = 0",
        },
        "eta_defaults": {
            "weak": WEAK_ETAS,
            "strong": STRONG_ETAS,
            "note": "intermediate coupling values are implementation defaults",
        },
        "config": cfg,
    })
}

fn write_point(cfg: &RunConfig, point: &Point, output: &PointOutput, dir: &Path) -> Result<()> {
    let stem = point_file(cfg, point);
    output.table.write_csv(&dir.join(format!("{stem}.csv")))?;
    if let Some(p) = &output.populations {
        p.write_csv(&dir.join(format!("{stem}_populations.csv")))?;
    }
    write_json(&dir.join(format!("{stem}.meta.json")), &metadata(cfg, point, output))
}

fn failed(point: &Point, err: &anyhow::Error) -> PointSummary {
    PointSummary {
        label: point.label(),
        s: point.s,
        eta: point.eta,
        status: "error",
        error: Some(format!("{err:#}")),
        steady_abs_u: None,
        v_inf: None,
        n_inf: None,
        bound_mode: None,
        flags: None,
        oracle: None,
    }
}

/// Run every point of the sweep on `workers` threads. Points that fail are
/// reported in the summary without stopping the others.
pub fn run_sweep(cfg: &RunConfig, dir: &Path, workers: usize) -> Result<RunReport> {
    cfg.validate()?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let points = cfg.points();
    let summaries = pool.install(|| {
        points
            .par_iter()
            .map(|point| {
                match compute_point(cfg, *point).and_then(|out| {
                    write_point(cfg, point, &out, dir)?;
                    Ok(out.summary)
                }) {
                    Ok(summary) => summary,
                    Err(err) => failed(point, &err),
                }
            })
            .collect::<Vec<_>>()
    });
    let report = RunReport {
        format_version: FORMAT_VERSION,
        points: summaries,
    };
    write_json(&dir.join(SUMMARY_FILE), &report)?;
    fs::write(dir.join(format!("{}.toml", cfg.name)), cfg.to_toml())?;
    Ok(report)
}

/// Panels for a plain run: one per point and quantity.
pub fn run_manifest(cfg: &RunConfig) -> Manifest {
    let mut panels = Vec::new();
    let o = cfg.outputs;
    let c = cfg.compare;
    for point in cfg.points() {
        let csv = format!("{}.csv", point_file(cfg, &point));
        let mut quantities: Vec<(&str, &str, bool)> = Vec::new();
        if o.green_functions {
            quantities.push(("abs_u", "|u(t)|", true));
            quantities.push(("v", "v(t)", true));
        }
        if o.coefficients {
            quantities.push(("kappa", "kappa(t)", true));
        }
        if o.observables {
            quantities.push(("n", "n(t)", true));
        }
        for (column, label, has_bm) in quantities {
            let mut series = vec![Series {
                csv: csv.clone(),
                column: column.to_string(),
                label: "exact".into(),
                dashed: false,
            }];
            if c.bm && has_bm {
                series.push(Series {
                    csv: csv.clone(),
                    column: format!("{column}_bm"),
                    label: "Born-Markov".into(),
                    dashed: true,
                });
            }
            if c.oracle && matches!(column, "abs_u" | "v") {
                series.push(Series {
                    csv: csv.clone(),
                    column: format!("{column}_oracle"),
                    label: "discrete bath".into(),
                    dashed: true,
                });
            }
            if c.second_order && column == "kappa" {
                series.push(Series {
                    csv: csv.clone(),
                    column: "kappa_2nd".into(),
                    label: "second order".into(),
                    dashed: true,
                });
            }
            panels.push(Panel {
                name: format!("{}_{}_{column}", cfg.name, point.label()),
                title: format!("s = {}, eta = {}", point.s, point.eta),
                y_label: label.to_string(),
                series,
            });
        }
    }
    Manifest {
        format_version: FORMAT_VERSION,
        title: cfg.name.clone(),
        panels,
    }
}
