use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use cavity_cli::config::{InitialState, RunConfig, Temperature, Units};
use cavity_cli::figures::{reproduce_figure, FigureOverrides, FIGURES};
use cavity_cli::oracle_check::{oracle_check, OracleCheck};
use cavity_cli::output::{write_json, MANIFEST_FILE};
use cavity_cli::plot::emit_plots;
use cavity_cli::run::{run_manifest, run_sweep, RunReport};
use cavity_cli::worker_count;
use cavity_core::oracle::BathGrid;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "cavity",
    version,
    about = "Cavity mode coupled to a structured thermal reservoir"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep from a TOML config and/or flags.
    Run(RunArgs),
    /// Produce the dataset behind one of the figures.
    Figure(FigureArgs),
    /// Compare u and v against a finite discretized reservoir.
    OracleCheck(OracleArgs),
    /// Render SVG plots of a dataset directory.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Initial {
    Vacuum,
    Coherent,
    Thermal,
}

#[derive(Args)]
struct TemperatureArgs {
    /// Reduced temperature k_B T / (hbar omega0).
    #[arg(long, conflicts_with = "kelvin")]
    theta: Option<f64>,
    /// Temperature in kelvin.
    #[arg(long)]
    kelvin: Option<f64>,
}

impl TemperatureArgs {
    fn get(&self) -> Option<Temperature> {
        self.theta
            .map(Temperature::Theta)
            .or(self.kelvin.map(Temperature::Kelvin))
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    /// Spectral exponents, comma separated.
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<f64>>,
    /// Coupling strengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long)]
    omega_c: Option<f64>,
    #[command(flatten)]
    temperature: TemperatureArgs,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Approximate number of output rows.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long, value_enum)]
    initial: Option<Initial>,
    /// Coherent amplitude as re,im.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    alpha: Option<Vec<f64>>,
    /// Initial thermal photon number.
    #[arg(long)]
    n0: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    bm: Option<bool>,
    #[arg(long)]
    second_order: Option<bool>,
    #[arg(long)]
    oracle: Option<bool>,
    #[arg(long)]
    populations: Option<bool>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(name) = &self.name {
            cfg.name = name.clone();
        }
        if let Some(s) = &self.s {
            cfg.reservoir.s = s.clone();
        }
        if let Some(eta) = &self.eta {
            cfg.reservoir.eta = eta.clone();
        }
        if let Some(wc) = self.omega_c {
            cfg.reservoir.omega_c = wc;
        }
        if let Some(t) = self.temperature.get() {
            cfg.temperature = t;
        }
        if let Some(t) = self.t_end {
            cfg.grid.t_end = t;
        }
        if let Some(n) = self.steps {
            cfg.grid.steps = n;
        }
        if self.rows.is_some() {
            cfg.grid.rows = self.rows;
        }
        let alpha = self.alpha.as_deref().map(|a| (a[0], a[1]));
        match (self.initial, alpha, self.n0) {
            (Some(Initial::Vacuum), None, None) => cfg.initial = InitialState::Vacuum,
            (Some(Initial::Coherent) | None, Some((alpha_re, alpha_im)), None) => {
                cfg.initial = InitialState::Coherent { alpha_re, alpha_im }
            }
            (Some(Initial::Thermal) | None, None, Some(n0)) => cfg.initial = InitialState::Thermal { n0 },
            (None, None, None) => {}
            (Some(Initial::Coherent), None, None) => bail!("--initial coherent needs --alpha re,im"),
            (Some(Initial::Thermal), None, None) => bail!("--initial thermal needs --n0"),
            _ => bail!("conflicting initial-state flags"),
        }
        if let Some(b) = self.bm {
            cfg.compare.bm = b;
        }
        if let Some(b) = self.second_order {
            cfg.compare.second_order = b;
        }
        if let Some(b) = self.oracle {
            cfg.compare.oracle = b;
        }
        if let Some(b) = self.populations {
            cfg.outputs.populations = b;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct FigureArgs {
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(FIGURES))]
    name: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    /// Also render the plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    Uniform,
    Sqrt,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct OracleArgs {
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    omega_c: f64,
    #[command(flatten)]
    temperature: TemperatureArgs,
    #[arg(long, default_value_t = 30.0)]
    t_end: f64,
    #[arg(long, default_value_t = 3000)]
    steps: usize,
    #[arg(long, default_value_t = 2000)]
    modes: usize,
    /// Upper bath frequency in units of omega_c.
    #[arg(long, default_value_t = 20.0)]
    bandwidth: f64,
    #[arg(long, value_enum, default_value = "sqrt")]
    grid: Grid,
    #[arg(long, default_value_t = 300)]
    rows: usize,
    /// Write both solutions to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    dir: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn report(report: &RunReport, dir: &std::path::Path) -> ExitCode {
    for p in &report.points {
        match (&p.error, p.steady_abs_u) {
            (Some(err), _) => println!("{:<24} failed: {err}", p.label),
            (None, Some(u)) => println!(
                "{:<24} |u|_inf {:.6}  v_inf {}  n_inf {}",
                p.label,
                u,
                p.v_inf.map_or("-".into(), |v| format!("{v:.6}")),
                p.n_inf.map_or("-".into(), |n| format!("{n:.6}")),
            ),
            (None, None) => println!("{:<24} ok", p.label),
        }
    }
    println!(
        "{} points, {} failed, output in {}",
        report.points.len(),
        report.failures(),
        dir.display()
    );
    if report.failures() == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config()?;
            let r = run_sweep(&cfg, &args.out, worker_count())?;
            write_json(&args.out.join(MANIFEST_FILE), &run_manifest(&cfg))?;
            Ok(report(&r, &args.out))
        }
        Command::Figure(args) => {
            let dir = args.out.clone().unwrap_or_else(|| PathBuf::from(&args.name));
            let ov = FigureOverrides {
                t_end: args.t_end,
                steps: args.steps,
                rows: args.rows,
                eta: args.eta,
            };
            let r = reproduce_figure(&args.name, &ov, &dir, worker_count())?;
            if args.plot {
                for path in emit_plots(&dir, None)? {
                    println!("wrote {}", path.display());
                }
            }
            Ok(report(&r, &dir))
        }
        Command::OracleCheck(a) => {
            let theta = match a.temperature.get().unwrap_or(Temperature::Kelvin(2.0)) {
                Temperature::Theta(t) => t,
                Temperature::Kelvin(k) => Units::default().scale().theta_from_kelvin(k),
            };
            let p = OracleCheck {
                s: a.s,
                eta: a.eta,
                omega_c: a.omega_c,
                theta,
                t_end: a.t_end,
                steps: a.steps,
                modes: a.modes,
                bandwidth: a.bandwidth,
                grid: match a.grid {
                    Grid::Uniform => BathGrid::Uniform,
                    Grid::Sqrt => BathGrid::SquareRoot,
                },
                rows: a.rows,
            };
            let r = oracle_check(&p, a.csv.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&r)?);
            let verdict = if r.passes() { "PASS" } else { "FAIL" };
            println!(
                "{verdict}: max|u - u_oracle| {:.3e} (tol {:.0e}), max|v - v_oracle| {:.3e} (tol {:.3e})",
                r.max_u_error, r.u_tolerance, r.max_v_error, r.v_tolerance
            );
            Ok(if r.passes() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Plot(a) => {
            for path in emit_plots(&a.dir, a.out.as_deref())? {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
