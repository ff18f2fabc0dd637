//! Green functions of the damped cavity mode.
//!
//! `u(t)` solves the Volterra integro-differential equation
//!
//! ```text
//! du/dt = -i u(t) - int_0^t g(t - tau) u(tau) dtau,   u(0) = 1
//! ```
//!
//! and `v(t) = int_0^t int_0^t u*(t1) g~(t1 - t2) u(t2) dt1 dt2` is the thermal
//! correlation function. The memory integral is discretized with the
//! trapezoidal rule on a uniform grid, `v` with the same weights.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, integrate_from_origin, QuadOptions};
use crate::reservoir::{bose_occupation, KernelTable, ReservoirConfig, SpectralDensity};
use crate::OMEGA0;

/// Largest `dt * omega_c` accepted by the checked solvers.
pub const MAX_STEP_TIMES_CUTOFF: f64 = 0.05;

/// Default number of intervals between stored `v` samples keeps at most
/// this many samples.
pub const DEFAULT_V_SAMPLES: usize = 500;

/// Uniform grid `t_n = n dt`, `n = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be > 0, got {t_end}")));
        }
        if n_steps < 2 {
            return Err(invalid("n_steps", format!("need at least 2 steps, got {n_steps}")));
        }
        Ok(Self { t_end, n_steps })
    }

    /// Grid with step as close as possible to `dt`.
    pub fn with_step(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be > 0, got {dt}")));
        }
        Self::new(t_end, (t_end / dt).round().max(2.0) as usize)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Same window, half the step.
    pub fn refined(&self) -> Self {
        Self {
            t_end: self.t_end,
            n_steps: 2 * self.n_steps,
        }
    }

    pub fn resolves(&self, omega_c: f64) -> bool {
        self.dt() * omega_c <= MAX_STEP_TIMES_CUTOFF * (1.0 + 1e-12)
    }

    /// Index of the grid point closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.dt()).round().max(0.0) as usize).min(self.n_steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Trapezoidal rule for both the memory integral and the time step; the
    /// implicit equation for `u_{n+1}` is linear and solved in closed form.
    #[default]
    ImplicitTrapezoid,
    /// Adams-Bashforth-2 predictor with a trapezoidal corrector (Euler on the
    /// first step).
    PredictorCorrector,
}

/// `u(t)` on a grid together with the memory integral `M(t)`.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: TimeGrid,
    u: Vec<Complex64>,
    memory: Vec<Complex64>,
}

impl Propagator {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn u(&self) -> &[Complex64] {
        &self.u
    }

    /// `M_n = int_0^{t_n} g(t_n - tau) u(tau) dtau`.
    pub fn memory(&self) -> &[Complex64] {
        &self.memory
    }

    /// Right-hand side of the equation of motion at grid point `i`.
    pub fn derivative(&self, i: usize) -> Complex64 {
        -Complex64::i() * OMEGA0 * self.u[i] - self.memory[i]
    }
}

fn history(g: &[Complex64], u: &[Complex64], next: usize, dt: f64) -> Complex64 {
    let mut acc = g[next] * u[0] * 0.5;
    for k in 1..next {
        acc += g[next - k] * u[k];
    }
    acc * dt
}

/// Integrate the Volterra equation with kernel samples `g[j] = g(j dt)`.
pub fn solve_with_kernel(g: &[Complex64], grid: &TimeGrid, scheme: Scheme) -> Result<Propagator> {
    let n = grid.n_steps();
    if g.len() < grid.len() {
        return Err(Error::IndexOutOfRange { index: n, len: g.len() });
    }
    let dt = grid.dt();
    let i = Complex64::i();
    let mut u = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut memory = vec![Complex64::new(0.0, 0.0); n + 1];
    u[0] = Complex64::new(1.0, 0.0);
    let g0 = g[0];
    let denom = 1.0 + (i * OMEGA0 + g0 * (0.5 * dt)) * (0.5 * dt);
    let mut f_prev = Complex64::new(0.0, 0.0);
    for step in 0..n {
        let f_n = -i * OMEGA0 * u[step] - memory[step];
        let h = history(g, &u, step + 1, dt);
        let next = match scheme {
            Scheme::ImplicitTrapezoid => (u[step] + (f_n - h) * (0.5 * dt)) / denom,
            Scheme::PredictorCorrector => {
                let pred = if step == 0 {
                    u[step] + f_n * dt
                } else {
                    u[step] + (f_n * 3.0 - f_prev) * (0.5 * dt)
                };
                let m_pred = h + g0 * pred * (0.5 * dt);
                let f_pred = -i * OMEGA0 * pred - m_pred;
                u[step] + (f_n + f_pred) * (0.5 * dt)
            }
        };
        u[step + 1] = next;
        memory[step + 1] = h + g0 * next * (0.5 * dt);
        f_prev = f_n;
    }
    Ok(Propagator { grid: *grid, u, memory })
}

pub fn solve_u_with(sd: &SpectralDensity, grid: &TimeGrid, scheme: Scheme) -> Result<Propagator> {
    if !grid.resolves(sd.omega_c()) {
        return Err(invalid(
            "dt",
            format!(
                "step {} does not resolve the reservoir cutoff (need dt <= {}/omega_c)",
                grid.dt(),
                MAX_STEP_TIMES_CUTOFF
            ),
        ));
    }
    let dt = grid.dt();
    let g: Vec<Complex64> = (0..grid.len()).map(|j| sd.kernel(j as f64 * dt)).collect();
    solve_with_kernel(&g, grid, scheme)
}

pub fn solve_u(sd: &SpectralDensity, grid: &TimeGrid) -> Result<Propagator> {
    solve_u_with(sd, grid, Scheme::default())
}

/// Solve on `grid` and on the grid with half the step; fail if the two
/// solutions differ by more than `tolerance` anywhere on the coarse grid.
pub fn solve_u_checked(sd: &SpectralDensity, grid: &TimeGrid, tolerance: f64) -> Result<Propagator> {
    let coarse = solve_u(sd, grid)?;
    let fine = solve_u(sd, &grid.refined())?;
    let change = step_halving_change(&coarse, &fine);
    if change > tolerance {
        return Err(Error::SolverNonConvergence { change, tolerance });
    }
    Ok(coarse)
}

/// max_n |u_dt(t_n) - u_{dt/2}(t_n)|.
pub fn step_halving_change(coarse: &Propagator, fine: &Propagator) -> f64 {
    coarse
        .u
        .iter()
        .enumerate()
        .map(|(n, z)| (z - fine.u[2 * n]).norm())
        .fold(0.0, f64::max)
}

struct Level {
    size: usize,
    hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Evaluates `v(t_n) = Re(b^H T b)` with `b_k = w_k u_k` and the Hermitian
/// Toeplitz matrix `T_kl = g~((k - l) dt)`. The product `T b` is a circulant
/// convolution of length `2^p > 2n`, one FFT of the kernel per power of two.
pub struct CorrelationEvaluator {
    dt: f64,
    max_index: usize,
    levels: Vec<Level>,
    thermal: bool,
}

impl CorrelationEvaluator {
    pub fn new(table: &KernelTable, max_index: usize) -> Result<Self> {
        if table.len() <= max_index {
            return Err(Error::IndexOutOfRange {
                index: max_index,
                len: table.len(),
            });
        }
        let mut planner = FftPlanner::new();
        let mut levels = Vec::new();
        let thermal = table.has_thermal_part();
        if thermal {
            let largest = (2 * max_index + 2).next_power_of_two().max(2);
            let mut size = 2;
            while size <= largest {
                let forward = planner.plan_fft_forward(size);
                let inverse = planner.plan_fft_inverse(size);
                let mut c = vec![Complex64::new(0.0, 0.0); size];
                let reach = (size / 2 - 1).min(max_index);
                c[0] = table.g_tilde(0);
                for j in 1..=reach {
                    c[j] = table.g_tilde(j as isize);
                    c[size - j] = table.g_tilde(-(j as isize));
                }
                forward.process(&mut c);
                levels.push(Level {
                    size,
                    hat: c,
                    forward,
                    inverse,
                });
                size *= 2;
            }
        }
        Ok(Self {
            dt: table.dt(),
            max_index,
            levels,
            thermal,
        })
    }

    /// `(Re, Im)` of `b^H T b` at grid index `n`. The imaginary part vanishes
    /// analytically and is returned as a roundoff diagnostic.
    pub fn evaluate(&self, u: &[Complex64], n: usize) -> Result<(f64, f64)> {
        if n > self.max_index || n >= u.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: self.max_index.min(u.len().saturating_sub(1)) + 1,
            });
        }
        if n == 0 || !self.thermal {
            return Ok((0.0, 0.0));
        }
        let size = (2 * n + 2).next_power_of_two();
        let level = &self.levels[size.trailing_zeros() as usize - 1];
        debug_assert_eq!(level.size, size);
        let b = weighted(u, n, self.dt);
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        buf[..=n].copy_from_slice(&b);
        level.forward.process(&mut buf);
        for (x, h) in buf.iter_mut().zip(&level.hat) {
            *x *= h;
        }
        level.inverse.process(&mut buf);
        let scale = 1.0 / size as f64;
        let s: Complex64 = b.iter().zip(&buf).map(|(bk, tb)| bk.conj() * tb).sum::<Complex64>() * scale;
        Ok((s.re, s.im))
    }
}

fn weighted(u: &[Complex64], n: usize, dt: f64) -> Vec<Complex64> {
    let mut b: Vec<Complex64> = u[..=n].iter().map(|z| z * dt).collect();
    b[0] *= 0.5;
    b[n] *= 0.5;
    b
}

/// `v` at one grid index by the direct double sum. Quadratic in `n`; used to
/// validate the FFT route.
pub fn correlation_direct(table: &KernelTable, u: &[Complex64], n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let b = weighted(u, n, table.dt());
    let mut s = Complex64::new(0.0, 0.0);
    for (k, bk) in b.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (l, bl) in b.iter().enumerate() {
            row += table.g_tilde(k as isize - l as isize) * bl;
        }
        s += bk.conj() * row;
    }
    (s.re, s.im)
}

/// `v(t_index)` from a kernel table and `u` samples on the same grid.
pub fn compute_v(table: &KernelTable, u: &[Complex64], t_index: usize) -> Result<f64> {
    let eval = CorrelationEvaluator::new(table, t_index)?;
    Ok(eval.evaluate(u, t_index)?.0)
}

/// `v` sampled every `stride` grid steps.
#[derive(Debug, Clone, PartialEq)]
pub struct VTrace {
    pub stride: usize,
    pub values: Vec<f64>,
    pub max_imag_residue: f64,
}

pub fn default_stride(n_steps: usize) -> usize {
    n_steps.div_ceil(DEFAULT_V_SAMPLES).max(1)
}

pub fn compute_v_trace(table: &KernelTable, u: &[Complex64], stride: usize) -> Result<VTrace> {
    if stride == 0 {
        return Err(invalid("stride", "must be >= 1"));
    }
    let last = u.len() - 1;
    let eval = CorrelationEvaluator::new(table, last)?;
    let samples: Vec<usize> = (0..=last).step_by(stride).collect();
    let pairs = samples
        .par_iter()
        .map(|&n| eval.evaluate(u, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(VTrace {
        stride,
        values: pairs.iter().map(|p| p.0).collect(),
        max_imag_residue: pairs.iter().map(|p| p.1.abs()).fold(0.0, f64::max),
    })
}

/// `u`, the memory integral and `v` for one reservoir on one grid.
#[derive(Debug, Clone)]
pub struct GreenFunctions {
    config: ReservoirConfig,
    propagator: Propagator,
    v: VTrace,
}

/// Bounds that every solution must satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantReport {
    pub max_abs_u: f64,
    pub min_v: f64,
    pub max_imag_residue: f64,
}

impl InvariantReport {
    pub fn holds(&self) -> bool {
        self.max_abs_u <= 1.0 + 1e-8 && self.min_v >= -1e-10
    }
}

impl GreenFunctions {
    /// Build the kernel table, solve for `u` and evaluate `v` every `stride`
    /// steps (default: at most 501 samples).
    pub fn compute(cfg: &ReservoirConfig, grid: TimeGrid, stride: Option<usize>) -> Result<Self> {
        let table = KernelTable::build(cfg, grid.dt(), grid.len())?;
        Self::from_table(&table, grid, stride)
    }

    pub fn from_table(table: &KernelTable, grid: TimeGrid, stride: Option<usize>) -> Result<Self> {
        if (table.dt() - grid.dt()).abs() > 1e-12 * grid.dt() {
            return Err(invalid("dt", "kernel table and grid use different steps"));
        }
        if !grid.resolves(table.config().spectral.omega_c()) {
            return Err(invalid("dt", format!("step {} does not resolve the cutoff", grid.dt())));
        }
        let propagator = solve_with_kernel(table.g_values(), &grid, Scheme::default())?;
        let stride = stride.unwrap_or_else(|| default_stride(grid.n_steps()));
        let v = compute_v_trace(table, &propagator.u[..grid.len()], stride)?;
        Ok(Self {
            config: *table.config(),
            propagator,
            v,
        })
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.config
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.propagator.grid
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn u(&self) -> &[Complex64] {
        &self.propagator.u
    }

    pub fn memory(&self) -> &[Complex64] {
        &self.propagator.memory
    }

    pub fn v_trace(&self) -> &VTrace {
        &self.v
    }

    pub fn v(&self) -> &[f64] {
        &self.v.values
    }

    pub fn stride(&self) -> usize {
        self.v.stride
    }

    pub fn sample_count(&self) -> usize {
        self.v.values.len()
    }

    /// Grid index of the `j`-th `v` sample.
    pub fn sample_index(&self, j: usize) -> usize {
        j * self.v.stride
    }

    pub fn sample_time(&self, j: usize) -> f64 {
        self.grid().time(self.sample_index(j))
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (0..self.sample_count()).map(|j| self.sample_time(j)).collect()
    }

    /// `u` at the `v` sample points.
    pub fn sampled_u(&self) -> Vec<Complex64> {
        (0..self.sample_count())
            .map(|j| self.u()[self.sample_index(j)])
            .collect()
    }

    pub fn invariants(&self) -> InvariantReport {
        InvariantReport {
            max_abs_u: self.u().iter().map(|z| z.norm()).fold(0.0, f64::max),
            min_v: self.v().iter().copied().fold(f64::INFINITY, f64::min),
            max_imag_residue: self.v.max_imag_residue,
        }
    }
}

/// Born-Markov reference: exponential decay with rate `kappa = J(1)/2` and
/// frequency `1 + delta`, relaxation of `v` to the Bose occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmSolution {
    pub omega_prime: f64,
    pub kappa: f64,
    pub n_bar: f64,
}

impl BmSolution {
    pub fn new(cfg: &ReservoirConfig) -> Result<Self> {
        let sd = &cfg.spectral;
        Ok(Self {
            omega_prime: OMEGA0 + bm_frequency_shift(sd)?,
            kappa: 0.5 * sd.value(OMEGA0),
            n_bar: bose_occupation(OMEGA0, cfg.theta())?,
        })
    }

    pub fn kappa_tilde(&self) -> f64 {
        2.0 * self.kappa * self.n_bar
    }

    pub fn u(&self, t: f64) -> Complex64 {
        Complex64::new(-self.kappa * t, -self.omega_prime * t).exp()
    }

    pub fn v(&self, t: f64) -> f64 {
        -self.n_bar * (-2.0 * self.kappa * t).exp_m1()
    }

    pub fn photon_number(&self, t: f64, n0: f64) -> f64 {
        self.u(t).norm_sqr() * n0 + self.v(t)
    }
}

pub fn bm_green_functions(bm: &BmSolution, grid: &TimeGrid) -> (Vec<Complex64>, Vec<f64>) {
    let t = grid.times();
    (
        t.iter().map(|&t| bm.u(t)).collect(),
        t.iter().map(|&t| bm.v(t)).collect(),
    )
}

/// `delta = -P int_0^inf dw/2pi J(w) / (w - 1)`.
///
/// On `[0, 2]` the pole is removed by subtracting `J(1)`, whose principal
/// value integral over the symmetric interval vanishes; the rest is regular.
pub fn bm_frequency_shift(sd: &SpectralDensity) -> Result<f64> {
    if sd.eta() == 0.0 {
        return Ok(0.0);
    }
    let f = |w: f64| sd.value(w) / (2.0 * PI);
    let f1 = f(OMEGA0);
    let opts = QuadOptions {
        abs_tol: 1e-13 * sd.eta() * sd.omega_c().max(1.0),
        rel_tol: 1e-12,
        max_subdivisions: 20_000,
    };
    let regular = |w: f64| {
        let d = w - OMEGA0;
        if d == 0.0 {
            0.0
        } else {
            (f(w) - f1) / d
        }
    };
    let lower = integrate_from_origin(regular, OMEGA0, OMEGA0, &opts)?;
    let upper = integrate(regular, OMEGA0, 2.0 * OMEGA0, &opts)?;
    let tail = integrate(
        |w: f64| f(w) / (w - OMEGA0),
        2.0 * OMEGA0,
        2.0 * OMEGA0 + 60.0 * sd.omega_c(),
        &opts,
    )?;
    Ok(-(lower.value + upper.value + tail.value))
}

/// Whether the coupled system has a normalizable mode below the reservoir
/// continuum, which stops `u` from decaying to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundModeReport {
    pub exists: bool,
    /// Coupling at which the bound mode appears, `1 / (w_c Gamma(s))`.
    pub threshold_eta: f64,
    /// `int dw/2pi J(w)/w = eta w_c Gamma(s)`.
    pub static_shift: f64,
    /// Energy of the bound mode (negative) when it exists.
    pub energy: Option<f64>,
    /// Overlap of the bare cavity mode with the bound mode, the late-time
    /// value of `|u|` at zero temperature.
    pub residue: Option<f64>,
}

pub fn bound_mode_diagnostic(sd: &SpectralDensity) -> Result<BoundModeReport> {
    let static_shift = sd.inverse_moment();
    let threshold_eta = 1.0 / (sd.omega_c() * gamma(sd.s()));
    let exists = static_shift > OMEGA0;
    let (energy, residue) = if exists {
        let (e, z) = bound_mode_pole(sd)?;
        (Some(e), Some(z))
    } else {
        (None, None)
    };
    Ok(BoundModeReport {
        exists,
        threshold_eta,
        static_shift,
        energy,
        residue,
    })
}

/// Root of `h(l) = l - 1 + int dw/2pi J(w)/(w - l)` below zero and the
/// residue `1/h'(l)`.
fn bound_mode_pole(sd: &SpectralDensity) -> Result<(f64, f64)> {
    let opts = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_subdivisions: 20_000,
    };
    let upper = 80.0 * sd.omega_c();
    let split = sd.omega_c().min(1.0);
    let self_energy = |l: f64, power: i32| -> Result<f64> {
        let est = integrate_from_origin(
            |w: f64| sd.value(w) / (2.0 * PI) / (w - l).powi(power),
            split,
            upper,
            &opts,
        )?;
        Ok(est.value)
    };
    let h = |l: f64| -> Result<f64> { Ok(l - OMEGA0 + self_energy(l, 1)?) };
    let mut lo = -1.0;
    while h(lo)? > 0.0 {
        lo *= 2.0;
        if lo < -1e12 {
            return Err(invalid("eta", "bound mode energy search diverged"));
        }
    }
    let mut hi = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 * lo.abs().max(1.0) {
            break;
        }
    }
    let energy = 0.5 * (lo + hi);
    let residue = 1.0 / (1.0 + self_energy(energy, 2)?);
    Ok((energy, residue))
}

/// Mean of the trailing `window` samples if their spread is below
/// `tolerance * max(1, |mean|)`.
pub fn detect_plateau(values: &[f64], window: usize, tolerance: f64) -> Option<f64> {
    if window == 0 || values.len() < window {
        return None;
    }
    let tail = &values[values.len() - window..];
    let mean = tail.iter().sum::<f64>() / window as f64;
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    (hi - lo <= tolerance * mean.abs().max(1.0)).then_some(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sd(eta: f64, s: f64) -> SpectralDensity {
        SpectralDensity::new(eta, s, 1.0).unwrap()
    }

    #[test]
    fn grid_basics() {
        let g = TimeGrid::with_step(30.0, 0.01).unwrap();
        assert_eq!(g.n_steps(), 3000);
        assert_eq!(g.len(), 3001);
        assert!((g.time(3000) - 30.0).abs() < 1e-12);
        assert_eq!(g.index_of(12.345), 1235);
        assert_eq!(g.refined().n_steps(), 6000);
        assert!(g.resolves(5.0) && !g.resolves(5.1));
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn free_evolution_without_coupling() {
        let grid = TimeGrid::with_step(50.0, 0.01).unwrap();
        let p = solve_u(&sd(0.0, 1.0), &grid).unwrap();
        for (n, z) in p.u().iter().enumerate() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
            // trapezoid phase error is t dt^2 / 12
            let t = grid.time(n);
            let exact = Complex64::from_polar(1.0, -t);
            assert!((z - exact).norm() < 1.01 * t * 1e-4 / 12.0 + 1e-12);
        }
    }

    #[test]
    fn predictor_corrector_is_second_order() {
        let s = sd(0.3, 1.0);
        let mut errs = Vec::new();
        let reference = solve_u(&s, &TimeGrid::with_step(10.0, 0.00125).unwrap()).unwrap();
        for &dt in &[0.02, 0.01, 0.005] {
            let grid = TimeGrid::with_step(10.0, dt).unwrap();
            let p = solve_u_with(&s, &grid, Scheme::PredictorCorrector).unwrap();
            let factor = (0.00125f64.recip() * dt).round() as usize;
            let e = p
                .u()
                .iter()
                .enumerate()
                .map(|(n, z)| (z - reference.u()[n * factor]).norm())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.8, "{errs:?}");
        }
    }

    #[test]
    fn richardson_order_of_implicit_scheme() {
        for &s_exp in &[0.5, 1.0, 3.0] {
            let s = sd(0.6, s_exp);
            let g1 = TimeGrid::with_step(20.0, 0.02).unwrap();
            let a = solve_u(&s, &g1).unwrap();
            let b = solve_u(&s, &g1.refined()).unwrap();
            let c = solve_u(&s, &g1.refined().refined()).unwrap();
            let e1 = step_halving_change(&a, &b);
            let e2 = step_halving_change(&b, &c);
            let order = (e1 / e2).log2();
            assert!(order >= 1.9, "s={s_exp}: order {order}");
        }
    }

    #[test]
    fn short_time_expansion() {
        // u = 1 - i t - (1 + g(0)) t^2 / 2 + O(t^3)
        let s = sd(0.4, 1.0);
        let grid = TimeGrid::with_step(0.05, 0.0005).unwrap();
        let p = solve_u(&s, &grid).unwrap();
        let g0 = s.kernel_at_origin();
        for n in [20usize, 40, 60] {
            let t = grid.time(n);
            let quad = (p.u()[n] - Complex64::new(1.0, -t)).re;
            let expected = -(1.0 + g0) * t * t / 2.0;
            assert!((quad - expected).abs() < 2e-3 * t * t + 1e-9, "t={t} {quad} {expected}");
        }
    }

    #[test]
    fn checked_solver_reports_non_convergence() {
        let s = sd(1.0, 3.0);
        let grid = TimeGrid::with_step(10.0, 0.01).unwrap();
        assert!(matches!(
            solve_u_checked(&s, &grid, 1e-9),
            Err(Error::SolverNonConvergence { .. })
        ));
        assert!(solve_u_checked(&s, &grid, 1e-2).is_ok());
        let coarse = TimeGrid::with_step(10.0, 0.1).unwrap();
        assert!(solve_u(&s, &coarse).is_err());
    }

    #[test]
    fn fft_correlation_matches_direct_sum() {
        let cfg = ReservoirConfig::new(sd(0.5, 0.5), 12.5).unwrap();
        let grid = TimeGrid::with_step(3.0, 0.01).unwrap();
        let table = KernelTable::build(&cfg, grid.dt(), grid.len()).unwrap();
        let p = solve_with_kernel(table.g_values(), &grid, Scheme::default()).unwrap();
        let eval = CorrelationEvaluator::new(&table, grid.n_steps()).unwrap();
        for &n in &[0usize, 1, 2, 3, 7, 64, 100, 255, 256, 299, 300] {
            let (fr, fi) = eval.evaluate(p.u(), n).unwrap();
            let (dr, di) = correlation_direct(&table, p.u(), n);
            assert!((fr - dr).abs() < 1e-11 * dr.abs().max(1.0), "n={n}: {fr} vs {dr}");
            assert!(di.abs() < 1e-12 && fi.abs() < 1e-11);
        }
        assert!(eval.evaluate(p.u(), 301).is_err());
    }

    #[test]
    fn correlation_vanishes_at_zero_temperature() {
        let cfg = ReservoirConfig::new(sd(0.5, 1.0), 0.0).unwrap();
        let gf = GreenFunctions::compute(&cfg, TimeGrid::with_step(10.0, 0.01).unwrap(), None).unwrap();
        assert!(gf.v().iter().all(|&v| v == 0.0));
        assert_eq!(gf.sample_count(), 501);
        assert_eq!(gf.stride(), 2);
    }

    #[test]
    fn born_markov_reference() {
        let cfg = ReservoirConfig::new(sd(0.1, 1.0), 12.5).unwrap();
        let bm = BmSolution::new(&cfg).unwrap();
        assert!((bm.kappa - PI * 0.1 / std::f64::consts::E).abs() < 1e-15);
        assert!((bm.n_bar - 12.006_666).abs() < 1e-6);
        assert!((bm.u(2.0).norm() - (-2.0 * bm.kappa).exp()).abs() < 1e-15);
        assert!((bm.v(1e6) - bm.n_bar).abs() < 1e-9);
        assert_eq!(bm.v(0.0), 0.0);
    }

    /// The shift must equal Im int_0^inf g(tau) e^{i tau} dtau computed in the
    /// time domain with the closed-form kernel.
    #[test]
    fn frequency_shift_matches_time_domain() {
        for &s_exp in &[0.5, 1.0, 3.0] {
            let s = sd(0.2, s_exp);
            let shift = bm_frequency_shift(&s).unwrap();
            let opts = QuadOptions {
                abs_tol: 1e-12,
                rel_tol: 1e-12,
                max_subdivisions: 100_000,
            };
            let upper = 4000.0;
            let im = integrate(
                |t: f64| (s.kernel(t) * Complex64::from_polar(1.0, t)).im,
                0.0,
                upper,
                &opts,
            )
            .unwrap()
            .value;
            // tail of the oscillatory integral decays like tau^-(s+1)
            let tol = 5e-3 * s.eta() * upper.powf(-s_exp) + 1e-9;
            assert!((shift - im).abs() < tol, "s={s_exp}: {shift} vs {im}");
        }
        assert_eq!(bm_frequency_shift(&sd(0.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn bound_mode_thresholds() {
        let r = bound_mode_diagnostic(&sd(0.1, 0.5)).unwrap();
        assert!((r.threshold_eta - 1.0 / PI.sqrt()).abs() < 1e-12);
        assert!(!r.exists && r.energy.is_none());
        assert!((bound_mode_diagnostic(&sd(0.1, 1.0)).unwrap().threshold_eta - 1.0).abs() < 1e-12);
        assert!((bound_mode_diagnostic(&sd(0.1, 3.0)).unwrap().threshold_eta - 0.5).abs() < 1e-12);
        let r = bound_mode_diagnostic(&sd(1.0, 3.0)).unwrap();
        assert!(r.exists);
        assert!(r.energy.unwrap() < 0.0);
        let z = r.residue.unwrap();
        assert!(z > 0.0 && z < 1.0);
    }

    #[test]
    fn late_time_amplitude_approaches_bound_mode_residue() {
        let s = sd(1.0, 3.0);
        let z = bound_mode_diagnostic(&s).unwrap().residue.unwrap();
        let p = solve_u(&s, &TimeGrid::with_step(60.0, 0.01).unwrap()).unwrap();
        let tail = &p.u()[5000..];
        let mean = tail.iter().map(|z| z.norm()).sum::<f64>() / tail.len() as f64;
        assert!((mean - z).abs() < 5e-3, "{mean} vs {z}");
    }

    #[test]
    fn plateau_detection() {
        let mut v: Vec<f64> = (0..100).map(|k| 10.0 * (-(k as f64) / 5.0).exp() + 3.0).collect();
        assert!(detect_plateau(&v[..20], 10, 1e-3).is_none());
        let p = detect_plateau(&v, 20, 1e-3).unwrap();
        assert!((p - 3.0).abs() < 1e-3);
        v.push(4.0);
        assert!(detect_plateau(&v, 20, 1e-3).is_none());
        assert!(detect_plateau(&v, 0, 1.0).is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn amplitude_never_grows(eta in 0.0f64..1.2, s_idx in 0usize..3) {
            let s = sd(eta, [0.5, 1.0, 3.0][s_idx]);
            let p = solve_u(&s, &TimeGrid::with_step(20.0, 0.01).unwrap()).unwrap();
            for z in p.u() {
                prop_assert!(z.norm() <= 1.0 + 1e-8);
            }
        }

        #[test]
        fn correlation_is_nonnegative(eta in 0.01f64..1.0, theta in 0.0f64..15.0, s_idx in 0usize..3) {
            let cfg = ReservoirConfig::new(sd(eta, [0.5, 1.0, 3.0][s_idx]), theta).unwrap();
            let gf = GreenFunctions::compute(&cfg, TimeGrid::with_step(8.0, 0.02).unwrap(), Some(5)).unwrap();
            let inv = gf.invariants();
            prop_assert!(inv.holds(), "{inv:?}");
            prop_assert!(inv.max_imag_residue < 1e-9 * gf.v().iter().fold(1.0f64, |a, &b| a.max(b)));
        }
    }
}
