//! Time-dependent coefficients of the exact master equation:
//!
//! ```text
//! omega'(t) = -Im[du/dt / u],  kappa(t) = -Re[du/dt / u],
//! kappa~(t) = dv/dt - 2 v Re[du/dt / u] = dv/dt + 2 v kappa
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::greens::{GreenFunctions, TimeGrid};
use crate::quad::gauss_kronrod_21;
use crate::reservoir::{KernelTable, ReservoirConfig};
use crate::OMEGA0;

/// Below this `|u|` the ratio `du/dt / u` is treated as undefined.
pub const SINGULAR_AMPLITUDE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTrace {
    pub times: Vec<f64>,
    pub omega_prime: Vec<f64>,
    pub kappa: Vec<f64>,
    pub kappa_tilde: Vec<f64>,
    /// False where `|u|` fell below [`SINGULAR_AMPLITUDE`]; the coefficients
    /// there are stored as NaN.
    pub valid: Vec<bool>,
}

impl CoefficientTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Spacing of the samples.
    pub fn step(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn first_invalid_time(&self) -> Option<f64> {
        self.valid.iter().position(|v| !v).map(|i| self.times[i])
    }

    /// Constant coefficients on a uniform set of sample times.
    pub fn constant(times: Vec<f64>, omega_prime: f64, kappa: f64, kappa_tilde: f64) -> Self {
        let n = times.len();
        Self {
            times,
            omega_prime: vec![omega_prime; n],
            kappa: vec![kappa; n],
            kappa_tilde: vec![kappa_tilde; n],
            valid: vec![true; n],
        }
    }
}

/// Second-order accurate derivative of uniformly spaced samples.
pub fn differentiate(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => {
            let d = (values[1] - values[0]) / h;
            vec![d, d]
        }
        _ => {
            let mut out = Vec::with_capacity(n);
            out.push((-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h));
            for i in 1..n - 1 {
                out.push((values[i + 1] - values[i - 1]) / (2.0 * h));
            }
            out.push((3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h));
            out
        }
    }
}

fn complex_derivative(values: &[Complex64], i: usize, h: f64) -> Complex64 {
    let n = values.len();
    if i == 0 {
        (values[0] * -3.0 + values[1] * 4.0 - values[2]) / (2.0 * h)
    } else if i == n - 1 {
        (values[n - 1] * 3.0 - values[n - 2] * 4.0 + values[n - 3]) / (2.0 * h)
    } else {
        (values[i + 1] - values[i - 1]) / (2.0 * h)
    }
}

fn assemble(gf: &GreenFunctions, rate: impl Fn(usize) -> Complex64) -> CoefficientTrace {
    let count = gf.sample_count();
    let h = gf.stride() as f64 * gf.grid().dt();
    let v = gf.v();
    let v_dot = differentiate(v, h);
    let mut trace = CoefficientTrace {
        times: gf.sample_times(),
        omega_prime: Vec::with_capacity(count),
        kappa: Vec::with_capacity(count),
        kappa_tilde: Vec::with_capacity(count),
        valid: Vec::with_capacity(count),
    };
    for j in 0..count {
        let i = gf.sample_index(j);
        if gf.u()[i].norm() < SINGULAR_AMPLITUDE {
            trace.omega_prime.push(f64::NAN);
            trace.kappa.push(f64::NAN);
            trace.kappa_tilde.push(f64::NAN);
            trace.valid.push(false);
            continue;
        }
        let r = rate(i) / gf.u()[i];
        trace.omega_prime.push(-r.im);
        trace.kappa.push(-r.re);
        trace.kappa_tilde.push(v_dot[j] - 2.0 * v[j] * r.re);
        trace.valid.push(true);
    }
    trace
}

/// Coefficients at the `v` sample points. `du/dt` is taken from the equation
/// of motion, `-i u - M`, which uses the memory integral already accumulated
/// by the solver; `dv/dt` by finite differences of the `v` samples.
pub fn coefficients(gf: &GreenFunctions) -> CoefficientTrace {
    let p = gf.propagator();
    assemble(gf, |i| p.derivative(i))
}

/// Same as [`coefficients`] with `du/dt` from centered differences of `u` on
/// the solver grid.
pub fn coefficients_finite_difference(gf: &GreenFunctions) -> CoefficientTrace {
    let dt = gf.grid().dt();
    assemble(gf, |i| complex_derivative(gf.u(), i, dt))
}

/// Perturbative coefficients
///
/// ```text
/// omega'(t) = 1 + Im G(t),  kappa(t) = Re G(t),  kappa~(t) = 2 Re G~(t)
/// G(t)  = int_0^t g(tau)  exp(i tau) dtau
/// G~(t) = int_0^t g~(tau) exp(i tau) dtau
/// ```
///
/// `G` is integrated panel by panel with the closed-form kernel; `G~` uses the
/// trapezoidal rule on the cached `g~` samples.
pub fn second_order_coefficients(cfg: &ReservoirConfig, grid: &TimeGrid) -> Result<CoefficientTrace> {
    let table = KernelTable::build(cfg, grid.dt(), grid.len())?;
    Ok(second_order_from_table(&table, grid))
}

pub fn second_order_from_table(table: &KernelTable, grid: &TimeGrid) -> CoefficientTrace {
    let sd = table.config().spectral;
    let dt = grid.dt();
    let n = grid.len().min(table.len());
    let rotated = |tau: f64| sd.kernel(tau) * Complex64::from_polar(1.0, OMEGA0 * tau);
    let mut big_g = Complex64::new(0.0, 0.0);
    let mut big_gt = Complex64::new(0.0, 0.0);
    let mut trace = CoefficientTrace {
        times: Vec::with_capacity(n),
        omega_prime: Vec::with_capacity(n),
        kappa: Vec::with_capacity(n),
        kappa_tilde: Vec::with_capacity(n),
        valid: vec![true; n],
    };
    let gt = |j: usize| table.g_tilde(j as isize) * Complex64::from_polar(1.0, OMEGA0 * j as f64 * dt);
    for j in 0..n {
        if j > 0 {
            let (panel, _) = gauss_kronrod_21(&rotated, (j - 1) as f64 * dt, j as f64 * dt);
            big_g += panel;
            big_gt += (gt(j - 1) + gt(j)) * (0.5 * dt);
        }
        trace.times.push(j as f64 * dt);
        trace.omega_prime.push(OMEGA0 + big_g.im);
        trace.kappa.push(big_g.re);
        trace.kappa_tilde.push(2.0 * big_gt.re);
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{BmSolution, TimeGrid};
    use crate::reservoir::SpectralDensity;

    fn gf(eta: f64, s: f64, theta: f64, t_end: f64, stride: usize) -> GreenFunctions {
        let cfg = ReservoirConfig::new(SpectralDensity::new(eta, s, 1.0).unwrap(), theta).unwrap();
        GreenFunctions::compute(&cfg, TimeGrid::with_step(t_end, 0.01).unwrap(), Some(stride)).unwrap()
    }

    #[test]
    fn derivative_is_exact_for_quadratics() {
        let v: Vec<f64> = (0..10)
            .map(|i| 3.0 + 2.0 * i as f64 * 0.1 + (i as f64 * 0.1).powi(2))
            .collect();
        let d = differentiate(&v, 0.1);
        for (i, x) in d.iter().enumerate() {
            assert!((x - (2.0 + 2.0 * i as f64 * 0.1)).abs() < 1e-12);
        }
    }

    #[test]
    fn uncoupled_cavity_has_bare_coefficients() {
        let g = gf(0.0, 1.0, 12.5, 10.0, 10);
        let exact = coefficients(&g);
        for j in 0..exact.len() {
            assert!((exact.omega_prime[j] - 1.0).abs() < 1e-10);
            assert!(exact.kappa[j].abs() < 1e-10);
            assert!(exact.kappa_tilde[j].abs() < 1e-10);
        }
        // centered differences of exp(-i t) carry an O(dt^2) bias
        let fd = coefficients_finite_difference(&g);
        for j in 0..fd.len() {
            assert!((fd.omega_prime[j] - 1.0).abs() < 1e-4);
            assert!(fd.kappa[j].abs() < 1e-4);
            assert!(fd.kappa_tilde[j].abs() < 1e-10);
        }
    }

    #[test]
    fn weak_coupling_rate_approaches_markov_value() {
        let g = gf(0.02, 1.0, 12.5, 50.0, 10);
        let tr = coefficients(&g);
        let bm = BmSolution::new(g.config()).unwrap();
        let late = *tr.kappa.last().unwrap();
        assert!((late - bm.kappa).abs() < 0.1 * bm.kappa, "{late} vs {}", bm.kappa);
        assert!((late - 0.02312).abs() < 0.1 * 0.02312);
        assert!(tr.kappa[1] >= 0.0);
    }

    #[test]
    fn kappa_tilde_identity_holds() {
        let g = gf(0.4, 0.5, 12.5, 20.0, 4);
        let tr = coefficients(&g);
        let v_dot = differentiate(g.v(), 4.0 * 0.01);
        for j in 0..tr.len() {
            let rhs = v_dot[j] + 2.0 * g.v()[j] * tr.kappa[j];
            assert!((tr.kappa_tilde[j] - rhs).abs() <= 1e-6 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn finite_difference_route_agrees() {
        let g = gf(0.3, 1.0, 1.0, 20.0, 10);
        let a = coefficients(&g);
        let b = coefficients_finite_difference(&g);
        for j in 0..a.len() {
            assert!((a.kappa[j] - b.kappa[j]).abs() < 1e-3, "j={j}");
            assert!((a.omega_prime[j] - b.omega_prime[j]).abs() < 1e-3);
        }
    }

    #[test]
    fn second_order_matches_exact_at_weak_coupling() {
        let g = gf(0.02, 1.0, 12.5, 50.0, 10);
        let exact = coefficients(&g);
        let second = second_order_coefficients(g.config(), g.grid()).unwrap();
        let bm = BmSolution::new(g.config()).unwrap();
        for j in 0..exact.len() {
            let i = g.sample_index(j);
            assert!(
                (exact.kappa[j] - second.kappa[i]).abs() < 0.1 * bm.kappa,
                "t={}",
                exact.times[j]
            );
        }
        assert!((second.kappa.last().unwrap() - bm.kappa).abs() < 0.02 * bm.kappa);
        assert!((second.kappa_tilde.last().unwrap() - bm.kappa_tilde()).abs() < 0.05 * bm.kappa_tilde());
    }

    #[test]
    fn second_order_at_zero_coupling() {
        let cfg = ReservoirConfig::new(SpectralDensity::new(0.0, 3.0, 1.0).unwrap(), 12.5).unwrap();
        let tr = second_order_coefficients(&cfg, &TimeGrid::with_step(5.0, 0.01).unwrap()).unwrap();
        assert!(tr.omega_prime.iter().all(|&w| w == 1.0));
        assert!(tr.kappa.iter().chain(&tr.kappa_tilde).all(|&k| k == 0.0));
    }
}
