//! Reservoir spectral density, thermal occupation and the two memory kernels
//!
//! ```text
//! J(w)     = 2 pi eta w (w / w_c)^(s-1) exp(-w / w_c)
//! g(tau)   = int_0^inf dw/2pi J(w) exp(-i w tau)
//! g~(tau)  = int_0^inf dw/2pi J(w) nbar(w, T) exp(-i w tau)
//! ```
//!
//! Frequencies are in units of the cavity frequency and times in units of its
//! inverse. `g` has the closed form `eta w_c^2 Gamma(s+1) (1 + i w_c tau)^-(s+1)`;
//! `g~` is integrated numerically.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::quad::{integrate, integrate_from_origin, QuadOptions};

/// Power-law spectral density with exponential cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    eta: f64,
    s: f64,
    omega_c: f64,
}

impl SpectralDensity {
    pub fn new(eta: f64, s: f64, omega_c: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(invalid("eta", format!("coupling must be finite and >= 0, got {eta}")));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid("s", format!("Ohmicity exponent must be > 0, got {s}")));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(invalid("omega_c", format!("cutoff must be > 0, got {omega_c}")));
        }
        Ok(Self { eta, s, omega_c })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(eta, self.s, self.omega_c)
    }

    /// J(omega) for omega >= 0 (no argument check).
    pub fn value(&self, omega: f64) -> f64 {
        2.0 * PI * self.eta * self.omega_c.powf(1.0 - self.s) * omega.powf(self.s) * (-omega / self.omega_c).exp()
    }

    /// Closed form of g(tau).
    pub fn kernel(&self, tau: f64) -> Complex64 {
        let z = Complex64::new(1.0, self.omega_c * tau);
        self.kernel_at_origin() * z.powf(-(self.s + 1.0))
    }

    /// g(0) = eta w_c^2 Gamma(s+1).
    pub fn kernel_at_origin(&self) -> f64 {
        self.eta * self.omega_c * self.omega_c * gamma(self.s + 1.0)
    }

    /// int_0^inf dw/2pi J(w)/w = eta w_c Gamma(s).
    pub fn inverse_moment(&self) -> f64 {
        self.eta * self.omega_c * gamma(self.s)
    }
}

/// Reservoir spectral density together with its initial temperature
/// `theta = k_B T / (hbar omega0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    pub spectral: SpectralDensity,
    theta: f64,
}

impl ReservoirConfig {
    pub fn new(spectral: SpectralDensity, theta: f64) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(invalid(
                "theta",
                format!("temperature must be finite and >= 0, got {theta}"),
            ));
        }
        Ok(Self { spectral, theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.theta == 0.0
    }
}

/// g and g~ evaluated at one time lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub tau: f64,
    pub g: Complex64,
    pub g_tilde: Complex64,
}

pub fn spectral_density(omega: f64, sd: &SpectralDensity) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(invalid("omega", format!("frequency must be >= 0, got {omega}")));
    }
    Ok(sd.value(omega))
}

/// Bose-Einstein occupation `1 / (exp(omega / theta) - 1)`; zero at `theta = 0`.
pub fn bose_occupation(omega: f64, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(invalid("theta", format!("temperature must be >= 0, got {theta}")));
    }
    if theta == 0.0 {
        if !(omega > 0.0) {
            return Err(invalid("omega", format!("frequency must be > 0, got {omega}")));
        }
        return Ok(0.0);
    }
    if !(omega > 0.0) {
        return Err(invalid("omega", format!("occupation diverges at omega = {omega}")));
    }
    Ok(1.0 / (omega / theta).exp_m1())
}

pub fn kernel_g(tau: f64, sd: &SpectralDensity) -> Complex64 {
    sd.kernel(tau)
}

/// Upper limit of the frequency integrals.
pub fn frequency_cutoff(cfg: &ReservoirConfig) -> f64 {
    50.0 * cfg.spectral.omega_c.max(cfg.theta)
}

fn thermal_options(sd: &SpectralDensity) -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-10 * sd.eta * sd.omega_c * sd.omega_c,
        rel_tol: 0.0,
        max_subdivisions: 50_000,
    }
}

/// J(w) nbar(w) / 2pi, written so that the w -> 0 limit stays finite in
/// floating point for s >= 1.
fn thermal_weight(sd: &SpectralDensity, theta: f64, omega: f64) -> f64 {
    sd.eta * sd.omega_c.powf(1.0 - sd.s) * omega.powf(sd.s) * (-omega / sd.omega_c).exp() / (omega / theta).exp_m1()
}

/// g~(tau) by adaptive quadrature over `(0, 50 max(w_c, theta)]`.
pub fn kernel_g_tilde(tau: f64, cfg: &ReservoirConfig) -> Result<Complex64> {
    let sd = &cfg.spectral;
    if cfg.is_zero_temperature() || sd.eta == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let theta = cfg.theta;
    let split = sd.omega_c.min(theta);
    let est = integrate_from_origin(
        |w: f64| Complex64::from_polar(thermal_weight(sd, theta, w), -w * tau),
        split,
        frequency_cutoff(cfg),
        &thermal_options(sd),
    )?;
    Ok(est.value)
}

/// g(tau) by quadrature of its defining integral. Used to validate the
/// closed form.
pub fn kernel_g_quadrature(tau: f64, sd: &SpectralDensity) -> Result<Complex64> {
    if sd.eta == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let opts = QuadOptions {
        abs_tol: 1e-13 * sd.kernel_at_origin(),
        rel_tol: 0.0,
        max_subdivisions: 50_000,
    };
    let upper = 80.0 * sd.omega_c;
    let f = |w: f64| Complex64::from_polar(sd.value(w) / (2.0 * PI), -w * tau);
    let est = if sd.s < 1.0 {
        integrate_from_origin(f, sd.omega_c, upper, &opts)?
    } else {
        integrate(f, 0.0, upper, &opts)?
    };
    Ok(est.value)
}

pub fn kernel_sample(tau: f64, cfg: &ReservoirConfig) -> Result<KernelSample> {
    Ok(KernelSample {
        tau,
        g: kernel_g(tau, &cfg.spectral),
        g_tilde: kernel_g_tilde(tau, cfg)?,
    })
}

/// Both kernels sampled at `tau = j dt`, `j = 0..len`. Negative lags are
/// served through `k(-tau) = conj(k(tau))`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    config: ReservoirConfig,
    dt: f64,
    g: Vec<Complex64>,
    g_tilde: Vec<Complex64>,
}

impl KernelTable {
    pub fn build(cfg: &ReservoirConfig, dt: f64, len: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("time step must be > 0, got {dt}")));
        }
        let g = (0..len).map(|j| cfg.spectral.kernel(j as f64 * dt)).collect();
        let g_tilde = if cfg.is_zero_temperature() || cfg.spectral.eta == 0.0 {
            vec![Complex64::new(0.0, 0.0); len]
        } else {
            (0..len)
                .into_par_iter()
                .map(|j| kernel_g_tilde(j as f64 * dt, cfg))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Self {
            config: *cfg,
            dt,
            g,
            g_tilde,
        })
    }

    /// The same table for another coupling strength. Both kernels are linear
    /// in eta, so no quadrature is repeated.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        let old = self.config.spectral.eta;
        if old == 0.0 {
            return Err(invalid("eta", "cannot rescale a table built at eta = 0"));
        }
        let spectral = self.config.spectral.with_eta(eta)?;
        let factor = eta / old;
        Ok(Self {
            config: ReservoirConfig::new(spectral, self.config.theta)?,
            dt: self.dt,
            g: self.g.iter().map(|z| z * factor).collect(),
            g_tilde: self.g_tilde.iter().map(|z| z * factor).collect(),
        })
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.config
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn g_values(&self) -> &[Complex64] {
        &self.g
    }

    pub fn g_tilde_values(&self) -> &[Complex64] {
        &self.g_tilde
    }

    /// g at lag `j dt`; `j` may be negative.
    pub fn g(&self, j: isize) -> Complex64 {
        if j >= 0 {
            self.g[j as usize]
        } else {
            self.g[(-j) as usize].conj()
        }
    }

    pub fn g_tilde(&self, j: isize) -> Complex64 {
        if j >= 0 {
            self.g_tilde[j as usize]
        } else {
            self.g_tilde[(-j) as usize].conj()
        }
    }

    pub fn sample(&self, j: isize) -> KernelSample {
        KernelSample {
            tau: j as f64 * self.dt,
            g: self.g(j),
            g_tilde: self.g_tilde(j),
        }
    }

    pub fn has_thermal_part(&self) -> bool {
        !(self.config.is_zero_temperature() || self.config.spectral.eta == 0.0)
    }
}
