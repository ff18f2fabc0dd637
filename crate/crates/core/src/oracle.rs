//! Exact single-excitation dynamics of the cavity coupled to a finite set of
//! reservoir modes.
//!
//! The one-particle Hamiltonian is the arrowhead matrix with the cavity
//! frequency in the corner, the mode frequencies on the diagonal and the
//! couplings `V_k` in the first row and column. With `H = X diag(l) X^T`,
//!
//! ```text
//! u(t)         = sum_j X_0j^2 exp(-i l_j t)
//! [e^{-iHt}]_0k = sum_j X_0j X_kj exp(-i l_j t)
//! v(t)         = sum_k nbar(w_k) |[e^{-iHt}]_0k|^2
//! ```

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::reservoir::{bose_occupation, SpectralDensity};

pub const DEFAULT_MODES: usize = 2000;
/// Default upper frequency, in units of the cutoff.
pub const DEFAULT_BANDWIDTH: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathGrid {
    /// Midpoints of `N` equal cells in `omega`.
    Uniform,
    /// Midpoints of `N` equal cells in `x = sqrt(omega)`, which crowds modes
    /// towards zero frequency where thermal occupations are largest.
    #[default]
    SquareRoot,
}

/// Reservoir modes `w_k` with squared couplings `|V_k|^2 = J(w_k) dw_k / 2pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteReservoir {
    pub omegas: Vec<f64>,
    pub couplings_sq: Vec<f64>,
}

impl DiscreteReservoir {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// `sum_k |V_k|^2`, the discrete counterpart of `int dw/2pi J(w)`.
    pub fn sum_rule(&self) -> f64 {
        self.couplings_sq.iter().sum()
    }

    pub fn max_spacing(&self) -> f64 {
        let mut w = self.omegas.clone();
        w.sort_by(f64::total_cmp);
        let mut max = w.first().copied().unwrap_or(0.0);
        for pair in w.windows(2) {
            max = max.max(pair[1] - pair[0]);
        }
        max
    }

    /// Earliest recurrence time `2 pi / max spacing`.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.max_spacing()
    }

    /// Fails if `t_max` reaches half the recurrence time.
    pub fn check_window(&self, t_max: f64) -> Result<()> {
        let limit = 0.5 * self.recurrence_time();
        if t_max >= limit {
            return Err(invalid(
                "times",
                format!("window {t_max} reaches half the bath recurrence time {limit}"),
            ));
        }
        Ok(())
    }

    /// Diagonalize the one-particle Hamiltonian with cavity frequency `omega0`.
    pub fn diagonalize(&self, omega0: f64) -> Result<ExactEvolution> {
        let n = self.len() + 1;
        let v: Vec<f64> = self.couplings_sq.iter().map(|c| c.sqrt()).collect();
        let h = Mat::<f64>::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) => omega0,
            (0, k) | (k, 0) => v[k - 1],
            (i, j) if i == j => self.omegas[i - 1],
            _ => 0.0,
        });
        let eig = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let energies: Vec<f64> = (0..n).map(|j| eig.S().column_vector()[j]).collect();
        let u_mat = eig.U();
        let vectors = Mat::<f64>::from_fn(n, n, |i, j| u_mat[(i, j)]);
        Ok(ExactEvolution {
            omegas: self.omegas.clone(),
            energies,
            vectors,
        })
    }
}

pub fn discretize_reservoir(sd: &SpectralDensity, n_modes: usize, omega_max: f64) -> Result<DiscreteReservoir> {
    discretize_reservoir_with(sd, n_modes, omega_max, BathGrid::default())
}

pub fn discretize_reservoir_with(
    sd: &SpectralDensity,
    n_modes: usize,
    omega_max: f64,
    grid: BathGrid,
) -> Result<DiscreteReservoir> {
    if n_modes == 0 {
        return Err(invalid("n_modes", "need at least one mode"));
    }
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(invalid("omega_max", format!("must be > 0, got {omega_max}")));
    }
    let (omegas, widths): (Vec<f64>, Vec<f64>) = match grid {
        BathGrid::Uniform => {
            let dw = omega_max / n_modes as f64;
            (0..n_modes).map(|k| ((k as f64 + 0.5) * dw, dw)).unzip()
        }
        BathGrid::SquareRoot => {
            let dx = omega_max.sqrt() / n_modes as f64;
            (0..n_modes)
                .map(|k| {
                    let x = (k as f64 + 0.5) * dx;
                    (x * x, 2.0 * x * dx)
                })
                .unzip()
        }
    };
    let couplings_sq = omegas
        .iter()
        .zip(&widths)
        .map(|(&w, &dw)| sd.value(w) * dw / (2.0 * PI))
        .collect();
    Ok(DiscreteReservoir { omegas, couplings_sq })
}

/// Eigendecomposition of the one-particle Hamiltonian.
#[derive(Debug, Clone)]
pub struct ExactEvolution {
    omegas: Vec<f64>,
    energies: Vec<f64>,
    vectors: Mat<f64>,
}

impl ExactEvolution {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn u(&self, t: f64) -> Complex64 {
        (0..self.energies.len())
            .map(|j| Complex64::from_polar(self.vectors[(0, j)].powi(2), -self.energies[j] * t))
            .sum()
    }

    /// First row of `exp(-i H t)`: index 0 is the cavity, `k >= 1` the modes.
    pub fn row(&self, t: f64) -> Vec<Complex64> {
        let n = self.energies.len();
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for j in 0..n {
            let c = Complex64::from_polar(self.vectors[(0, j)], -self.energies[j] * t);
            let col = self.vectors.col(j);
            for k in 0..n {
                let x = col[k];
                re[k] += c.re * x;
                im[k] += c.im * x;
            }
        }
        re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect()
    }

    /// `sum_k nbar(w_k) |[e^{-iHt}]_0k|^2`, zero at `theta = 0`.
    pub fn v(&self, t: f64, theta: f64) -> Result<f64> {
        if theta == 0.0 {
            return Ok(0.0);
        }
        let row = self.row(t);
        let mut acc = 0.0;
        for (k, w) in self.omegas.iter().enumerate() {
            acc += bose_occupation(*w, theta)? * row[k + 1].norm_sqr();
        }
        Ok(acc)
    }
}

pub fn exact_u_oracle(dr: &DiscreteReservoir, omega0: f64, times: &[f64]) -> Result<Vec<Complex64>> {
    let ev = dr.diagonalize(omega0)?;
    Ok(times.iter().map(|&t| ev.u(t)).collect())
}

pub fn exact_v_oracle(dr: &DiscreteReservoir, theta: f64, omega0: f64, times: &[f64]) -> Result<Vec<f64>> {
    if !(theta >= 0.0) {
        return Err(invalid("theta", format!("must be >= 0, got {theta}")));
    }
    if theta == 0.0 {
        return Ok(vec![0.0; times.len()]);
    }
    let ev = dr.diagonalize(omega0)?;
    times.par_iter().map(|&t| ev.v(t, theta)).collect()
}

/// `u` and `v` from a single eigendecomposition.
pub fn exact_uv_oracle(
    dr: &DiscreteReservoir,
    theta: f64,
    omega0: f64,
    times: &[f64],
) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let ev = dr.diagonalize(omega0)?;
    let u = times.iter().map(|&t| ev.u(t)).collect();
    let v = times.par_iter().map(|&t| ev.v(t, theta)).collect::<Result<Vec<_>>>()?;
    Ok((u, v))
}
