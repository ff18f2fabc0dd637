//! Mean field, photon number and the coefficients of the density-matrix
//! propagating function in the coherent-state representation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{BmSolution, GreenFunctions};

/// `<a(t)> = u(t) alpha0` on the full solver grid.
pub fn mean_amplitude(gf: &GreenFunctions, alpha0: Complex64) -> Vec<Complex64> {
    gf.u().iter().map(|u| u * alpha0).collect()
}

/// `n(t) = |u(t)|^2 n0 + v(t)` at the `v` sample points.
pub fn photon_number(gf: &GreenFunctions, n0: f64) -> Result<Vec<f64>> {
    if !(n0 >= 0.0) {
        return Err(crate::error::invalid(
            "n0",
            format!("initial occupation must be >= 0, got {n0}"),
        ));
    }
    Ok(gf
        .sampled_u()
        .iter()
        .zip(gf.v())
        .map(|(u, v)| u.norm_sqr() * n0 + v)
        .collect())
}

/// `A, B, C, D` in
/// `rho(a_f*, a_f', t) = A int rho(a_i*, a_i', 0)
///     exp{a_f* B a_i + a_f* C a_f' + a_i* D a_i + a_i'* B* a_f'}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorCoefficients {
    pub a: f64,
    pub b: Complex64,
    pub c: f64,
    pub d: f64,
}

impl PropagatorCoefficients {
    pub fn exact(u: Complex64, v: f64) -> Self {
        let w = 1.0 + v;
        Self {
            a: 1.0 / w,
            b: u / w,
            c: v / w,
            d: 1.0 - u.norm_sqr() / w,
        }
    }

    pub fn zero_temperature(u: Complex64) -> Self {
        Self {
            a: 1.0,
            b: u,
            c: 0.0,
            d: 1.0 - u.norm_sqr(),
        }
    }

    pub fn born_markov(bm: &BmSolution, t: f64) -> Self {
        Self::exact(bm.u(t), bm.v(t))
    }

    /// `(u, v)` recovered from the coefficients.
    pub fn green_functions(&self) -> (Complex64, f64) {
        (self.b / self.a, self.c / self.a)
    }

    /// Mean occupation of an initial thermal state with `n0` photons.
    pub fn thermal_mean(&self, n0: f64) -> f64 {
        let (u, v) = self.green_functions();
        u.norm_sqr() * n0 + v
    }
}

pub fn propagator_coefficients(gf: &GreenFunctions, sample: usize) -> Result<PropagatorCoefficients> {
    if sample >= gf.sample_count() {
        return Err(Error::IndexOutOfRange {
            index: sample,
            len: gf.sample_count(),
        });
    }
    let u = gf.u()[gf.sample_index(sample)];
    Ok(if gf.config().is_zero_temperature() {
        PropagatorCoefficients::zero_temperature(u)
    } else {
        PropagatorCoefficients::exact(u, gf.v()[sample])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::coefficients::{coefficients, differentiate};
    use crate::greens::TimeGrid;
    use crate::reservoir::{ReservoirConfig, SpectralDensity};

    fn gf_strided(eta: f64, theta: f64, stride: usize) -> GreenFunctions {
        let cfg = ReservoirConfig::new(SpectralDensity::new(eta, 1.0, 1.0).unwrap(), theta).unwrap();
        GreenFunctions::compute(&cfg, TimeGrid::with_step(20.0, 0.01).unwrap(), Some(stride)).unwrap()
    }

    fn gf(eta: f64, theta: f64) -> GreenFunctions {
        gf_strided(eta, theta, 5)
    }

    #[test]
    fn amplitude_and_number() {
        let g = gf(0.0, 0.0);
        let a = mean_amplitude(&g, Complex64::new(0.0, 0.0));
        assert!(a.iter().all(|z| z.norm() == 0.0));
        let a = mean_amplitude(&g, Complex64::new(1.0, 0.0));
        for (i, z) in a.iter().enumerate() {
            // trapezoidal phase error t dt^2 / 12
            let t = g.grid().time(i);
            assert!((z - Complex64::from_polar(1.0, -t)).norm() < 1e-5 * t + 1e-12);
        }
        let n = photon_number(&g, 7.0).unwrap();
        assert!(n.iter().all(|x| (x - 7.0).abs() < 1e-10));
        let g = gf(0.2, 12.5);
        assert_eq!(photon_number(&g, 0.0).unwrap(), g.v().to_vec());
        assert!(photon_number(&g, -1.0).is_err());
    }

    #[test]
    fn occupation_obeys_rate_equation() {
        let g = gf_strided(0.3, 12.5, 1);
        let n = photon_number(&g, 20.0).unwrap();
        let tr = coefficients(&g);
        let n_dot = differentiate(&n, 0.01);
        for j in 0..n.len() {
            let rhs = -2.0 * tr.kappa[j] * n[j] + tr.kappa_tilde[j];
            assert!(
                (n_dot[j] - rhs).abs() < 1e-4 * (1.0 + n[j]),
                "j={j}: {} vs {rhs}",
                n_dot[j]
            );
        }
    }

    #[test]
    fn propagator_rows() {
        let g = gf(0.2, 12.5);
        let p = propagator_coefficients(&g, 0).unwrap();
        assert_eq!((p.a, p.b, p.c, p.d), (1.0, Complex64::new(1.0, 0.0), 0.0, 0.0));
        for j in 0..g.sample_count() {
            let p = propagator_coefficients(&g, j).unwrap();
            let (u, v) = p.green_functions();
            assert!((u - g.u()[g.sample_index(j)]).norm() < 1e-14);
            assert!((v - g.v()[j]).abs() < 1e-12 * (1.0 + v));
            assert!(p.a > 0.0 && p.c >= 0.0 && p.c < 1.0);
            assert!((p.d - (1.0 - p.b.norm_sqr() / p.a)).abs() < 1e-12);
        }
        assert!(propagator_coefficients(&g, g.sample_count()).is_err());

        let g = gf(0.2, 0.0);
        let p = propagator_coefficients(&g, 10).unwrap();
        let u = g.u()[g.sample_index(10)];
        assert_eq!(p, PropagatorCoefficients::zero_temperature(u));
        assert_eq!(p.c, 0.0);
    }

    #[test]
    fn born_markov_row_reproduces_markov_occupation() {
        let cfg = ReservoirConfig::new(SpectralDensity::new(0.1, 1.0, 1.0).unwrap(), 12.5).unwrap();
        let bm = BmSolution::new(&cfg).unwrap();
        for &t in &[0.0, 1.0, 10.0, 100.0] {
            let p = PropagatorCoefficients::born_markov(&bm, t);
            let expected = 50.0 * (-2.0 * bm.kappa * t).exp() + bm.n_bar * (1.0 - (-2.0 * bm.kappa * t).exp());
            assert!((p.thermal_mean(50.0) - expected).abs() < 1e-12 * expected);
        }
    }
}
