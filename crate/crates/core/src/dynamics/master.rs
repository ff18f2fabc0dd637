//! Direct integration of the exact master equation in a truncated Fock basis
//!
//! ```text
//! drho/dt = -i w'(t) [a^+ a, rho]
//!         + kappa(t)  (2 a rho a^+ - a^+ a rho - rho a^+ a)
//!         + kappa~(t) (a^+ rho a + a rho a^+ - a^+ a rho - rho a a^+)
//! ```
//!
//! Matrix elements beyond the cutoff are zero. The generator maps the
//! diagonal `m - n = d` onto itself, so only diagonals that are occupied
//! initially are integrated. Time stepping is classical RK4 with the
//! coefficients interpolated between trace samples by cubic Lagrange
//! polynomials.

use num_complex::Complex64;

use crate::dynamics::coefficients::CoefficientTrace;
use crate::dynamics::states::{CavityState, FockMatrix};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOptions {
    /// Abort when `|Tr rho - 1|` exceeds this.
    pub trace_tolerance: f64,
    /// Population of the highest level above which the cutoff is flagged.
    pub overflow_threshold: f64,
    /// Upper bound on `h * L` for the RK4 substep `h`, with `L` a Gershgorin
    /// bound on the generator.
    pub stability_factor: f64,
    /// Store every `record_every`-th trace sample.
    pub record_every: usize,
    /// Integrate only the diagonals `m - n = d` with `|d|` up to this value.
    /// The generator never mixes diagonals, so populations only need `d = 0`.
    pub max_offset: Option<usize>,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self {
            trace_tolerance: 1e-6,
            overflow_threshold: 1e-8,
            stability_factor: 1.5,
            record_every: 1,
            max_offset: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MasterTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<FockMatrix>,
    pub max_trace_drift: f64,
    pub max_top_population: f64,
    /// True when the top Fock level ever held more than the overflow threshold.
    pub cutoff_overflow: bool,
    pub substeps: usize,
}

#[derive(Clone, Copy)]
struct Rates {
    omega: f64,
    kappa: f64,
    kappa_tilde: f64,
}

struct Generator {
    dim: usize,
    offsets: Vec<isize>,
    sqrt: Vec<f64>,
}

impl Generator {
    fn apply(&self, r: Rates, rho: &[Complex64], out: &mut [Complex64]) {
        let dim = self.dim;
        let Rates {
            omega,
            kappa,
            kappa_tilde,
        } = r;
        let down = 2.0 * kappa + kappa_tilde;
        for &d in &self.offsets {
            let m_lo = d.max(0) as usize;
            let m_hi = (dim as isize).min(dim as isize + d) as usize;
            for m in m_lo..m_hi {
                let n = (m as isize - d) as usize;
                let idx = m * dim + n;
                let s = (m + n) as f64;
                let diag = Complex64::new(-kappa * s - kappa_tilde * (s + 1.0), -omega * d as f64);
                let mut acc = diag * rho[idx];
                if m + 1 < dim && n + 1 < dim {
                    acc += rho[idx + dim + 1] * (down * self.sqrt[m + 1] * self.sqrt[n + 1]);
                }
                if m > 0 && n > 0 {
                    acc += rho[idx - dim - 1] * (kappa_tilde * self.sqrt[m] * self.sqrt[n]);
                }
                out[idx] = acc;
            }
        }
    }

    fn bound(&self, r: Rates) -> f64 {
        let d_max = self.offsets.iter().map(|d| d.unsigned_abs()).max().unwrap_or(0) as f64;
        let n = self.dim as f64;
        r.omega.abs() * d_max + 4.0 * n * (r.kappa.abs() + r.kappa_tilde.abs()) + r.kappa_tilde.abs()
    }
}

fn lagrange_cubic(trace: &CoefficientTrace, t: f64) -> Rates {
    let n = trace.len();
    let h = trace.step();
    let x = (t - trace.times[0]) / h;
    let base = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let mut r = Rates {
        omega: 0.0,
        kappa: 0.0,
        kappa_tilde: 0.0,
    };
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                w *= (x - (base + j) as f64) / (i as f64 - j as f64);
            }
        }
        let k = base + i;
        r.omega += w * trace.omega_prime[k];
        r.kappa += w * trace.kappa[k];
        r.kappa_tilde += w * trace.kappa_tilde[k];
    }
    r
}

/// Integrate from `rho0` at `ct.times[0]` across the whole coefficient trace.
/// The trace must be uniformly sampled with at least four points and no
/// flagged samples.
pub fn integrate_master_equation(
    rho0: &CavityState,
    ct: &CoefficientTrace,
    n_cutoff: usize,
    opts: &MasterOptions,
) -> Result<MasterTrajectory> {
    if ct.len() < 4 {
        return Err(invalid("trace", "need at least four coefficient samples"));
    }
    if let Some(t) = ct.first_invalid_time() {
        return Err(Error::SingularCoefficients { time: t });
    }
    if n_cutoff < 2 {
        return Err(invalid("n_cutoff", "need at least two Fock levels"));
    }
    let record_every = opts.record_every.max(1);
    let mut rho = rho0.to_fock(n_cutoff);
    let dim = n_cutoff;
    let reach = opts.max_offset.unwrap_or(dim - 1).min(dim - 1) as isize;
    let offsets: Vec<isize> = (-reach..=reach)
        .filter(|&d| {
            let m_lo = d.max(0) as usize;
            let m_hi = (dim as isize).min(dim as isize + d) as usize;
            (m_lo..m_hi).any(|m| rho.get(m, (m as isize - d) as usize).norm() > 0.0)
        })
        .collect();
    for m in 0..dim {
        for n in 0..dim {
            if (m as isize - n as isize).abs() > reach {
                rho.set(m, n, Complex64::new(0.0, 0.0));
            }
        }
    }
    let gen = Generator {
        dim,
        offsets,
        sqrt: (0..=dim).map(|k| (k as f64).sqrt()).collect(),
    };

    let len = dim * dim;
    let mut k1 = vec![Complex64::new(0.0, 0.0); len];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();

    let mut traj = MasterTrajectory {
        times: vec![ct.times[0]],
        states: vec![rho.clone()],
        max_trace_drift: (rho.trace().re - 1.0).abs(),
        max_top_population: rho.get(dim - 1, dim - 1).re,
        cutoff_overflow: false,
        substeps: 0,
    };

    let h_sample = ct.step();
    for j in 0..ct.len() - 1 {
        let lo = j.saturating_sub(1);
        let hi = (j + 2).min(ct.len() - 1);
        let bound = (lo..=hi)
            .map(|i| {
                gen.bound(Rates {
                    omega: ct.omega_prime[i],
                    kappa: ct.kappa[i],
                    kappa_tilde: ct.kappa_tilde[i],
                })
            })
            .fold(0.0, f64::max)
            * 1.2;
        let steps = ((h_sample * bound / opts.stability_factor).ceil() as usize).max(1);
        let h = h_sample / steps as f64;
        let t0 = ct.times[j];
        for step in 0..steps {
            let t = t0 + step as f64 * h;
            let r1 = lagrange_cubic(ct, t);
            let r2 = lagrange_cubic(ct, t + 0.5 * h);
            let r4 = lagrange_cubic(ct, t + h);
            let x = rho.as_slice();
            gen.apply(r1, x, &mut k1);
            for &d in &gen.offsets {
                for_diagonal(dim, d, |i| stage[i] = x[i] + k1[i] * (0.5 * h));
            }
            gen.apply(r2, &stage, &mut k2);
            for &d in &gen.offsets {
                for_diagonal(dim, d, |i| stage[i] = x[i] + k2[i] * (0.5 * h));
            }
            gen.apply(r2, &stage, &mut k3);
            for &d in &gen.offsets {
                for_diagonal(dim, d, |i| stage[i] = x[i] + k3[i] * h);
            }
            gen.apply(r4, &stage, &mut k4);
            let x = rho.as_mut_slice();
            for &d in &gen.offsets {
                for_diagonal(dim, d, |i| {
                    x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
                });
            }
        }
        traj.substeps += steps;

        let t = ct.times[j + 1];
        let drift = (rho.trace().re - 1.0).abs();
        traj.max_trace_drift = traj.max_trace_drift.max(drift);
        if !(drift <= opts.trace_tolerance) {
            return Err(Error::TraceDrift { drift, time: t });
        }
        let top = rho.get(dim - 1, dim - 1).re;
        traj.max_top_population = traj.max_top_population.max(top);
        traj.cutoff_overflow |= top > opts.overflow_threshold;
        if (j + 1) % record_every == 0 || j + 2 == ct.len() {
            traj.times.push(t);
            traj.states.push(rho.clone());
        }
    }
    Ok(traj)
}

fn for_diagonal(dim: usize, d: isize, mut f: impl FnMut(usize)) {
    let m_lo = d.max(0) as usize;
    let m_hi = (dim as isize).min(dim as isize + d) as usize;
    for m in m_lo..m_hi {
        f(m * dim + (m as isize - d) as usize);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::states::geometric_populations;

    fn times(n: usize, h: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * h).collect()
    }

    #[test]
    fn vacuum_is_fixed_point_of_pure_decay() {
        let ct = CoefficientTrace::constant(times(101, 0.05), 1.0, 0.3, 0.0);
        let traj = integrate_master_equation(&CavityState::vacuum(), &ct, 10, &MasterOptions::default()).unwrap();
        let last = traj.states.last().unwrap();
        assert_eq!(last.get(0, 0), Complex64::new(1.0, 0.0));
        assert_eq!(last.trace(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn constant_rates_relax_to_markov_thermal_state() {
        // kappa~ = 2 kappa nbar drives the mean to nbar.
        let (kappa, nbar) = (0.5, 2.0);
        let ct = CoefficientTrace::constant(times(401, 0.05), 1.0, kappa, 2.0 * kappa * nbar);
        let dim = 80;
        let traj = integrate_master_equation(&CavityState::vacuum(), &ct, dim, &MasterOptions::default()).unwrap();
        for (t, rho) in traj.times.iter().zip(&traj.states) {
            let mean = nbar * (1.0 - (-2.0 * kappa * t).exp());
            let p = geometric_populations(mean, dim);
            for n in 0..dim {
                assert!((rho.get(n, n).re - p[n]).abs() < 1e-7, "t={t} n={n}");
            }
            assert!(rho.max_offdiagonal() == 0.0);
        }
        assert!(traj.max_trace_drift < 1e-10);
        assert!(!traj.cutoff_overflow);
    }

    #[test]
    fn coherent_amplitude_decays_and_rotates() {
        let (w, kappa) = (1.3, 0.2);
        let ct = CoefficientTrace::constant(times(201, 0.05), w, kappa, 0.0);
        let alpha = Complex64::new(1.0, 0.5);
        let traj =
            integrate_master_equation(&CavityState::coherent(alpha, 30), &ct, 30, &MasterOptions::default()).unwrap();
        let opts = MasterOptions {
            max_offset: Some(1),
            stability_factor: 0.3,
            ..Default::default()
        };
        let banded = integrate_master_equation(&CavityState::coherent(alpha, 30), &ct, 30, &opts).unwrap();
        for ((t, rho), band) in traj.times.iter().zip(&traj.states).zip(&banded.states) {
            let expected = alpha * Complex64::new(-kappa * t, -w * t).exp();
            assert!((rho.mean_amplitude() - expected).norm() < 1e-8, "t={t}");
            assert!((band.mean_amplitude() - expected).norm() < 1e-8, "t={t}");
            for (x, y) in rho.populations().iter().zip(band.populations()) {
                assert!((x - y).abs() < 1e-8);
            }
            assert_eq!(band.get(5, 2), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rejects_flagged_or_short_traces() {
        let mut ct = CoefficientTrace::constant(times(10, 0.1), 1.0, 0.1, 0.0);
        ct.valid[4] = false;
        let err = integrate_master_equation(&CavityState::vacuum(), &ct, 5, &MasterOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SingularCoefficients { .. }));
        let ct = CoefficientTrace::constant(times(3, 0.1), 1.0, 0.1, 0.0);
        assert!(integrate_master_equation(&CavityState::vacuum(), &ct, 5, &MasterOptions::default()).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let ct = CoefficientTrace::constant(times(41, 0.05), 1.0, 0.5, 5.0);
        let traj = integrate_master_equation(&CavityState::vacuum(), &ct, 6, &MasterOptions::default());
        match traj {
            Ok(t) => assert!(t.cutoff_overflow),
            Err(e) => assert!(matches!(e, Error::TraceDrift { .. })),
        }
    }
}
