//! Reduced density matrices for the three families of initial states whose
//! evolution is known in closed form.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::greens::GreenFunctions;

/// Largest neglected population accepted when truncating a closed form.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// Dense density matrix in the Fock basis `|0>, ..., |dim - 1>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl FockMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn from_diagonal(populations: &[f64]) -> Self {
        let mut m = Self::zeros(populations.len());
        for (n, &p) in populations.iter().enumerate() {
            m.set(n, n, Complex64::new(p, 0.0));
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[m * self.dim + n]
    }

    pub fn set(&mut self, m: usize, n: usize, value: Complex64) {
        self.data[m * self.dim + n] = value;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|n| self.get(n, n)).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|n| self.get(n, n).re).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        (0..self.dim).map(|n| n as f64 * self.get(n, n).re).sum()
    }

    /// `Tr(a rho)`.
    pub fn mean_amplitude(&self) -> Complex64 {
        (1..self.dim).map(|n| self.get(n, n - 1) * (n as f64).sqrt()).sum()
    }

    pub fn max_offdiagonal(&self) -> f64 {
        let mut max = 0.0f64;
        for m in 0..self.dim {
            for n in 0..self.dim {
                if m != n {
                    max = max.max(self.get(m, n).norm());
                }
            }
        }
        max
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut max = 0.0f64;
        for m in 0..self.dim {
            for n in m..self.dim {
                max = max.max((self.get(m, n) - self.get(n, m).conj()).norm());
            }
        }
        max
    }

    /// Displaced thermal state: a thermal state with `v` noise photons
    /// displaced by `alpha`,
    ///
    /// ```text
    /// rho_mn = exp(-|alpha|^2 / (1+v)) sum_k v^k / (1+v)^(k+1)
    ///          beta^(m-k) beta*^(n-k) sqrt(m! n!) / (k! (m-k)! (n-k)!),
    /// beta = alpha / (1 + v).
    /// ```
    ///
    /// All terms of the sum share the phase `exp(i (m-n) arg beta)` and are
    /// accumulated in log space.
    pub fn displaced_thermal(alpha: Complex64, v: f64, dim: usize) -> Self {
        let terms = DisplacedThermal::new(alpha, v, dim);
        let mut rho = Self::zeros(dim);
        for m in 0..dim {
            for n in m..dim {
                let z = Complex64::from_polar(terms.magnitude(m, n), (m as f64 - n as f64) * terms.phase);
                rho.set(m, n, z);
                rho.set(n, m, z.conj());
            }
        }
        rho
    }
}

/// Diagonal of [`FockMatrix::displaced_thermal`] without building the matrix.
pub fn displaced_thermal_populations(alpha: Complex64, v: f64, dim: usize) -> Vec<f64> {
    let terms = DisplacedThermal::new(alpha, v, dim);
    (0..dim).map(|n| terms.magnitude(n, n)).collect()
}

struct DisplacedThermal {
    prefactor: f64,
    ln_beta: f64,
    zero_beta: bool,
    phase: f64,
    v: f64,
    ln_v: f64,
    ln_w: f64,
    ln_fact: Vec<f64>,
}

impl DisplacedThermal {
    fn new(alpha: Complex64, v: f64, dim: usize) -> Self {
        let w = 1.0 + v;
        let beta = alpha / w;
        let mut ln_fact = vec![0.0; dim + 1];
        for k in 1..=dim {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        Self {
            prefactor: -alpha.norm_sqr() / w,
            ln_beta: beta.norm().ln(),
            zero_beta: beta.norm() == 0.0,
            phase: beta.arg(),
            v,
            ln_v: v.ln(),
            ln_w: w.ln(),
            ln_fact,
        }
    }

    /// `|rho_mn|` for `m <= n`.
    fn magnitude(&self, m: usize, n: usize) -> f64 {
        let f = &self.ln_fact;
        let mut sum = 0.0;
        for k in 0..=m {
            if self.v == 0.0 && k > 0 {
                break;
            }
            let powers = (m - k + n - k) as f64;
            if self.zero_beta && powers > 0.0 {
                continue;
            }
            let k_term = if k == 0 { 0.0 } else { k as f64 * self.ln_v };
            let b_term = if powers == 0.0 { 0.0 } else { powers * self.ln_beta };
            let ln_term = self.prefactor + k_term - (k as f64 + 1.0) * self.ln_w + b_term + 0.5 * (f[m] + f[n])
                - f[k]
                - f[m - k]
                - f[n - k];
            sum += ln_term.exp();
        }
        sum
    }
}

/// `p_n = mean^n / (1 + mean)^(n+1)` for `n < dim`.
pub fn geometric_populations(mean: f64, dim: usize) -> Vec<f64> {
    let a = 1.0 / (1.0 + mean);
    let r = mean / (1.0 + mean);
    let mut out = Vec::with_capacity(dim);
    let mut p = a;
    for _ in 0..dim {
        out.push(p);
        p *= r;
    }
    out
}

/// Fock dimension for states with mean occupation up to `max_mean`.
///
/// The larger of `1.5 m + 10 sqrt(m) + 20`, which covers Poisson-like
/// distributions, and the number of levels after which a geometric
/// distribution with mean `m` keeps less than [`TAIL_TOLERANCE`].
pub fn fock_cutoff(max_mean: f64) -> usize {
    fock_cutoff_with(max_mean, TAIL_TOLERANCE)
}

/// [`fock_cutoff`] with a different geometric tail bound. Direct integration
/// leaks probability through the top level for the whole run, so it needs a
/// smaller tail than a single closed-form state.
pub fn fock_cutoff_with(max_mean: f64, tail: f64) -> usize {
    let m = max_mean.max(0.0);
    let rule = (1.5 * m + 10.0 * m.sqrt() + 20.0).ceil() as usize;
    let geometric = if m > 0.0 {
        (tail.ln() / (m / (1.0 + m)).ln()).ceil() as usize
    } else {
        0
    };
    rule.max(geometric)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CavityState {
    /// Evolved from the vacuum: geometric populations with mean `v`.
    VacuumEvolved {
        v: f64,
    },
    /// Evolved from a coherent state: displaced thermal state with amplitude
    /// `alpha = u alpha0` and noise `v`, expanded to the stored cutoff.
    CoherentEvolved {
        alpha: Complex64,
        v: f64,
        rho: FockMatrix,
    },
    /// Evolved from a thermal state: geometric populations with the given mean.
    ThermalEvolved {
        mean: f64,
    },
    Numeric(FockMatrix),
}

impl CavityState {
    pub fn vacuum() -> Self {
        Self::VacuumEvolved { v: 0.0 }
    }

    pub fn thermal(mean: f64) -> Self {
        Self::ThermalEvolved { mean }
    }

    pub fn coherent(alpha: Complex64, dim: usize) -> Self {
        Self::CoherentEvolved {
            alpha,
            v: 0.0,
            rho: FockMatrix::displaced_thermal(alpha, 0.0, dim),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::VacuumEvolved { .. } => "vacuum-evolved",
            Self::CoherentEvolved { .. } => "coherent-evolved",
            Self::ThermalEvolved { .. } => "thermal-evolved",
            Self::Numeric(_) => "numeric",
        }
    }

    pub fn mean_photon_number(&self) -> f64 {
        match self {
            Self::VacuumEvolved { v } => *v,
            Self::CoherentEvolved { alpha, v, .. } => alpha.norm_sqr() + v,
            Self::ThermalEvolved { mean } => *mean,
            Self::Numeric(rho) => rho.mean_photon_number(),
        }
    }

    /// Trace of the represented state. The geometric families sum to one
    /// analytically; truncated matrices report their actual trace.
    pub fn trace(&self) -> f64 {
        match self {
            Self::VacuumEvolved { .. } | Self::ThermalEvolved { .. } => 1.0,
            Self::CoherentEvolved { rho, .. } | Self::Numeric(rho) => rho.trace().re,
        }
    }

    /// First `dim` Fock populations.
    pub fn populations(&self, dim: usize) -> Vec<f64> {
        match self {
            Self::VacuumEvolved { v } => geometric_populations(*v, dim),
            Self::ThermalEvolved { mean } => geometric_populations(*mean, dim),
            Self::CoherentEvolved { rho, .. } | Self::Numeric(rho) => {
                let mut p = rho.populations();
                p.resize(dim, 0.0);
                p
            }
        }
    }

    /// Density matrix truncated to `dim` levels.
    pub fn to_fock(&self, dim: usize) -> FockMatrix {
        match self {
            Self::VacuumEvolved { .. } | Self::ThermalEvolved { .. } => {
                FockMatrix::from_diagonal(&self.populations(dim))
            }
            Self::CoherentEvolved { alpha, v, rho } => {
                if rho.dim() == dim {
                    rho.clone()
                } else {
                    FockMatrix::displaced_thermal(*alpha, *v, dim)
                }
            }
            Self::Numeric(rho) => {
                let mut out = FockMatrix::zeros(dim);
                for m in 0..dim.min(rho.dim()) {
                    for n in 0..dim.min(rho.dim()) {
                        out.set(m, n, rho.get(m, n));
                    }
                }
                out
            }
        }
    }
}

fn sample_uv(gf: &GreenFunctions, sample: usize) -> Result<(Complex64, f64)> {
    if sample >= gf.sample_count() {
        return Err(Error::IndexOutOfRange {
            index: sample,
            len: gf.sample_count(),
        });
    }
    Ok((gf.u()[gf.sample_index(sample)], gf.v()[sample]))
}

pub fn evolve_vacuum(gf: &GreenFunctions, sample: usize) -> Result<CavityState> {
    let (_, v) = sample_uv(gf, sample)?;
    Ok(CavityState::VacuumEvolved { v })
}

pub fn evolve_thermal(gf: &GreenFunctions, n0: f64, sample: usize) -> Result<CavityState> {
    if !(n0 >= 0.0) {
        return Err(invalid("n0", format!("initial occupation must be >= 0, got {n0}")));
    }
    let (u, v) = sample_uv(gf, sample)?;
    Ok(CavityState::ThermalEvolved {
        mean: u.norm_sqr() * n0 + v,
    })
}

/// Exact state at `v` sample `sample` for the initial coherent state
/// `|alpha0>`, expanded over `n_cutoff` Fock levels.
pub fn evolve_coherent(gf: &GreenFunctions, alpha0: Complex64, sample: usize, n_cutoff: usize) -> Result<CavityState> {
    let (u, v) = sample_uv(gf, sample)?;
    let alpha = u * alpha0;
    let rho = FockMatrix::displaced_thermal(alpha, v, n_cutoff);
    let tail = 1.0 - rho.trace().re;
    if tail > TAIL_TOLERANCE {
        return Err(Error::CutoffTooSmall { cutoff: n_cutoff, tail });
    }
    Ok(CavityState::CoherentEvolved { alpha, v, rho })
}
