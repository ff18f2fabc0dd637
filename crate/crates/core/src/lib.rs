//! Non-Markovian dynamics of a single cavity mode coupled to a thermal
//! reservoir.
//!
//! All quantities are dimensionless: hbar = 1 and the bare cavity frequency
//! is 1, so times are `omega0 t` and temperatures `theta = k_B T / (hbar omega0)`.
//!
//! * [`reservoir`]: spectral density, occupation numbers and memory kernels.
//! * [`greens`]: the propagating Green function `u(t)` and the correlation
//!   function `v(t)`, plus the Born-Markov reference.
//! * [`dynamics`]: master-equation coefficients, closed-form states and a
//!   Fock-space master-equation integrator.
//! * [`oracle`]: exact evolution of a finite discretized reservoir.

pub mod dynamics;
pub mod error;
pub mod greens;
pub mod oracle;
pub mod quad;
pub mod reservoir;
pub mod units;

pub use num_complex::Complex64;

pub use dynamics::{
    coefficients, coefficients_finite_difference, evolve_coherent, evolve_thermal, evolve_vacuum, fock_cutoff,
    integrate_master_equation, mean_amplitude, photon_number, second_order_coefficients, CavityState, CoefficientTrace,
    FockMatrix, MasterOptions, MasterTrajectory, PropagatorCoefficients,
};
pub use error::{Error, Result};
pub use greens::{
    bm_frequency_shift, bound_mode_diagnostic, compute_v, solve_u, solve_u_checked, solve_u_with, BmSolution,
    BoundModeReport, GreenFunctions, Propagator, Scheme, TimeGrid, VTrace,
};
pub use oracle::{discretize_reservoir, exact_u_oracle, exact_v_oracle, BathGrid, DiscreteReservoir, ExactEvolution};
pub use reservoir::{
    bose_occupation, kernel_g, kernel_g_tilde, spectral_density, KernelSample, KernelTable, ReservoirConfig,
    SpectralDensity,
};
pub use units::CavityScale;

/// Bare cavity frequency in solver units.
pub const OMEGA0: f64 = 1.0;
