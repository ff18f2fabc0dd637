//! Master-equation coefficients, observables and reduced density matrices.

pub mod coefficients;
pub mod master;
pub mod observables;
pub mod states;

pub use coefficients::{
    coefficients, coefficients_finite_difference, differentiate, second_order_coefficients, second_order_from_table,
    CoefficientTrace, SINGULAR_AMPLITUDE,
};
pub use master::{integrate_master_equation, MasterOptions, MasterTrajectory};
pub use observables::{mean_amplitude, photon_number, propagator_coefficients, PropagatorCoefficients};
pub use states::{
    displaced_thermal_populations, evolve_coherent, evolve_thermal, evolve_vacuum, fock_cutoff, fock_cutoff_with,
    geometric_populations, CavityState, FockMatrix,
};
