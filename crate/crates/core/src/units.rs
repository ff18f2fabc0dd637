//! Conversion between laboratory units and the dimensionless units used by
//! the solvers (hbar = 1, cavity frequency = 1).

/// Reduced Planck constant in eV s.
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;
/// Boltzmann constant in eV / K.
pub const BOLTZMANN_EV_PER_K: f64 = 8.617_333_262e-5;

/// Nominal cavity frequency of the default configuration, in GHz.
pub const DEFAULT_CAVITY_FREQUENCY_GHZ: f64 = 21.5;
/// Photon energy of the default cavity in micro-eV. A temperature of 2 K is
/// then `theta = 12.46`.
///
/// This is the energy scale used for all kelvin conversions. It corresponds
/// to an angular frequency of 2.10e10 s^-1, about 2% below the nominal
/// 21.5 GHz label.
pub const DEFAULT_PHOTON_ENERGY_MICRO_EV: f64 = 13.83;

/// Photon energy scale of the cavity mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityScale {
    photon_energy_ev: f64,
}

impl Default for CavityScale {
    fn default() -> Self {
        Self::from_photon_energy_micro_ev(DEFAULT_PHOTON_ENERGY_MICRO_EV)
    }
}

impl CavityScale {
    pub fn from_photon_energy_micro_ev(micro_ev: f64) -> Self {
        Self {
            photon_energy_ev: micro_ev * 1e-6,
        }
    }

    /// Scale from an angular frequency given in units of 1e9 s^-1.
    pub fn from_angular_ghz(omega0_ghz: f64) -> Self {
        Self {
            photon_energy_ev: HBAR_EV_S * omega0_ghz * 1e9,
        }
    }

    /// Angular frequency in units of 1e9 s^-1.
    pub fn omega0_ghz(&self) -> f64 {
        self.photon_energy_ev / HBAR_EV_S * 1e-9
    }

    pub fn photon_energy_micro_ev(&self) -> f64 {
        self.photon_energy_ev * 1e6
    }

    /// k_B T / (hbar omega0).
    pub fn theta_from_kelvin(&self, kelvin: f64) -> f64 {
        BOLTZMANN_EV_PER_K * kelvin / self.photon_energy_ev
    }

    pub fn kelvin_from_theta(&self, theta: f64) -> f64 {
        theta * self.photon_energy_ev / BOLTZMANN_EV_PER_K
    }

    /// Dimensionless time omega0 * t for a time given in nanoseconds.
    pub fn dimensionless_time(&self, nanoseconds: f64) -> f64 {
        self.omega0_ghz() * nanoseconds
    }
}
