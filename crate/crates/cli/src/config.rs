//! Run configuration: a TOML file, optionally overridden by flags.

use std::fmt;
use std::path::Path;

use cavity_core::greens::MAX_STEP_TIMES_CUTOFF;
use cavity_core::units::DEFAULT_PHOTON_ENERGY_MICRO_EV;
use cavity_core::{CavityScale, Complex64};
use serde::{Deserialize, Deserializer, Serialize};

/// Weak-coupling panel values used when no coupling list is given.
pub const WEAK_ETAS: [f64; 4] = [0.02, 0.1, 0.2, 0.3];
/// Strong-coupling panel values.
pub const STRONG_ETAS: [f64; 4] = [0.4, 0.6, 0.8, 1.0];
pub const SPECTRAL_CLASSES: [f64; 3] = [0.5, 1.0, 3.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Prefix of every output file.
    #[serde(default = "default_name")]
    pub name: String,
    pub reservoir: ReservoirSpec,
    pub temperature: Temperature,
    #[serde(default)]
    pub units: Units,
    pub grid: GridSpec,
    pub initial: InitialState,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub compare: Compare,
}

fn default_name() -> String {
    "run".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSpec {
    /// Spectral exponents, a single value or a list.
    #[serde(deserialize_with = "one_or_many")]
    pub s: Vec<f64>,
    /// Coupling strengths, a single value or a list.
    #[serde(deserialize_with = "one_or_many")]
    pub eta: Vec<f64>,
    /// Cutoff frequency in units of the cavity frequency.
    #[serde(default = "one")]
    pub omega_c: f64,
}

fn one() -> f64 {
    1.0
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Temperature {
    /// k_B T / (hbar omega0).
    Theta(f64),
    Kelvin(f64),
}

/// Energy scale for kelvin conversions. At most one field may be set; the
/// default is a photon energy of 13.83 micro-eV.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_energy_micro_ev: Option<f64>,
    /// Angular cavity frequency in 1e9 rad/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_frequency_ghz: Option<f64>,
}

impl Units {
    pub fn scale(&self) -> CavityScale {
        match (self.photon_energy_micro_ev, self.angular_frequency_ghz) {
            (Some(e), _) => CavityScale::from_photon_energy_micro_ev(e),
            (None, Some(w)) => CavityScale::from_angular_ghz(w),
            (None, None) => CavityScale::from_photon_energy_micro_ev(DEFAULT_PHOTON_ENERGY_MICRO_EV),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// End of the window in units of 1/omega0.
    pub t_end: f64,
    pub steps: usize,
    /// Number of output rows (excluding t = 0). Defaults to 500.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
}

impl GridSpec {
    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn stride(&self) -> usize {
        self.steps.div_ceil(self.rows.unwrap_or(500).max(1)).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialState {
    Vacuum,
    Coherent { alpha_re: f64, alpha_im: f64 },
    Thermal { n0: f64 },
}

impl InitialState {
    pub fn alpha(&self) -> Complex64 {
        match *self {
            Self::Coherent { alpha_re, alpha_im } => Complex64::new(alpha_re, alpha_im),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Initial mean photon number.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Vacuum => 0.0,
            Self::Coherent { .. } => self.alpha().norm_sqr(),
            Self::Thermal { n0 } => n0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub green_functions: bool,
    pub coefficients: bool,
    pub observables: bool,
    pub populations: bool,
    /// Fock levels written to the populations file; the rest is summed into
    /// a `tail` column.
    pub population_levels: usize,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            green_functions: true,
            coefficients: true,
            observables: true,
            populations: false,
            population_levels: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Compare {
    pub bm: bool,
    pub second_order: bool,
    pub oracle: bool,
    pub oracle_modes: usize,
    /// Upper edge of the discretized bath in units of omega_c.
    pub oracle_bandwidth: f64,
}

impl Default for Compare {
    fn default() -> Self {
        Self {
            bm: true,
            second_order: false,
            oracle: false,
            oracle_modes: cavity_core::oracle::DEFAULT_MODES,
            oracle_bandwidth: cavity_core::oracle::DEFAULT_BANDWIDTH,
        }
    }
}

/// Field-level validation failures.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub problems: Vec<(String, String)>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for (field, msg) in &self.problems {
            writeln!(f, "  {field}: {msg}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// One point of the parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub s: f64,
    pub eta: f64,
}

impl Point {
    pub fn label(&self) -> String {
        format!("s{}_eta{}", self.s, self.eta)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: default_name(),
            reservoir: ReservoirSpec {
                s: vec![1.0],
                eta: WEAK_ETAS.to_vec(),
                omega_c: 1.0,
            },
            temperature: Temperature::Kelvin(2.0),
            units: Units::default(),
            grid: GridSpec {
                t_end: 50.0,
                steps: 5000,
                rows: None,
            },
            initial: InitialState::Thermal { n0: 50.0 },
            outputs: Outputs::default(),
            compare: Compare::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn theta(&self) -> f64 {
        match self.temperature {
            Temperature::Theta(t) => t,
            Temperature::Kelvin(k) => self.units.scale().theta_from_kelvin(k),
        }
    }

    pub fn points(&self) -> Vec<Point> {
        self.reservoir
            .s
            .iter()
            .flat_map(|&s| self.reservoir.eta.iter().map(move |&eta| Point { s, eta }))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        let mut bad = |field: &str, msg: String| problems.push((field.to_string(), msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            bad("name", format!("must be a plain file prefix, got {:?}", self.name));
        }
        let r = &self.reservoir;
        if r.s.is_empty() {
            bad("reservoir.s", "list must not be empty".into());
        }
        for &s in &r.s {
            if !(s > 0.0 && s.is_finite()) {
                bad("reservoir.s", format!("spectral exponents must be > 0, got {s}"));
            }
        }
        if r.eta.is_empty() {
            bad("reservoir.eta", "list must not be empty".into());
        }
        for &eta in &r.eta {
            if !(eta >= 0.0 && eta.is_finite()) {
                bad("reservoir.eta", format!("couplings must be >= 0, got {eta}"));
            }
        }
        if !(r.omega_c > 0.0 && r.omega_c.is_finite()) {
            bad("reservoir.omega_c", format!("must be > 0, got {}", r.omega_c));
        }
        match self.temperature {
            Temperature::Theta(t) | Temperature::Kelvin(t) if !(t >= 0.0 && t.is_finite()) => {
                bad("temperature", format!("must be >= 0, got {t}"));
            }
            _ => {}
        }
        if self.units.photon_energy_micro_ev.is_some() && self.units.angular_frequency_ghz.is_some() {
            bad(
                "units",
                "set photon_energy_micro_ev or angular_frequency_ghz, not both".into(),
            );
        }
        for (field, value) in [
            ("units.photon_energy_micro_ev", self.units.photon_energy_micro_ev),
            ("units.angular_frequency_ghz", self.units.angular_frequency_ghz),
        ] {
            if let Some(x) = value {
                if !(x > 0.0 && x.is_finite()) {
                    bad(field, format!("must be > 0, got {x}"));
                }
            }
        }
        let g = &self.grid;
        if !(g.t_end > 0.0 && g.t_end.is_finite()) {
            bad("grid.t_end", format!("must be > 0, got {}", g.t_end));
        }
        if g.steps < 2 {
            bad("grid.steps", format!("need at least 2 steps, got {}", g.steps));
        } else if r.omega_c > 0.0 && g.dt() * r.omega_c > MAX_STEP_TIMES_CUTOFF + 1e-12 {
            bad(
                "grid.steps",
                format!(
                    "step {:.4} does not resolve the cutoff; need dt * omega_c <= {MAX_STEP_TIMES_CUTOFF}, i.e. steps >= {}",
                    g.dt(),
                    (g.t_end * r.omega_c / MAX_STEP_TIMES_CUTOFF).ceil()
                ),
            );
        }
        if g.rows == Some(0) {
            bad("grid.rows", "must be >= 1".into());
        }
        match self.initial {
            InitialState::Thermal { n0 } if !(n0 >= 0.0 && n0.is_finite()) => {
                bad("initial.n0", format!("must be >= 0, got {n0}"));
            }
            InitialState::Coherent { alpha_re, alpha_im } if !(alpha_re.is_finite() && alpha_im.is_finite()) => {
                bad("initial.alpha", "must be finite".into());
            }
            _ => {}
        }
        let o = &self.outputs;
        if !(o.green_functions || o.coefficients || o.observables || o.populations) {
            bad("outputs", "request at least one output".into());
        }
        if o.populations && o.population_levels == 0 {
            bad("outputs.population_levels", "must be >= 1".into());
        }
        let c = &self.compare;
        if c.oracle && c.oracle_modes < 100 {
            bad(
                "compare.oracle_modes",
                format!("need at least 100 modes, got {}", c.oracle_modes),
            );
        }
        if c.oracle && c.oracle_bandwidth < 20.0 {
            bad(
                "compare.oracle_bandwidth",
                format!("need at least 20 omega_c, got {}", c.oracle_bandwidth),
            );
        }
        if c.second_order && !o.coefficients {
            bad(
                "compare.second_order",
                "compares coefficients; enable outputs.coefficients".into(),
            );
        }
        if c.oracle && !o.green_functions {
            bad(
                "compare.oracle",
                "compares u and v; enable outputs.green_functions".into(),
            );
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { problems })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "demo"

[reservoir]
s = 0.5
eta = [0.02, 0.4]

[temperature]
kelvin = 2.0

[grid]
t_end = 20.0
steps = 2000

[initial]
kind = "coherent"
alpha_re = 2.0
alpha_im = 1.0

[compare]
second_order = true
"#;

    #[test]
    fn parses_scalars_and_lists() {
        let cfg = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.reservoir.s, vec![0.5]);
        assert_eq!(cfg.reservoir.eta, vec![0.02, 0.4]);
        assert_eq!(cfg.reservoir.omega_c, 1.0);
        assert_eq!(cfg.initial.mean(), 5.0);
        assert!(cfg.compare.bm && cfg.compare.second_order && !cfg.compare.oracle);
        assert!((cfg.theta() - 12.458).abs() < 0.005);
        assert_eq!(cfg.points().len(), 2);
        assert_eq!(cfg.points()[1].label(), "s0.5_eta0.4");
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let d = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&d.to_toml()).unwrap(), d);
    }

    #[test]
    fn rejects_unknown_fields_and_two_initial_states() {
        assert!(RunConfig::from_toml(&SAMPLE.replace("name =", "nmae =")).is_err());
        let two = SAMPLE.replace("alpha_im = 1.0", "alpha_im = 1.0\nn0 = 3.0");
        assert!(RunConfig::from_toml(&two).is_err());
    }

    #[test]
    fn validation_names_fields() {
        let mut cfg = RunConfig::default();
        cfg.reservoir.eta.clear();
        cfg.reservoir.s = vec![-1.0];
        cfg.grid.steps = 100;
        cfg.initial = InitialState::Thermal { n0: -2.0 };
        let err = cfg.validate().unwrap_err();
        let fields: Vec<&str> = err.problems.iter().map(|p| p.0.as_str()).collect();
        assert_eq!(fields, ["reservoir.s", "reservoir.eta", "grid.steps", "initial.n0"]);
        assert!(err.to_string().contains("steps >= 1000"));
    }

    #[test]
    fn unit_conversion_round_trip() {
        for units in [
            Units::default(),
            Units {
                angular_frequency_ghz: Some(21.5),
                ..Default::default()
            },
        ] {
            let scale = units.scale();
            for &k in &[0.002, 0.3, 2.0, 17.0] {
                let back = scale.kelvin_from_theta(scale.theta_from_kelvin(k));
                assert!((back - k).abs() <= 1e-12 * k);
            }
        }
    }
}
