//! Manual comparison of the Volterra solution with the discrete-bath oracle.

use std::path::Path;

use anyhow::Result;
use cavity_core::oracle::{discretize_reservoir_with, exact_uv_oracle, BathGrid};
use cavity_core::*;
use serde::Serialize;

use crate::output::Table;

#[derive(Debug, Clone, Copy)]
pub struct OracleCheck {
    pub s: f64,
    pub eta: f64,
    pub omega_c: f64,
    pub theta: f64,
    pub t_end: f64,
    pub steps: usize,
    pub modes: usize,
    /// Upper edge of the bath in units of omega_c.
    pub bandwidth: f64,
    pub grid: BathGrid,
    /// Number of comparison times.
    pub rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleReport {
    pub max_u_error: f64,
    pub max_v_error: f64,
    pub u_tolerance: f64,
    pub v_tolerance: f64,
    pub recurrence_time: f64,
}

impl OracleReport {
    pub fn passes(&self) -> bool {
        self.max_u_error < self.u_tolerance && self.max_v_error < self.v_tolerance
    }
}

pub fn oracle_check(p: &OracleCheck, csv: Option<&Path>) -> Result<OracleReport> {
    let spectral = SpectralDensity::new(p.eta, p.s, p.omega_c)?;
    let cfg = ReservoirConfig::new(spectral, p.theta)?;
    let grid = TimeGrid::new(p.t_end, p.steps)?;
    let stride = p.steps.div_ceil(p.rows.max(1)).max(1);
    let gf = GreenFunctions::compute(&cfg, grid, Some(stride))?;
    let dr = discretize_reservoir_with(&spectral, p.modes, p.bandwidth * p.omega_c, p.grid)?;
    dr.check_window(p.t_end)?;
    let times = gf.sample_times();
    let (u_ex, v_ex) = exact_uv_oracle(&dr, p.theta, OMEGA0, &times)?;
    let u = gf.sampled_u();
    let report = OracleReport {
        max_u_error: u.iter().zip(&u_ex).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
        max_v_error: gf.v().iter().zip(&v_ex).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        u_tolerance: 1e-3,
        v_tolerance: 1e-2 * (1.0 + bose_occupation(OMEGA0, p.theta)?),
        recurrence_time: dr.recurrence_time(),
    };
    if let Some(path) = csv {
        let mut t = Table::default();
        t.push("t", times);
        t.push("re_u", u.iter().map(|z| z.re).collect());
        t.push("im_u", u.iter().map(|z| z.im).collect());
        t.push("re_u_oracle", u_ex.iter().map(|z| z.re).collect());
        t.push("im_u_oracle", u_ex.iter().map(|z| z.im).collect());
        t.push("v", gf.v().to_vec());
        t.push("v_oracle", v_ex);
        t.write_csv(path)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weak_ohmic_bath_agrees() {
        let p = OracleCheck {
            s: 1.0,
            eta: 0.1,
            omega_c: 1.0,
            theta: 12.5,
            t_end: 10.0,
            steps: 1000,
            modes: 500,
            bandwidth: 20.0,
            grid: BathGrid::SquareRoot,
            rows: 20,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("o.csv");
        let r = oracle_check(&p, Some(&path)).unwrap();
        assert!(r.passes(), "{r:?}");
        assert_eq!(Table::read_csv(&path).unwrap().rows(), 21);
        let too_long = OracleCheck {
            t_end: 200.0,
            steps: 20_000,
            ..p
        };
        assert!(oracle_check(&too_long, None).is_err());
    }
}
