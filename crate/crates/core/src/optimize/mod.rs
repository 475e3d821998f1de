//! Maximal violations, violation ratio and critical visibility, plus a
//! derivative-free search over measurement phases.

mod search;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::quantum::{PhaseConfiguration, PhaseFile};
use crate::scenario::BellScenario;
use crate::{Error, Result};

pub use search::{
    golden_section_max, optimize_phases, optimize_with_restarts, RestartOptions, RestartOutcome, SearchMode,
    SearchOptions, SearchOutcome, DISCREPANCY_TOLERANCE,
};

/// Critical visibility of the N-qubit Svetlichny inequality, independent of
/// the dimension.
pub const SVETLICHNY_VISIBILITY: f64 = FRAC_1_SQRT_2;

/// `V_cr` must undercut the Svetlichny value by more than this to count as
/// more noise resistant.
const RESISTANCE_MARGIN: f64 = 1e-12;

/// Symmetric phases `phi_j = j m pi / (2d)` with `m_1 = 15/N` for setting 1
/// and `m_2 = m_1 - 6` for setting 2, identical for every party.
pub fn prescribed_angles(scenario: &BellScenario) -> PhaseConfiguration {
    let n = scenario.n_parties() as f64;
    let d = scenario.dimension();
    let m1 = 15.0 / n;
    let m2 = m1 - 6.0;
    let ramp = |m: f64| -> Vec<f64> { (0..d).map(|j| j as f64 * m * PI / (2.0 * d as f64)).collect() };
    PhaseConfiguration::symmetric(*scenario, ramp(m1), ramp(m2)).expect("ramp has d finite entries")
}

/// `q_c = 1 / (2 d^3 sin^2(pi (c + 1/4) / d))`.
fn q(c: i64, d: usize) -> f64 {
    let d = d as f64;
    let s = (PI * (c as f64 + 0.25) / d).sin();
    1.0 / (2.0 * d * d * d * s * s)
}

/// Maximal two-party value
/// `4d sum_{k=0}^{floor(d/2)-1} (1 - 2k/(d-1)) (q_k - q_{-(k+1)})`.
pub fn cglmp_max_closed_form(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("dimension must be at least 2, got {d}")));
    }
    let sum: f64 = (0..(d / 2) as i64)
        .map(|k| (1.0 - 2.0 * k as f64 / (d as f64 - 1.0)) * (q(k, d) - q(-(k + 1), d)))
        .sum();
    Ok(4.0 * d as f64 * sum)
}

/// `2^{N-2}` times the two-party maximum.
pub fn max_violation(scenario: &BellScenario) -> f64 {
    let two_party = cglmp_max_closed_form(scenario.dimension()).expect("scenario has d >= 2");
    (1u64 << (scenario.n_parties() - 2)) as f64 * two_party
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnglesMode {
    Prescribed,
    OptimizedSymmetric,
    OptimizedFree,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub n: usize,
    pub d: usize,
    pub max_value: f64,
    pub angles: PhaseFile,
    pub angles_mode: AnglesMode,
    /// `max_value / 2^{N-1}`.
    pub ratio: f64,
    pub critical_visibility: f64,
    pub svetlichny_visibility: f64,
    /// `critical_visibility < 1/sqrt(2)`.
    pub more_noise_resistant_than_svetlichny: bool,
}

impl ViolationReport {
    pub fn new(
        scenario: &BellScenario,
        max_value: f64,
        angles: &PhaseConfiguration,
        mode: AnglesMode,
    ) -> Self {
        let ratio = max_value / scenario.hlnhv_bound() as f64;
        let critical_visibility = 1.0 / ratio;
        Self {
            n: scenario.n_parties(),
            d: scenario.dimension(),
            max_value,
            angles: angles.to_file(),
            angles_mode: mode,
            ratio,
            critical_visibility,
            svetlichny_visibility: SVETLICHNY_VISIBILITY,
            more_noise_resistant_than_svetlichny: critical_visibility
                < SVETLICHNY_VISIBILITY - RESISTANCE_MARGIN,
        }
    }
}

/// Ratio and critical visibility from the closed-form maximum at the
/// prescribed angles.
pub fn critical_visibility(scenario: &BellScenario) -> ViolationReport {
    ViolationReport::new(
        scenario,
        max_violation(scenario),
        &prescribed_angles(scenario),
        AnglesMode::Prescribed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_party_maxima() {
        assert!((cglmp_max_closed_form(2).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let d3 = (12.0 + 8.0 * 3f64.sqrt()) / 9.0;
        assert!((cglmp_max_closed_form(3).unwrap() - d3).abs() < 1e-12);
        assert!(cglmp_max_closed_form(1).is_err());
    }

    #[test]
    fn closed_form_increases_with_dimension() {
        let values: Vec<f64> = (2..=12).map(|d| cglmp_max_closed_form(d).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]), "{values:?}");
    }

    #[test]
    fn scaling_with_parties() {
        let s = BellScenario::new(3, 2).unwrap();
        assert!((max_violation(&s) - 4.0 * 2f64.sqrt()).abs() < 1e-12);
        let s = BellScenario::new(4, 3).unwrap();
        assert!((max_violation(&s) - 4.0 * (12.0 + 8.0 * 3f64.sqrt()) / 9.0).abs() < 1e-12);
        for d in 2..6 {
            let s = BellScenario::new(2, d).unwrap();
            assert_eq!(max_violation(&s), cglmp_max_closed_form(d).unwrap());
        }
    }

    #[test]
    fn prescribed_angles_shape() {
        let s = BellScenario::new(2, 2).unwrap();
        let c = prescribed_angles(&s);
        assert_eq!(c.phase(0, 1), &[0.0, 7.5 * PI / 4.0]);
        assert_eq!(c.phase(1, 2), &[0.0, 1.5 * PI / 4.0]);
        let s = BellScenario::new(3, 4).unwrap();
        let c = prescribed_angles(&s);
        // m1 = 5, m2 = -1
        assert!((c.phase(2, 1)[1] - 5.0 * PI / 8.0).abs() < 1e-15);
        assert!((c.phase(2, 2)[3] + 3.0 * PI / 8.0).abs() < 1e-15);
        for n in 0..3 {
            assert_eq!(c.phase(n, 1)[0], 0.0);
            assert_eq!(c.phase(n, 2)[0], 0.0);
        }
    }

    #[test]
    fn critical_visibility_values() {
        let r = critical_visibility(&BellScenario::new(2, 2).unwrap());
        assert!((r.critical_visibility - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(!r.more_noise_resistant_than_svetlichny);
        let r = critical_visibility(&BellScenario::new(3, 3).unwrap());
        assert!((r.critical_visibility - 0.696).abs() < 5e-4);
        assert!(r.more_noise_resistant_than_svetlichny);
        assert!((r.ratio * r.critical_visibility - 1.0).abs() < 1e-15);
    }
}
