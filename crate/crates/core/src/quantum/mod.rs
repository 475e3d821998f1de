//! N-qudit states and multiport-beamsplitter measurements.
//!
//! Joint probabilities are available through two independent routes: the
//! dense path ([`joint_probabilities`]) conjugates a full `d^N x d^N` density
//! matrix by the local unitaries, while the GHZ closed form
//! ([`ghz_probability_closed_form`], [`ghz_bell_value`]) sums `d` phases per
//! outcome. Each route is the oracle for the other.
//!
//! Basis index convention: `|x_1 .. x_N>` has index `sum_n x_n d^{n-1}`, so
//! party 1 is the fastest-varying digit.

mod phases;
mod state;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::scenario::{self, JointProbabilityTable, OutcomeTuple, SettingString};
use crate::{Error, Result};

pub use phases::{PhaseConfiguration, PhaseFile};
pub use state::{
    ghz_state, maximally_mixed, mix_with_noise, product_state, random_density_matrix, DensityMatrix,
};

pub type CMatrix = DMatrix<Complex64>;

/// Largest `d^N` handled by the dense path.
pub const DENSE_LIMIT: usize = 4096;

/// `U_kl = w^{kl} e^{i phi_l} / sqrt(d)` with `w = exp(2 pi i / d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiportUnitary {
    matrix: CMatrix,
}

impl MultiportUnitary {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |U U^dagger - 1|` over entries.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = &self.matrix * self.matrix.adjoint();
        let id = CMatrix::identity(prod.nrows(), prod.ncols());
        (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Symmetric `d`-port beamsplitter preceded by phase shifters `phases`.
pub fn multiport_unitary(phases: &[f64], dimension: usize) -> Result<MultiportUnitary> {
    if dimension < 2 {
        return Err(Error::InvalidArgument(format!("dimension must be at least 2, got {dimension}")));
    }
    if phases.len() != dimension {
        return Err(Error::LengthMismatch { expected: dimension, actual: phases.len() });
    }
    if phases.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument("non-finite phase".into()));
    }
    let d = dimension;
    let norm = 1.0 / (d as f64).sqrt();
    let matrix = CMatrix::from_fn(d, d, |k, l| {
        let angle = 2.0 * PI * ((k * l) % d) as f64 / d as f64 + phases[l];
        Complex64::from_polar(norm, angle)
    });
    Ok(MultiportUnitary { matrix })
}

/// Joint probabilities `P(x | I) = <x| W_I rho W_I^dagger |x>` with
/// `W_I = U_{1,i_1} (x) .. (x) U_{N,i_N}`, for every setting string.
///
/// The multiport acts on the incoming state and the detectors sit at its
/// output ports, so the state is conjugated by `W_I` before the projective
/// readout in the computational basis.
pub fn joint_probabilities(
    rho: &DensityMatrix,
    config: &PhaseConfiguration,
) -> Result<JointProbabilityTable> {
    let scenario = *rho.scenario();
    if config.scenario() != &scenario {
        return Err(Error::InvalidArgument(format!(
            "state is {scenario} but phase configuration is {}",
            config.scenario()
        )));
    }
    let unitaries = config.unitaries()?;
    let rows = scenario
        .settings()
        .map(|s| {
            let mut work = rho.matrix().clone();
            for (party, pair) in unitaries.iter().enumerate() {
                let u = &pair[(s.setting(party) - 1) as usize];
                conjugate_local(&mut work, u.matrix(), party, scenario.dimension());
            }
            (0..work.nrows()).map(|i| work[(i, i)].re).collect()
        })
        .collect();
    JointProbabilityTable::new(scenario, rows)
}

/// `rho <- (1 (x) u (x) 1) rho (1 (x) u (x) 1)^dagger` with `u` on `party`.
fn conjugate_local(rho: &mut CMatrix, u: &CMatrix, party: usize, d: usize) {
    let dim = rho.nrows();
    let stride = d.pow(party as u32);
    let block = stride * d;
    let mut gathered = vec![Complex64::new(0.0, 0.0); d];
    let bases: Vec<usize> =
        (0..dim / block).flat_map(|hi| (0..stride).map(move |lo| hi * block + lo)).collect();

    for col in 0..dim {
        for &base in &bases {
            for (k, g) in gathered.iter_mut().enumerate() {
                *g = rho[(base + k * stride, col)];
            }
            for a in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, g) in gathered.iter().enumerate() {
                    acc += u[(a, k)] * g;
                }
                rho[(base + a * stride, col)] = acc;
            }
        }
    }
    for row in 0..dim {
        for &base in &bases {
            for (k, g) in gathered.iter_mut().enumerate() {
                *g = rho[(row, base + k * stride)];
            }
            for a in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, g) in gathered.iter().enumerate() {
                    acc += g * u[(a, k)].conj();
                }
                rho[(row, base + a * stride)] = acc;
            }
        }
    }
}

/// Phase convention inside the GHZ closed form. The two conventions are
/// complex conjugates inside a squared modulus and so give equal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    Plus,
    Minus,
}

/// `|sum_j exp(i s [Phi_j + 2 pi j r / d])|^2` with `Phi_j` the summed phases
/// of the chosen settings, for each residue `r = sum x_n mod d`.
fn ghz_coherent_sums(config: &PhaseConfiguration, setting: &SettingString, sign: SignConvention) -> Vec<f64> {
    let scenario = config.scenario();
    let d = scenario.dimension();
    let sigma = match sign {
        SignConvention::Plus => 1.0,
        SignConvention::Minus => -1.0,
    };
    let total_phase: Vec<f64> = (0..d)
        .map(|j| (0..scenario.n_parties()).map(|n| config.phase(n, setting.setting(n))[j]).sum())
        .collect();
    (0..d)
        .map(|r| {
            let amp: Complex64 = total_phase
                .iter()
                .enumerate()
                .map(|(j, phi)| {
                    let arg = phi + 2.0 * PI * ((j * r) % d) as f64 / d as f64;
                    Complex64::from_polar(1.0, sigma * arg)
                })
                .sum();
            amp.norm_sqr()
        })
        .collect()
}

/// GHZ joint probability without building any matrix:
/// `d^{-(N+1)} |sum_j exp(i s [Phi_j + (2 pi / d) j sum_n x_n])|^2`.
pub fn ghz_probability_closed_form(
    config: &PhaseConfiguration,
    setting: &SettingString,
    outcome: &OutcomeTuple,
    sign: SignConvention,
) -> Result<f64> {
    let scenario = config.scenario();
    scenario::check_setting(setting, scenario)?;
    if outcome.outcomes().len() != scenario.n_parties() {
        return Err(Error::LengthMismatch {
            expected: scenario.n_parties(),
            actual: outcome.outcomes().len(),
        });
    }
    let d = scenario.dimension();
    let r = (outcome.sum() as usize) % d;
    let sums = ghz_coherent_sums(config, setting, sign);
    Ok(sums[r] / (d as f64).powi(scenario.n_parties() as i32 + 1))
}

/// Full GHZ table through the closed form. Probabilities depend on the
/// outcomes only through their sum modulo `d`.
pub fn ghz_table(config: &PhaseConfiguration) -> Result<JointProbabilityTable> {
    let scenario = *config.scenario();
    let outcomes = scenario
        .outcome_count()
        .ok_or_else(|| Error::TooLarge { dimension: scenario.hilbert_dimension(), limit: DENSE_LIMIT })?;
    let d = scenario.dimension();
    let scale = (d as f64).powi(scenario.n_parties() as i32 + 1);
    let residues = scenario::outcome_sums_mod(&scenario, outcomes);
    let rows = scenario
        .settings()
        .map(|s| {
            let sums = ghz_coherent_sums(config, &s, SignConvention::Plus);
            residues.iter().map(|&r| sums[r] / scale).collect()
        })
        .collect();
    JointProbabilityTable::new(scenario, rows)
}

/// Closed-form table of `V rho_GHZ + (1 - V) 1/d^N`.
pub fn noisy_ghz_table(config: &PhaseConfiguration, visibility: f64) -> Result<JointProbabilityTable> {
    check_visibility(visibility)?;
    let pure = ghz_table(config)?;
    if visibility == 1.0 {
        return Ok(pure);
    }
    let scenario = *pure.scenario();
    let noise = (1.0 - visibility) / pure.rows()[0].len() as f64;
    let rows = pure.rows().iter().map(|r| r.iter().map(|p| visibility * p + noise).collect()).collect();
    JointProbabilityTable::new(scenario, rows)
}

/// Bell value of the GHZ state under `config`, in `O(2^N d^2 N)`.
///
/// For each setting, every residue class of the outcome sum holds `d^{N-1}`
/// tuples, so `Q_I = d^{-2} sum_r f(t, r) |sum_j ...|^2`.
pub fn ghz_bell_value(config: &PhaseConfiguration) -> f64 {
    let scenario = config.scenario();
    let d = scenario.dimension() as f64;
    let total: f64 = scenario
        .settings()
        .map(|s| {
            let coeff = scenario.coefficient_row(s.t_count());
            let sums = ghz_coherent_sums(config, &s, SignConvention::Plus);
            coeff.iter().zip(&sums).map(|(c, w)| c * w).sum::<f64>() / (d * d)
        })
        .sum();
    -total
}

/// Bell value of the noisy GHZ state `V rho_GHZ + (1 - V) 1/d^N`. White
/// noise contributes zero, so the value is affine in `V`.
pub fn noisy_ghz_bell_value(config: &PhaseConfiguration, visibility: f64) -> Result<f64> {
    check_visibility(visibility)?;
    Ok(visibility * ghz_bell_value(config))
}

pub(crate) fn check_visibility(visibility: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::InvalidArgument(format!("visibility {visibility} outside [0, 1]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::BellScenario;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn hadamard_for_d2_zero_phases() {
        let u = multiport_unitary(&[0.0, 0.0], 2).unwrap();
        let m = u.matrix();
        let expect = [[1.0, 1.0], [1.0, -1.0]];
        for k in 0..2 {
            for l in 0..2 {
                assert!((m[(k, l)] - Complex64::new(expect[k][l] * FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn fourier_for_d3_zero_phases() {
        let u = multiport_unitary(&[0.0; 3], 3).unwrap();
        let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        for k in 0..3 {
            for l in 0..3 {
                let expect = w.powu((k * l) as u32) / 3f64.sqrt();
                assert!((u.matrix()[(k, l)] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn multiport_is_unitary_and_unbiased() {
        for d in 2..8 {
            let phases: Vec<f64> = (0..d).map(|j| 0.37 * j as f64 - 1.1).collect();
            let u = multiport_unitary(&phases, d).unwrap();
            assert!(u.unitarity_defect() < 1e-12);
            for z in u.matrix().iter() {
                assert!((z.norm() - 1.0 / (d as f64).sqrt()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn multiport_rejects_wrong_length() {
        assert!(matches!(
            multiport_unitary(&[0.0; 3], 4),
            Err(Error::LengthMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn maximally_mixed_gives_uniform_probabilities() {
        let s = BellScenario::new(3, 2).unwrap();
        let mut config = PhaseConfiguration::zeros(s);
        config.set_phase(1, 2, vec![0.3, -0.8]).unwrap();
        let table = joint_probabilities(&maximally_mixed(s).unwrap(), &config).unwrap();
        for setting in s.settings() {
            for p in table.row(&setting).unwrap() {
                assert!((p - 0.125).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn ghz_zero_phases_support_on_zero_sum() {
        let s = BellScenario::new(3, 3).unwrap();
        let config = PhaseConfiguration::zeros(s);
        let table = joint_probabilities(&ghz_state(s).unwrap(), &config).unwrap();
        for setting in s.settings() {
            for (j, p) in table.row(&setting).unwrap().iter().enumerate() {
                let o = OutcomeTuple::from_index(j, &s);
                let closed =
                    ghz_probability_closed_form(&config, &setting, &o, SignConvention::Plus).unwrap();
                if o.sum() % 3 == 0 {
                    assert!((closed - 1.0 / 9.0).abs() < 1e-14);
                } else {
                    assert!(closed.abs() < 1e-14);
                }
                assert!((p - closed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_table_matches_fast_bell_value() {
        let s = BellScenario::new(3, 3).unwrap();
        let mut config = PhaseConfiguration::zeros(s);
        config.set_phase(0, 1, vec![0.0, 0.4, 1.3]).unwrap();
        config.set_phase(2, 2, vec![0.2, -0.4, 2.0]).unwrap();
        let table = ghz_table(&config).unwrap();
        assert!((scenario::bell_value(&table) - ghz_bell_value(&config)).abs() < 1e-12);
    }

    #[test]
    fn visibility_range_checked() {
        let s = BellScenario::new(2, 2).unwrap();
        let config = PhaseConfiguration::zeros(s);
        assert!(noisy_ghz_bell_value(&config, 1.5).is_err());
        assert!(noisy_ghz_bell_value(&config, -0.1).is_err());
    }

    #[test]
    fn mismatched_config_rejected() {
        let rho = ghz_state(BellScenario::new(2, 3).unwrap()).unwrap();
        let config = PhaseConfiguration::zeros(BellScenario::new(2, 2).unwrap());
        assert!(joint_probabilities(&rho, &config).is_err());
    }
}
