use serde::{Deserialize, Serialize};

use super::{multiport_unitary, MultiportUnitary};
use crate::scenario::BellScenario;
use crate::{Error, Result};

/// Phase-shifter vectors for every party and both settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfiguration {
    scenario: BellScenario,
    // phases[party][setting - 1][port]
    phases: Vec<[Vec<f64>; 2]>,
}

impl PhaseConfiguration {
    pub fn new(scenario: BellScenario, phases: Vec<[Vec<f64>; 2]>) -> Result<Self> {
        if phases.len() != scenario.n_parties() {
            return Err(Error::LengthMismatch { expected: scenario.n_parties(), actual: phases.len() });
        }
        for pair in &phases {
            for v in pair {
                check_vector(v, scenario.dimension())?;
            }
        }
        Ok(Self { scenario, phases })
    }

    pub fn zeros(scenario: BellScenario) -> Self {
        let zero = vec![0.0; scenario.dimension()];
        Self { scenario, phases: vec![[zero.clone(), zero]; scenario.n_parties()] }
    }

    /// The same two phase vectors for every party.
    pub fn symmetric(scenario: BellScenario, setting1: Vec<f64>, setting2: Vec<f64>) -> Result<Self> {
        check_vector(&setting1, scenario.dimension())?;
        check_vector(&setting2, scenario.dimension())?;
        Ok(Self { scenario, phases: vec![[setting1, setting2]; scenario.n_parties()] })
    }

    pub fn scenario(&self) -> &BellScenario {
        &self.scenario
    }

    /// Phase vector of zero-based `party` for `setting` in `{1, 2}`.
    ///
    /// # Panics
    ///
    /// If `party` or `setting` is out of range.
    pub fn phase(&self, party: usize, setting: u8) -> &[f64] {
        &self.phases[party][setting_slot(setting)]
    }

    pub fn set_phase(&mut self, party: usize, setting: u8, values: Vec<f64>) -> Result<()> {
        if party >= self.scenario.n_parties() {
            return Err(Error::InvalidArgument(format!("party {party} out of range")));
        }
        if !(1..=2).contains(&setting) {
            return Err(Error::InvalidArgument(format!("setting must be 1 or 2, got {setting}")));
        }
        check_vector(&values, self.scenario.dimension())?;
        self.phases[party][setting_slot(setting)] = values;
        Ok(())
    }

    /// Flat parameter vector, ordered party, setting, port.
    pub fn to_flat(&self) -> Vec<f64> {
        self.phases.iter().flat_map(|pair| pair.iter().flatten().copied()).collect()
    }

    pub fn from_flat(scenario: BellScenario, flat: &[f64]) -> Result<Self> {
        let d = scenario.dimension();
        let expected = 2 * d * scenario.n_parties();
        if flat.len() != expected {
            return Err(Error::LengthMismatch { expected, actual: flat.len() });
        }
        let phases = flat.chunks(2 * d).map(|c| [c[..d].to_vec(), c[d..].to_vec()]).collect();
        Self::new(scenario, phases)
    }

    /// Multiport unitaries for each party and setting.
    pub fn unitaries(&self) -> Result<Vec<[MultiportUnitary; 2]>> {
        let d = self.scenario.dimension();
        self.phases.iter().map(|[a, b]| Ok([multiport_unitary(a, d)?, multiport_unitary(b, d)?])).collect()
    }

    pub fn to_file(&self) -> PhaseFile {
        PhaseFile {
            n: self.scenario.n_parties(),
            d: self.scenario.dimension(),
            phases: self.phases.iter().map(|[a, b]| [a.clone(), b.clone()]).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PhaseFile = serde_json::from_str(text)?;
        file.into_config()
    }
}

/// On-disk phase configuration:
/// `{"n": N, "d": d, "phases": [[[setting-1 phases], [setting-2 phases]], ...]}`,
/// one entry per party, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseFile {
    pub n: usize,
    pub d: usize,
    pub phases: Vec<[Vec<f64>; 2]>,
}

impl PhaseFile {
    pub fn into_config(self) -> Result<PhaseConfiguration> {
        PhaseConfiguration::new(BellScenario::new(self.n, self.d)?, self.phases)
    }
}

fn setting_slot(setting: u8) -> usize {
    match setting {
        1 => 0,
        2 => 1,
        other => panic!("setting must be 1 or 2, got {other}"),
    }
}

fn check_vector(v: &[f64], d: usize) -> Result<()> {
    if v.len() != d {
        return Err(Error::LengthMismatch { expected: d, actual: v.len() });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("phase vector has non-finite entries".into()));
    }
    Ok(())
}
