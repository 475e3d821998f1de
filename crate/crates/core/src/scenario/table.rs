use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_setting, BellScenario, OutcomeTuple, SettingString};
use crate::{Error, Result};

/// Per-setting probabilities must sum to 1 within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Negative entries down to `-NEGATIVE_TOLERANCE` are clipped to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-9;

/// Joint outcome probabilities `P(x_1, .., x_N | I)` for all `2^N` settings.
///
/// Rows are indexed by [`SettingString::index`] and columns by
/// [`OutcomeTuple::index`] (mixed radix, party 1 varying fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointProbabilityTable {
    scenario: BellScenario,
    rows: Vec<Vec<f64>>,
}

impl JointProbabilityTable {
    /// Validates and takes ownership of dense rows.
    pub fn new(scenario: BellScenario, mut rows: Vec<Vec<f64>>) -> Result<Self> {
        let outcomes = scenario
            .outcome_count()
            .ok_or_else(|| Error::InvalidTable(format!("{scenario}: outcome space too large")))?;
        if rows.len() != scenario.setting_count() {
            return Err(Error::InvalidTable(format!(
                "expected {} setting rows, got {}",
                scenario.setting_count(),
                rows.len()
            )));
        }
        for (i, row) in rows.iter_mut().enumerate() {
            let setting = SettingString::from_index(i, scenario.n_parties());
            if row.len() != outcomes {
                return Err(Error::InvalidTable(format!(
                    "setting {setting}: expected {outcomes} probabilities, got {}",
                    row.len()
                )));
            }
            for (j, p) in row.iter_mut().enumerate() {
                if !p.is_finite() {
                    return Err(Error::InvalidTable(format!(
                        "setting {setting}, outcome {j}: non-finite probability"
                    )));
                }
                if *p < -NEGATIVE_TOLERANCE {
                    return Err(Error::InvalidTable(format!(
                        "setting {setting}, outcome {j}: negative probability {p}"
                    )));
                }
                if *p < 0.0 {
                    *p = 0.0;
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::Normalization { setting: setting.to_string(), sum });
            }
        }
        Ok(Self { scenario, rows })
    }

    /// Builds a table from a probability function.
    pub fn from_fn(
        scenario: BellScenario,
        mut prob: impl FnMut(&SettingString, &OutcomeTuple) -> f64,
    ) -> Result<Self> {
        let outcomes = scenario
            .outcome_count()
            .ok_or_else(|| Error::InvalidTable(format!("{scenario}: outcome space too large")))?;
        let rows = scenario
            .settings()
            .map(|s| (0..outcomes).map(|j| prob(&s, &OutcomeTuple::from_index(j, &scenario))).collect())
            .collect();
        Self::new(scenario, rows)
    }

    /// `P = 1 / d^N` everywhere.
    pub fn uniform(scenario: BellScenario) -> Result<Self> {
        let outcomes = scenario
            .outcome_count()
            .ok_or_else(|| Error::InvalidTable(format!("{scenario}: outcome space too large")))?;
        let p = 1.0 / outcomes as f64;
        Self::new(scenario, vec![vec![p; outcomes]; scenario.setting_count()])
    }

    /// Point mass on one outcome tuple per setting.
    pub fn deterministic(
        scenario: BellScenario,
        mut outcome: impl FnMut(&SettingString) -> OutcomeTuple,
    ) -> Result<Self> {
        let outcomes = scenario
            .outcome_count()
            .ok_or_else(|| Error::InvalidTable(format!("{scenario}: outcome space too large")))?;
        let rows = scenario
            .settings()
            .map(|s| {
                let mut row = vec![0.0; outcomes];
                row[outcome(&s).index(&scenario)] = 1.0;
                row
            })
            .collect();
        Self::new(scenario, rows)
    }

    pub fn scenario(&self) -> &BellScenario {
        &self.scenario
    }

    /// Probabilities of one setting, indexed by outcome index.
    pub fn row(&self, setting: &SettingString) -> Result<&[f64]> {
        check_setting(setting, &self.scenario)?;
        Ok(&self.rows[setting.index()])
    }

    pub fn probability(&self, setting: &SettingString, outcome: &OutcomeTuple) -> Result<f64> {
        Ok(self.row(setting)?[outcome.index(&self.scenario)])
    }

    pub(crate) fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Serializable file form.
    pub fn to_file(&self) -> TableFile {
        let tables =
            self.scenario.settings().map(|s| (s.to_string(), self.rows[s.index()].clone())).collect();
        TableFile { n: self.scenario.n_parties(), d: self.scenario.dimension(), tables }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TableFile = serde_json::from_str(text)?;
        file.into_table()
    }
}

/// On-disk probability table:
/// `{"n": N, "d": d, "tables": {"121": [p_0, p_1, ...], ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    pub n: usize,
    pub d: usize,
    pub tables: BTreeMap<String, Vec<f64>>,
}

impl TableFile {
    pub fn into_table(mut self) -> Result<JointProbabilityTable> {
        let scenario = BellScenario::new(self.n, self.d)?;
        for key in self.tables.keys() {
            let setting: SettingString = key
                .parse()
                .map_err(|_| Error::InvalidTable(format!("tables: invalid setting key {key:?}")))?;
            if setting.len() != scenario.n_parties() {
                return Err(Error::InvalidTable(format!(
                    "tables: key {key:?} has length {}, expected {}",
                    setting.len(),
                    scenario.n_parties()
                )));
            }
        }
        let rows = scenario
            .settings()
            .map(|s| {
                let key = s.to_string();
                self.tables
                    .remove(&key)
                    .ok_or_else(|| Error::InvalidTable(format!("tables: missing setting {key:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        JointProbabilityTable::new(scenario, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_table_is_valid() {
        let s = BellScenario::new(3, 3).unwrap();
        let t = JointProbabilityTable::uniform(s).unwrap();
        let row = t.row(&"121".parse().unwrap()).unwrap();
        assert_eq!(row.len(), 27);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_negative_entries_are_clipped() {
        let s = BellScenario::new(2, 2).unwrap();
        let mut rows = vec![vec![0.25; 4]; 4];
        rows[1] = vec![0.5 + 5e-10, -5e-10, 0.25, 0.25];
        let t = JointProbabilityTable::new(s, rows).unwrap();
        assert_eq!(t.rows()[1][1], 0.0);
    }

    #[test]
    fn large_negative_entries_are_rejected() {
        let s = BellScenario::new(2, 2).unwrap();
        let mut rows = vec![vec![0.25; 4]; 4];
        rows[2] = vec![0.6, -0.1, 0.25, 0.25];
        assert!(matches!(JointProbabilityTable::new(s, rows), Err(Error::InvalidTable(_))));
    }

    #[test]
    fn normalization_failure() {
        let s = BellScenario::new(2, 2).unwrap();
        let mut rows = vec![vec![0.25; 4]; 4];
        rows[3] = vec![0.125; 4];
        match JointProbabilityTable::new(s, rows) {
            Err(Error::Normalization { setting, sum }) => {
                assert_eq!(setting, "22");
                assert!((sum - 0.5).abs() < 1e-15);
            }
            other => panic!("expected normalization error, got {other:?}"),
        }
    }

    #[test]
    fn file_requires_every_setting() {
        let text = r#"{"n": 2, "d": 2, "tables": {
            "11": [1, 0, 0, 0], "12": [1, 0, 0, 0], "21": [1, 0, 0, 0]}}"#;
        let err = JointProbabilityTable::from_json(text).unwrap_err();
        assert!(err.to_string().contains("missing setting \"22\""), "{err}");
    }

    #[test]
    fn file_rejects_bad_keys() {
        let text = r#"{"n": 2, "d": 2, "tables": {"11": [1,0,0,0], "12": [1,0,0,0],
            "21": [1,0,0,0], "22": [1,0,0,0], "13": [1,0,0,0]}}"#;
        assert!(JointProbabilityTable::from_json(text).is_err());
    }

    #[test]
    fn file_round_trip() {
        let s = BellScenario::new(2, 3).unwrap();
        let t = JointProbabilityTable::from_fn(s, |st, o| {
            let w = 1.0 + (o.sum() as f64) + st.t_count() as f64;
            let norm: f64 = (0..9)
                .map(|j| 1.0 + OutcomeTuple::from_index(j, &s).sum() as f64 + st.t_count() as f64)
                .sum();
            w / norm
        })
        .unwrap();
        let back = JointProbabilityTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
