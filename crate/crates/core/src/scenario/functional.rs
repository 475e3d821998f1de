use super::{check_setting, g1, g2, BellScenario, JointProbabilityTable, SettingString};
use crate::{Error, Result};

/// `sum(x_n) mod d` for every outcome index.
pub(crate) fn outcome_sums_mod(scenario: &BellScenario, count: usize) -> Vec<usize> {
    let d = scenario.dimension();
    let mut sums = vec![0usize; count];
    for j in 1..count {
        sums[j] = (sums[j / d] + j % d) % d;
    }
    sums
}

/// Generalized correlation `Q_I = sum_x f^I(x, s_t) P(x | I)`.
pub fn correlation_q(setting: &SettingString, table: &JointProbabilityTable) -> Result<f64> {
    check_setting(setting, table.scenario())?;
    let scenario = table.scenario();
    let row = table.row(setting)?;
    let sums = outcome_sums_mod(scenario, row.len());
    Ok(q_from_row(scenario, setting.t_count(), row, &sums))
}

fn q_from_row(scenario: &BellScenario, t_count: usize, row: &[f64], sums: &[usize]) -> f64 {
    let coeff = scenario.coefficient_row(t_count);
    row.iter().zip(sums).map(|(p, &r)| coeff[r] * p).sum()
}

/// `Q_I` for every setting, in setting-index order.
pub fn correlation_values(table: &JointProbabilityTable) -> Vec<(SettingString, f64)> {
    let scenario = table.scenario();
    let rows = table.rows();
    let sums = outcome_sums_mod(scenario, rows[0].len());
    scenario.settings().map(|s| (s, q_from_row(scenario, s.t_count(), &rows[s.index()], &sums))).collect()
}

/// The N-qudit functional `I^N = -sum_I Q_I`.
pub fn bell_value(table: &JointProbabilityTable) -> f64 {
    -correlation_values(table).iter().map(|(_, q)| q).sum::<f64>()
}

/// Two-party CGLMP functional in the form
/// `g2(r_11) + g1(r_12) + g1(r_21) - g1(r_22)` with `r_ij` the outcome sum.
pub fn cglmp_value(table: &JointProbabilityTable) -> Result<f64> {
    let scenario = table.scenario();
    if scenario.n_parties() != 2 {
        return Err(Error::InvalidArgument(format!(
            "CGLMP functional needs 2 parties, got {}",
            scenario.n_parties()
        )));
    }
    let d = scenario.dimension();
    let mut total = 0.0;
    for setting in scenario.settings() {
        let row = table.row(&setting)?;
        for (j, p) in row.iter().enumerate() {
            let r = (j % d + j / d) as i64;
            let c = match (setting.setting(0), setting.setting(1)) {
                (1, 1) => g2(r, scenario),
                (2, 2) => -g1(r, scenario),
                _ => g1(r, scenario),
            };
            total += c * p;
        }
    }
    Ok(total)
}

/// Relabels a two-party table so that [`cglmp_value`] of the result equals
/// [`bell_value`] of the input: each party's outcome for setting 1 is shifted
/// by 2 modulo `d`.
pub fn relabel_for_cglmp(table: &JointProbabilityTable) -> Result<JointProbabilityTable> {
    let scenario = *table.scenario();
    if scenario.n_parties() != 2 {
        return Err(Error::InvalidArgument(format!(
            "relabeling needs 2 parties, got {}",
            scenario.n_parties()
        )));
    }
    let d = scenario.dimension();
    let rows = scenario
        .settings()
        .map(|s| {
            let shift_a = if s.setting(0) == 1 { 2 } else { 0 };
            let shift_b = if s.setting(1) == 1 { 2 } else { 0 };
            let src = &table.rows()[s.index()];
            let mut dst = vec![0.0; d * d];
            for (j, &p) in src.iter().enumerate() {
                let a = (j % d + shift_a) % d;
                let b = (j / d + shift_b) % d;
                dst[a + d * b] = p;
            }
            dst
        })
        .collect();
    JointProbabilityTable::new(scenario, rows)
}

/// Moves old party `n` to position `perm[n]`, in both settings and outcomes.
pub fn permute_parties(table: &JointProbabilityTable, perm: &[usize]) -> Result<JointProbabilityTable> {
    let scenario = *table.scenario();
    let n = scenario.n_parties();
    if perm.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: perm.len() });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let d = scenario.dimension();
    let outcomes = table.rows()[0].len();
    let mut rows = vec![vec![0.0; outcomes]; scenario.setting_count()];
    for s in 0..scenario.setting_count() {
        let mut s_new = 0usize;
        for (old, &new) in perm.iter().enumerate() {
            s_new |= (s >> old & 1) << new;
        }
        for j in 0..outcomes {
            let mut rest = j;
            let mut j_new = 0usize;
            for &new in perm {
                j_new += (rest % d) * d.pow(new as u32);
                rest /= d;
            }
            rows[s_new][j_new] = table.rows()[s][j];
        }
    }
    JointProbabilityTable::new(scenario, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::OutcomeTuple;

    #[test]
    fn uniform_table_has_zero_correlations() {
        for (n, d) in [(2, 2), (2, 5), (3, 3), (4, 2)] {
            let s = BellScenario::new(n, d).unwrap();
            let t = JointProbabilityTable::uniform(s).unwrap();
            for (_, q) in correlation_values(&t) {
                assert!(q.abs() < 1e-12);
            }
            assert!(bell_value(&t).abs() < 1e-12);
        }
        let t = JointProbabilityTable::uniform(BellScenario::new(2, 4).unwrap()).unwrap();
        assert!(cglmp_value(&t).unwrap().abs() < 1e-12);
    }

    #[test]
    fn point_mass_on_minus_one_coefficient() {
        let s = BellScenario::new(3, 3).unwrap();
        let setting: SettingString = "111".parse().unwrap();
        // sum 2 + shift 3 = 5, M(5, 3) = 2, g1 = 1 - 2 = -1
        let target = OutcomeTuple::new(vec![2, 0, 0], &s).unwrap();
        let t = JointProbabilityTable::deterministic(s, |_| target.clone()).unwrap();
        assert_eq!(correlation_q(&setting, &t).unwrap(), -1.0);
    }

    #[test]
    fn cglmp_requires_two_parties() {
        let t = JointProbabilityTable::uniform(BellScenario::new(3, 2).unwrap()).unwrap();
        assert!(cglmp_value(&t).is_err());
        assert!(relabel_for_cglmp(&t).is_err());
    }

    #[test]
    fn correlation_rejects_foreign_setting() {
        let t = JointProbabilityTable::uniform(BellScenario::new(3, 2).unwrap()).unwrap();
        assert!(correlation_q(&"12".parse().unwrap(), &t).is_err());
    }

    #[test]
    fn permutation_must_be_valid() {
        let t = JointProbabilityTable::uniform(BellScenario::new(3, 2).unwrap()).unwrap();
        assert!(permute_parties(&t, &[0, 0, 1]).is_err());
        assert!(permute_parties(&t, &[0, 1]).is_err());
        assert_eq!(permute_parties(&t, &[2, 0, 1]).unwrap(), t);
    }
}
