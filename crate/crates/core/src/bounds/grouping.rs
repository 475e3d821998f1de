//! Rearrangement of the `2^N` correlation terms into `2^{N-2}` quadruples,
//! each of which is a relabelled two-party CGLMP expression bounded by 2.
//!
//! For a bipartition A|B, block-A setting strings are paired as `(a, a')`
//! with `t(a') = t(a) + 1` and likewise `(b, b')` for block B. The quadruple
//! `(a b, a b', a' b, a' b')` then has t-counts `(k, k+1, k+1, k+2)`.
//! Pairs are formed by switching the first party of the block from setting 1
//! to setting 2.

use num_rational::Ratio;

use super::{Bipartition, DeterministicStrategy};
use crate::scenario::{g1_exact, g2_exact, BellScenario, SettingString};
use crate::{Error, Result};

/// Four setting strings `(a b, a b', a' b, a' b')` sharing block indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quadruple {
    /// t-count `k` of `a b`.
    pub base_t: usize,
    pub settings: [SettingString; 4],
    /// Block-A setting indices `(a, a')`.
    pub block_a: [usize; 2],
    /// Block-B setting indices `(b, b')`.
    pub block_b: [usize; 2],
}

impl Quadruple {
    fn check_shape(&self) -> Result<()> {
        let t: Vec<usize> = self.settings.iter().map(|s| s.t_count()).collect();
        let k = self.base_t;
        if t != [k, k + 1, k + 1, k + 2] {
            return Err(Error::InvalidArgument(format!(
                "malformed quadruple: t-counts {t:?}, expected ({k}, {}, {}, {})",
                k + 1,
                k + 1,
                k + 2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    pub scenario: BellScenario,
    pub partition: Bipartition,
    pub quadruples: Vec<Quadruple>,
    /// Number of quadruples with base t-count `k`, for `k` in `0..=N-2`.
    pub multiplicities: Vec<u64>,
}

impl Grouping {
    /// Checks that the quadruples cover every setting string exactly once,
    /// have the `(k, k+1, k+1, k+2)` shape, and that the multiplicities
    /// follow the recursion and sum to `2^{N-2}`.
    pub fn verify(&self) -> Result<()> {
        let n = self.scenario.n_parties();
        let mut seen = vec![0u32; self.scenario.setting_count()];
        for q in &self.quadruples {
            q.check_shape()?;
            for s in &q.settings {
                seen[s.index()] += 1;
            }
        }
        if let Some(i) = seen.iter().position(|&c| c != 1) {
            return Err(Error::InvalidArgument(format!(
                "setting {} covered {} times",
                SettingString::from_index(i, n),
                seen[i]
            )));
        }
        let expected = t_multiplicities(n);
        let actual: Vec<i64> = self.multiplicities.iter().map(|&m| m as i64).collect();
        if actual != expected {
            return Err(Error::InvalidArgument(format!(
                "multiplicities {actual:?} differ from recursion {expected:?}"
            )));
        }
        if self.multiplicities.iter().sum::<u64>() != 1 << (n - 2) {
            return Err(Error::InvalidArgument("multiplicities do not sum to 2^(N-2)".into()));
        }
        Ok(())
    }
}

/// `T(k) = sum_{i=0}^{k} (-1)^{k-i} (k + 1 - i) C(N, i)` for `k` in `0..=N-2`.
pub fn t_multiplicities(n_parties: usize) -> Vec<i64> {
    let n = n_parties as i64;
    let binom = |i: i64| -> i64 { (0..i).fold(1i64, |acc, j| acc * (n - j) / (j + 1)) };
    (0..=n - 2)
        .map(|k| {
            (0..=k)
                .map(|i| {
                    let sign = if (k - i) % 2 == 0 { 1 } else { -1 };
                    sign * (k + 1 - i) * binom(i)
                })
                .sum()
        })
        .collect()
}

pub fn build_grouping(scenario: &BellScenario, partition: &Bipartition) -> Result<Grouping> {
    let n = scenario.n_parties();
    if partition.n_parties() != n {
        return Err(Error::InvalidPartition(format!(
            "partition over {} parties used with {scenario}",
            partition.n_parties()
        )));
    }
    let la = 1usize << partition.block_a().len();
    let lb = 1usize << partition.block_b().len();
    let mut quadruples = Vec::with_capacity(1 << (n - 2));
    let mut multiplicities = vec![0u64; n - 1];
    // bit 0 of a block index is the first party of that block
    for a in (0..la).filter(|a| a & 1 == 0) {
        for b in (0..lb).filter(|b| b & 1 == 0) {
            let (a2, b2) = (a | 1, b | 1);
            let settings = [(a, b), (a, b2), (a2, b), (a2, b2)]
                .map(|(x, y)| SettingString::from_index(partition.join_setting(x, y), n));
            let base_t = settings[0].t_count();
            multiplicities[base_t] += 1;
            quadruples.push(Quadruple { base_t, settings, block_a: [a, a2], block_b: [b, b2] });
        }
    }
    Ok(Grouping { scenario: *scenario, partition: partition.clone(), quadruples, multiplicities })
}

/// The four-term sub-sum `-Q` over a quadruple for block outcome sums
/// `[xi_a, xi_a', zeta_b, zeta_b']`.
pub fn group_value(group: &Quadruple, values: [usize; 4], scenario: &BellScenario) -> Result<Ratio<i64>> {
    group.check_shape()?;
    let [xa, xa2, zb, zb2] = values;
    let sums = [xa + zb, xa + zb2, xa2 + zb, xa2 + zb2];
    let numerator: i64 = group
        .settings
        .iter()
        .zip(sums)
        .map(|(s, sum)| -scenario.coefficient_numerator(s.t_count(), sum as i64))
        .sum();
    Ok(Ratio::new(numerator, scenario.dimension() as i64 - 1))
}

/// Both evaluations of one quadruple under a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupValue {
    /// Sum of the four `-f` terms.
    pub direct: Ratio<i64>,
    /// The two-party expression
    /// `-g1(a1+b1+3) - g2(a1+b2+3) - g2(a2+b1+3) - g1(a2+b2)` after
    /// substituting the block sums.
    pub cglmp_form: Ratio<i64>,
}

/// Evaluates a quadruple directly and through its CGLMP substitution.
///
/// With `k` the base t-count: for even `k`, `xi_a = a1 + 3k/2`,
/// `xi_a' = a2 + 3k/2`; for odd `k` with `m = (k + 1) / 2`,
/// `xi_a = a2 + 3(m - 1)` and `xi_a' = a1 + 3m`. In both cases
/// `zeta_b = b1`, `zeta_b' = b2`.
pub fn verify_group_cglmp(
    group: &Quadruple,
    strategy: &DeterministicStrategy,
    scenario: &BellScenario,
) -> Result<GroupValue> {
    group.check_shape()?;
    let la = strategy.xi().len();
    let lb = strategy.zeta().len();
    if group.block_a.iter().any(|&a| a >= la) || group.block_b.iter().any(|&b| b >= lb) {
        return Err(Error::InvalidArgument("quadruple does not match the strategy partition".into()));
    }
    let xa = strategy.xi()[group.block_a[0]];
    let xa2 = strategy.xi()[group.block_a[1]];
    let zb = strategy.zeta()[group.block_b[0]];
    let zb2 = strategy.zeta()[group.block_b[1]];
    let direct = group_value(group, [xa, xa2, zb, zb2], scenario)?;

    let k = group.base_t as i64;
    let (xa, xa2) = (xa as i64, xa2 as i64);
    let (alpha1, alpha2) = if k % 2 == 0 {
        (xa - 3 * (k / 2), xa2 - 3 * (k / 2))
    } else {
        let m = (k + 1) / 2;
        (xa2 - 3 * m, xa - 3 * (m - 1))
    };
    let (beta1, beta2) = (zb as i64, zb2 as i64);
    let cglmp_form = -g1_exact(alpha1 + beta1 + 3, scenario)
        - g2_exact(alpha1 + beta2 + 3, scenario)
        - g2_exact(alpha2 + beta1 + 3, scenario)
        - g1_exact(alpha2 + beta2, scenario);
    Ok(GroupValue { direct, cglmp_form })
}

/// Maximum of a quadruple over all deterministic strategies. The quadruple
/// only reads four block sums, so the `d^4` assignments of those sums cover
/// every strategy.
pub fn group_exhaustive_max(group: &Quadruple, scenario: &BellScenario) -> Result<Ratio<i64>> {
    let d = scenario.dimension();
    let mut best: Option<Ratio<i64>> = None;
    for idx in 0..d.pow(4) {
        let values = [idx / (d * d * d), idx / (d * d) % d, idx / d % d, idx % d];
        let v = group_value(group, values, scenario)?;
        if best.map_or(true, |b| v > b) {
            best = Some(v);
        }
    }
    Ok(best.expect("d >= 2"))
}
