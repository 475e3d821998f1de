//! Exhaustive certification of hidden-variable bounds.
//!
//! In a hybrid local-nonlocal model the parties split into two blocks that
//! may be arbitrarily correlated inside but only classically correlated with
//! each other. A deterministic strategy assigns every setting combination of
//! a block one outcome per party; since each coefficient of the functional
//! depends on the outcomes only through their total sum modulo `d`, a block
//! strategy is fully described by its outcome sum per setting combination
//! (`xi` for block A, `zeta` for block B). This shrinks the search space from
//! `d^{m 2^m}` to `d^{2^m}` per block without losing any value.
//!
//! Values are exact rationals with denominator `d - 1`.

mod grouping;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::scenario::{BellScenario, JointProbabilityTable, OutcomeTuple, SettingString};
use crate::{Error, Result};

pub use grouping::{
    build_grouping, group_exhaustive_max, group_value, t_multiplicities, verify_group_cglmp, GroupValue,
    Grouping, Quadruple,
};

/// Default cap on the number of strategies enumerated by one query.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Split of the parties into two non-empty blocks.
///
/// Canonical form: both blocks sorted, block A contains party 0 (party 1 in
/// one-based notation).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bipartition {
    n_parties: usize,
    block_a: Vec<usize>,
    block_b: Vec<usize>,
}

impl Bipartition {
    /// Builds the bipartition `{block} | rest` from zero-based indices.
    pub fn new(n_parties: usize, block: &[usize]) -> Result<Self> {
        let mut member = vec![false; n_parties];
        for &p in block {
            if p >= n_parties {
                return Err(Error::InvalidPartition(format!("party {} out of range 1..={n_parties}", p + 1)));
            }
            if member[p] {
                return Err(Error::InvalidPartition(format!("party {} listed twice", p + 1)));
            }
            member[p] = true;
        }
        if n_parties > 0 && !member[0] {
            member.iter_mut().for_each(|m| *m = !*m);
        }
        let block_a: Vec<usize> = (0..n_parties).filter(|&p| member[p]).collect();
        let block_b: Vec<usize> = (0..n_parties).filter(|&p| !member[p]).collect();
        if block_a.is_empty() || block_b.is_empty() {
            return Err(Error::InvalidPartition("both blocks must be non-empty".into()));
        }
        Ok(Self { n_parties, block_a, block_b })
    }

    /// Parses `"1,2/3,4"` (one-based parties). Every party must appear in
    /// exactly one of the two blocks.
    pub fn parse(text: &str, n_parties: usize) -> Result<Self> {
        let parts: Vec<&str> = text.split('/').collect();
        if parts.len() != 2 {
            return Err(Error::InvalidPartition(format!("{text:?}: expected two blocks separated by '/'")));
        }
        let parse_block = |text: &str| -> Result<Vec<usize>> {
            text.split(',')
                .map(|tok| {
                    let tok = tok.trim();
                    match tok.parse::<usize>() {
                        Ok(p) if p >= 1 => Ok(p - 1),
                        _ => Err(Error::InvalidPartition(format!("{text:?}: invalid party {tok:?}"))),
                    }
                })
                .collect()
        };
        let a = parse_block(parts[0])?;
        let b = parse_block(parts[1])?;
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        if all != (0..n_parties).collect::<Vec<_>>() {
            return Err(Error::InvalidPartition(format!(
                "{text:?}: blocks must cover parties 1..={n_parties} exactly once"
            )));
        }
        Self::new(n_parties, &a)
    }

    /// Every bipartition of `n` parties, once each, in canonical form.
    pub fn all(n_parties: usize) -> Vec<Self> {
        if !(2..=crate::scenario::MAX_PARTIES).contains(&n_parties) {
            return Vec::new();
        }
        let full = (1u64 << n_parties) - 1;
        (1..full)
            .filter(|m| m & 1 == 1)
            .map(|m| {
                let block: Vec<usize> = (0..n_parties).filter(|&p| m >> p & 1 == 1).collect();
                Self::new(n_parties, &block).expect("mask yields a valid bipartition")
            })
            .collect()
    }

    /// The first `m` parties against the rest.
    pub fn leading(n_parties: usize, m: usize) -> Result<Self> {
        Self::new(n_parties, &(0..m).collect::<Vec<_>>())
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn block_a(&self) -> &[usize] {
        &self.block_a
    }

    pub fn block_b(&self) -> &[usize] {
        &self.block_b
    }

    /// One-based blocks, as reported to users.
    pub fn one_based(&self) -> [Vec<usize>; 2] {
        [self.block_a.iter().map(|p| p + 1).collect(), self.block_b.iter().map(|p| p + 1).collect()]
    }

    /// Block-local setting indices of a global setting string.
    pub(crate) fn split_setting(&self, setting: usize) -> (usize, usize) {
        (compress(setting, &self.block_a), compress(setting, &self.block_b))
    }

    /// Global setting index from block-local indices.
    pub(crate) fn join_setting(&self, a: usize, b: usize) -> usize {
        expand(a, &self.block_a) | expand(b, &self.block_b)
    }
}

fn compress(setting: usize, block: &[usize]) -> usize {
    block.iter().enumerate().map(|(k, &p)| (setting >> p & 1) << k).sum()
}

fn expand(local: usize, block: &[usize]) -> usize {
    block.iter().enumerate().map(|(k, &p)| (local >> k & 1) << p).sum()
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |b: &[usize]| b.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{}/{}", join(&self.block_a), join(&self.block_b))
    }
}

/// Setting string of a block, e.g. `"12"`, from its local index.
pub fn block_setting_label(local: usize, block_len: usize) -> String {
    SettingString::from_index(local, block_len).to_string()
}

/// One point of the hybrid model: the outcome sum of each block for every
/// setting combination of that block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategy {
    partition: Bipartition,
    xi: Vec<usize>,
    zeta: Vec<usize>,
}

impl DeterministicStrategy {
    /// `xi[a]` is the block-A outcome sum for the block-A setting index `a`
    /// (bit `k` set means the `k`-th party of block A uses setting 2);
    /// likewise `zeta` for block B.
    pub fn new(partition: Bipartition, dimension: usize, xi: Vec<usize>, zeta: Vec<usize>) -> Result<Self> {
        let la = 1 << partition.block_a.len();
        let lb = 1 << partition.block_b.len();
        if xi.len() != la {
            return Err(Error::LengthMismatch { expected: la, actual: xi.len() });
        }
        if zeta.len() != lb {
            return Err(Error::LengthMismatch { expected: lb, actual: zeta.len() });
        }
        if xi.iter().chain(&zeta).any(|&v| v >= dimension) {
            return Err(Error::InvalidArgument(format!("strategy values must lie in 0..{dimension}")));
        }
        Ok(Self { partition, xi, zeta })
    }

    pub fn partition(&self) -> &Bipartition {
        &self.partition
    }

    pub fn xi(&self) -> &[usize] {
        &self.xi
    }

    pub fn zeta(&self) -> &[usize] {
        &self.zeta
    }

    fn check(&self, scenario: &BellScenario) -> Result<()> {
        if self.partition.n_parties != scenario.n_parties() {
            return Err(Error::InvalidPartition(format!(
                "strategy over {} parties used with {scenario}",
                self.partition.n_parties
            )));
        }
        if self.xi.iter().chain(&self.zeta).any(|&v| v >= scenario.dimension()) {
            return Err(Error::InvalidArgument(format!(
                "strategy values must lie in 0..{}",
                scenario.dimension()
            )));
        }
        Ok(())
    }
}

/// `I^N` of a deterministic hybrid strategy, exactly, in `O(2^N)`.
pub fn strategy_bell_value(strategy: &DeterministicStrategy, scenario: &BellScenario) -> Result<Ratio<i64>> {
    strategy.check(scenario)?;
    let numerator: i64 = scenario
        .settings()
        .map(|s| {
            let (a, b) = strategy.partition.split_setting(s.index());
            let sum = (strategy.xi[a] + strategy.zeta[b]) as i64;
            -scenario.coefficient_numerator(s.t_count(), sum)
        })
        .sum();
    Ok(Ratio::new(numerator, scenario.dimension() as i64 - 1))
}

/// The point-mass table induced by a strategy: the first party of each block
/// carries the block's outcome sum and the other members output 0.
pub fn induced_table(
    strategy: &DeterministicStrategy,
    scenario: &BellScenario,
) -> Result<JointProbabilityTable> {
    strategy.check(scenario)?;
    let p = &strategy.partition;
    JointProbabilityTable::deterministic(*scenario, |s| {
        let (a, b) = p.split_setting(s.index());
        let mut outcomes = vec![0; scenario.n_parties()];
        outcomes[p.block_a[0]] = strategy.xi[a];
        outcomes[p.block_b[0]] = strategy.zeta[b];
        OutcomeTuple::new(outcomes, scenario).expect("values checked against dimension")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationOptions {
    pub budget: u64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET }
    }
}

/// Result of an exhaustive hybrid-model search.
#[derive(Debug, Clone, PartialEq)]
pub struct HlnhvBound {
    pub value: Ratio<i64>,
    /// Lexicographically least maximizer, comparing `xi` then `zeta`.
    pub witness: DeterministicStrategy,
    pub strategies_enumerated: u64,
    pub elapsed_ms: u128,
}

/// Number of hybrid strategies for a partition: `d^{2^|A|} d^{2^|B|}`.
pub fn hlnhv_strategy_count(scenario: &BellScenario, partition: &Bipartition) -> BigUint {
    let d = BigUint::from(scenario.dimension());
    let exponent = (1u64 << partition.block_a.len()) + (1u64 << partition.block_b.len());
    d.pow(exponent as u32)
}

/// Number of fully local strategies: `d^{2N}`.
pub fn lhv_strategy_count(scenario: &BellScenario) -> BigUint {
    BigUint::from(scenario.dimension()).pow(2 * scenario.n_parties() as u32)
}

fn within_budget(count: BigUint, budget: u64) -> Result<u64> {
    match count.to_u64() {
        Some(c) if c <= budget => Ok(c),
        _ => Err(Error::BudgetExceeded { required: count, budget }),
    }
}

/// Best value found in one slice of the search, with its position.
#[derive(Debug, Clone, Copy)]
struct Best {
    value: i64,
    outer: u64,
    inner: u64,
}

impl Best {
    fn better(self, other: Self) -> Self {
        let key = |b: &Self| (b.value, std::cmp::Reverse((b.outer, b.inner)));
        if key(&other) > key(&self) {
            other
        } else {
            self
        }
    }
}

/// Digits of `index` in base `d`, most significant first.
fn decode_digits(mut index: u64, d: u64, len: usize) -> Vec<usize> {
    let mut digits = vec![0; len];
    for slot in digits.iter_mut().rev() {
        *slot = (index % d) as usize;
        index /= d;
    }
    digits
}

/// Exhaustive maximum of `I^N` over deterministic hybrid strategies for one
/// bipartition.
pub fn hlnhv_bound(
    scenario: &BellScenario,
    partition: &Bipartition,
    options: EnumerationOptions,
) -> Result<HlnhvBound> {
    if partition.n_parties != scenario.n_parties() {
        return Err(Error::InvalidPartition(format!(
            "partition over {} parties used with {scenario}",
            partition.n_parties
        )));
    }
    let total = within_budget(hlnhv_strategy_count(scenario, partition), options.budget)?;
    let start = Instant::now();

    let d = scenario.dimension();
    let la = 1usize << partition.block_a.len();
    let lb = 1usize << partition.block_b.len();
    let outer_count = (d as u64).pow(la as u32);
    let inner_count = (d as u64).pow(lb as u32);

    // terms[b] lists (a, t) for every global setting with block-B index b.
    let mut terms: Vec<Vec<(usize, usize)>> = vec![Vec::new(); lb];
    for s in scenario.settings() {
        let (a, b) = partition.split_setting(s.index());
        terms[b].push((a, s.t_count()));
    }
    let coef: Vec<Vec<i64>> = (0..=scenario.n_parties())
        .map(|t| (0..d as i64).map(|r| scenario.coefficient_numerator(t, r)).collect())
        .collect();

    let best = (0..outer_count)
        .into_par_iter()
        .map(|outer| {
            let xi = decode_digits(outer, d as u64, la);
            // weight[b][z]: contribution of block-B setting b when zeta_b = z
            let weight: Vec<Vec<i64>> = terms
                .iter()
                .map(|row| {
                    (0..d).map(|z| row.iter().map(|&(a, t)| -coef[t][(xi[a] + z) % d]).sum()).collect()
                })
                .collect();
            let mut zeta = vec![0usize; lb];
            let mut value: i64 = weight.iter().map(|w| w[0]).sum();
            let mut best = Best { value, outer, inner: 0 };
            for inner in 1..inner_count {
                // odometer step, last digit fastest
                let mut pos = lb - 1;
                loop {
                    let old = zeta[pos];
                    if old + 1 < d {
                        zeta[pos] = old + 1;
                        value += weight[pos][old + 1] - weight[pos][old];
                        break;
                    }
                    zeta[pos] = 0;
                    value += weight[pos][0] - weight[pos][old];
                    pos -= 1;
                }
                if value > best.value {
                    best = Best { value, outer, inner };
                }
            }
            best
        })
        .reduce_with(Best::better)
        .expect("strategy space is non-empty");

    let witness = DeterministicStrategy {
        partition: partition.clone(),
        xi: decode_digits(best.outer, d as u64, la),
        zeta: decode_digits(best.inner, d as u64, lb),
    };
    Ok(HlnhvBound {
        value: Ratio::new(best.value, d as i64 - 1),
        witness,
        strategies_enumerated: total,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// A fully local deterministic strategy: each party's outcome for settings
/// 1 and 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalStrategy {
    pub outcomes: Vec<[usize; 2]>,
}

impl LocalStrategy {
    pub fn value(&self, scenario: &BellScenario) -> Result<Ratio<i64>> {
        if self.outcomes.len() != scenario.n_parties() {
            return Err(Error::LengthMismatch {
                expected: scenario.n_parties(),
                actual: self.outcomes.len(),
            });
        }
        if self.outcomes.iter().flatten().any(|&x| x >= scenario.dimension()) {
            return Err(Error::InvalidArgument("outcome out of range".into()));
        }
        let numerator: i64 = scenario
            .settings()
            .map(|s| {
                let sum: usize =
                    (0..scenario.n_parties()).map(|n| self.outcomes[n][(s.setting(n) - 1) as usize]).sum();
                -scenario.coefficient_numerator(s.t_count(), sum as i64)
            })
            .sum();
        Ok(Ratio::new(numerator, scenario.dimension() as i64 - 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LhvBound {
    pub value: Ratio<i64>,
    /// Lexicographically least maximizer over
    /// `(party 1 setting 1, party 1 setting 2, party 2 setting 1, ...)`.
    pub witness: LocalStrategy,
    pub strategies_enumerated: u64,
    pub elapsed_ms: u128,
}

/// Exhaustive maximum of `I^N` over fully local deterministic strategies.
pub fn lhv_bound(scenario: &BellScenario, options: EnumerationOptions) -> Result<LhvBound> {
    let total = within_budget(lhv_strategy_count(scenario), options.budget)?;
    let start = Instant::now();
    let n = scenario.n_parties();
    let d = scenario.dimension();
    let coef: Vec<Vec<i64>> =
        (0..=n).map(|t| (0..d as i64).map(|r| scenario.coefficient_numerator(t, r)).collect()).collect();

    // Outer: parties 1..N-1; inner: the d^2 choices of the last party.
    let outer_count = (d as u64).pow(2 * (n as u32 - 1));
    let inner_count = (d * d) as u64;
    let rest = n - 1;
    let best = (0..outer_count)
        .into_par_iter()
        .map(|outer| {
            let digits = decode_digits(outer, d as u64, 2 * rest);
            // partial[s'] for settings s' of the first N-1 parties
            let partial: Vec<(usize, usize)> = (0..1usize << rest)
                .map(|s| {
                    let sum: usize = (0..rest).map(|p| digits[2 * p + (s >> p & 1)]).sum();
                    (sum, (s as u32).count_ones() as usize)
                })
                .collect();
            let mut best = Best { value: i64::MIN, outer, inner: 0 };
            for inner in 0..inner_count {
                let last = [(inner / d as u64) as usize, (inner % d as u64) as usize];
                let value: i64 = partial
                    .iter()
                    .map(|&(sum, t)| -coef[t][(sum + last[0]) % d] - coef[t + 1][(sum + last[1]) % d])
                    .sum();
                if value > best.value {
                    best = Best { value, outer, inner };
                }
            }
            best
        })
        .reduce_with(Best::better)
        .expect("strategy space is non-empty");

    let mut digits = decode_digits(best.outer, d as u64, 2 * rest);
    digits.extend(decode_digits(best.inner, d as u64, 2));
    let witness = LocalStrategy { outcomes: digits.chunks(2).map(|c| [c[0], c[1]]).collect() };
    Ok(LhvBound {
        value: Ratio::new(best.value, d as i64 - 1),
        witness,
        strategies_enumerated: total,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// Formats an exact rational as `"p"` or `"p/q"`.
pub fn ratio_string(r: &Ratio<i64>) -> String {
    if r.denom() == &1 || r.numer().is_zero() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl FromStr for Bipartition {
    type Err = Error;

    /// Parses `"1,2/3"`, inferring the party count from the largest index.
    fn from_str(s: &str) -> Result<Self> {
        let n = s
            .split(['/', ','])
            .filter_map(|t| t.trim().parse::<usize>().ok())
            .max()
            .ok_or_else(|| Error::InvalidPartition(format!("{s:?}: no parties")))?;
        Self::parse(s, n)
    }
}
