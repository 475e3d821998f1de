//! The two-setting, `d`-outcome Bell scenario and the coefficient machinery
//! of the N-qudit functional.
//!
//! Every coefficient depends only on the number of parties measuring setting
//! 2 (the t-count) and on the sum of all outcomes modulo `d`, so nothing is
//! tabulated: coefficients are computed on demand in `O(N)`.

mod functional;
mod table;

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::{Error, Result};

pub(crate) use functional::outcome_sums_mod;
pub use functional::{
    bell_value, cglmp_value, correlation_q, correlation_values, permute_parties, relabel_for_cglmp,
};
pub use table::{JointProbabilityTable, TableFile, NEGATIVE_TOLERANCE, NORMALIZATION_TOLERANCE};

/// Largest party count accepted. Setting strings are stored as bit masks.
pub const MAX_PARTIES: usize = 30;

/// Number of parties `N`, outcomes per measurement `d` and the derived spin
/// `S = (d - 1) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BellScenario {
    n_parties: usize,
    dimension: usize,
}

impl BellScenario {
    pub fn new(n_parties: usize, dimension: usize) -> Result<Self> {
        if n_parties < 2 {
            return Err(Error::InvalidScenario(format!("need at least 2 parties, got {n_parties}")));
        }
        if n_parties > MAX_PARTIES {
            return Err(Error::InvalidScenario(format!(
                "at most {MAX_PARTIES} parties supported, got {n_parties}"
            )));
        }
        if dimension < 2 {
            return Err(Error::InvalidScenario(format!("dimension must be at least 2, got {dimension}")));
        }
        if dimension > i32::MAX as usize {
            return Err(Error::InvalidScenario(format!("dimension {dimension} too large")));
        }
        Ok(Self { n_parties, dimension })
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Exact spin `(d - 1) / 2`.
    pub fn spin(&self) -> Ratio<i64> {
        Ratio::new(self.dimension as i64 - 1, 2)
    }

    /// Number of setting strings, `2^N`.
    pub fn setting_count(&self) -> usize {
        1 << self.n_parties
    }

    /// Number of outcome tuples per setting, `d^N`, if it fits in memory
    /// indexing.
    pub fn outcome_count(&self) -> Option<usize> {
        (self.dimension as u128)
            .checked_pow(self.n_parties as u32)
            .filter(|&c| c <= isize::MAX as u128)
            .map(|c| c as usize)
    }

    /// `d^N` as a wide integer, for size checks that must not overflow.
    pub fn hilbert_dimension(&self) -> u128 {
        (self.dimension as u128).checked_pow(self.n_parties as u32).unwrap_or(u128::MAX)
    }

    /// The hybrid local-nonlocal bound `2^{N-1}`.
    pub fn hlnhv_bound(&self) -> u64 {
        1 << (self.n_parties - 1)
    }

    /// All `2^N` setting strings in index order.
    pub fn settings(&self) -> impl Iterator<Item = SettingString> + '_ {
        let n = self.n_parties;
        (0..self.setting_count()).map(move |i| SettingString::from_index(i, n))
    }

    /// Coefficient `f` of the functional as an exact multiple of `1/S`.
    ///
    /// Returned as the integer numerator over `d - 1`, i.e. `f * (d - 1)`.
    pub(crate) fn coefficient_numerator(&self, t_count: usize, outcome_sum: i64) -> i64 {
        let d = self.dimension as i64;
        let sigma = outcome_sum + shift_unchecked(t_count as i64);
        let m = if t_count % 2 == 0 { sigma.rem_euclid(d) } else { (-sigma).rem_euclid(d) };
        (d - 1) - 2 * m
    }

    /// Coefficient values indexed by `outcome_sum mod d` for one t-count.
    pub(crate) fn coefficient_row(&self, t_count: usize) -> Vec<f64> {
        let scale = (self.dimension - 1) as f64;
        (0..self.dimension as i64).map(|r| self.coefficient_numerator(t_count, r) as f64 / scale).collect()
    }
}

impl fmt::Display for BellScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={}, d={}", self.n_parties, self.dimension)
    }
}

/// One setting choice (1 or 2) per party.
///
/// Stored as a bit mask: bit `n` set means party `n + 1` measures setting 2.
/// Index order is therefore little-endian in the party index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SettingString {
    mask: u32,
    len: u8,
}

impl SettingString {
    pub fn from_index(index: usize, n_parties: usize) -> Self {
        debug_assert!(n_parties <= MAX_PARTIES);
        debug_assert!(index < 1 << n_parties);
        Self { mask: index as u32, len: n_parties as u8 }
    }

    /// Builds a setting string from choices in `{1, 2}`, party 1 first.
    pub fn from_choices(choices: &[u8]) -> Result<Self> {
        if choices.is_empty() || choices.len() > MAX_PARTIES {
            return Err(Error::InvalidArgument(format!(
                "setting string length {} out of range",
                choices.len()
            )));
        }
        let mut mask = 0u32;
        for (n, &c) in choices.iter().enumerate() {
            match c {
                1 => {}
                2 => mask |= 1 << n,
                other => return Err(Error::InvalidArgument(format!("setting must be 1 or 2, got {other}"))),
            }
        }
        Ok(Self { mask, len: choices.len() as u8 })
    }

    pub fn index(&self) -> usize {
        self.mask as usize
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Setting (1 or 2) of the zero-based party `party`.
    pub fn setting(&self, party: usize) -> u8 {
        if self.mask >> party & 1 == 1 {
            2
        } else {
            1
        }
    }

    pub fn choices(&self) -> Vec<u8> {
        (0..self.len()).map(|n| self.setting(n)).collect()
    }

    /// Number of parties measuring setting 2.
    pub fn t_count(&self) -> usize {
        self.mask.count_ones() as usize
    }
}

impl fmt::Display for SettingString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in 0..self.len() {
            write!(f, "{}", self.setting(n))?;
        }
        Ok(())
    }
}

impl FromStr for SettingString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let choices = s
            .chars()
            .map(|c| match c {
                '1' => Ok(1),
                '2' => Ok(2),
                other => Err(Error::InvalidArgument(format!(
                    "setting string {s:?}: unexpected character {other:?}"
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::from_choices(&choices)
    }
}

/// Measurement outcomes, one per party, each in `0..d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutcomeTuple(Vec<usize>);

impl OutcomeTuple {
    pub fn new(outcomes: Vec<usize>, scenario: &BellScenario) -> Result<Self> {
        if outcomes.len() != scenario.n_parties() {
            return Err(Error::LengthMismatch { expected: scenario.n_parties(), actual: outcomes.len() });
        }
        if let Some(&bad) = outcomes.iter().find(|&&x| x >= scenario.dimension()) {
            return Err(Error::InvalidArgument(format!("outcome {bad} outside 0..{}", scenario.dimension())));
        }
        Ok(Self(outcomes))
    }

    /// Decodes a mixed-radix index, party 1 varying fastest.
    pub fn from_index(mut index: usize, scenario: &BellScenario) -> Self {
        let d = scenario.dimension();
        let outcomes = (0..scenario.n_parties())
            .map(|_| {
                let x = index % d;
                index /= d;
                x
            })
            .collect();
        Self(outcomes)
    }

    pub fn index(&self, scenario: &BellScenario) -> usize {
        let d = scenario.dimension();
        self.0.iter().rev().fold(0, |acc, &x| acc * d + x)
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.0
    }

    pub fn sum(&self) -> i64 {
        self.0.iter().map(|&x| x as i64).sum()
    }
}

/// `x mod d` in `[0, d - 1]`, for any integer `x`.
pub fn mod_d(x: i64, d: i64) -> Result<i64> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("modulus must be at least 2, got {d}")));
    }
    Ok(x.rem_euclid(d))
}

/// Shift `s_t = 3 (1 - floor(t / 2))` applied to the outcome sum.
pub fn shift(t_count: i64) -> Result<i64> {
    if t_count < 0 {
        return Err(Error::InvalidArgument(format!("t-count must be non-negative, got {t_count}")));
    }
    Ok(shift_unchecked(t_count))
}

fn shift_unchecked(t_count: i64) -> i64 {
    3 * (1 - t_count / 2)
}

/// `g1(x) = 1 - M(x, d) / S`, exact.
pub fn g1_exact(arg: i64, scenario: &BellScenario) -> Ratio<i64> {
    let m = arg.rem_euclid(scenario.dimension() as i64);
    Ratio::from_integer(1) - Ratio::from_integer(m) / scenario.spin()
}

/// `g2(x) = 1 - M(-x, d) / S`, exact.
pub fn g2_exact(arg: i64, scenario: &BellScenario) -> Ratio<i64> {
    g1_exact(-arg, scenario)
}

pub fn g1(arg: i64, scenario: &BellScenario) -> f64 {
    ratio_to_f64(g1_exact(arg, scenario))
}

pub fn g2(arg: i64, scenario: &BellScenario) -> f64 {
    ratio_to_f64(g2_exact(arg, scenario))
}

/// Exact coefficient `f^I(x_1, .., x_N, s_t)`: `g1` for even t-count, `g2`
/// for odd, both applied to the outcome sum shifted by `s_t`.
pub fn coefficient_exact(
    setting: &SettingString,
    outcome: &OutcomeTuple,
    scenario: &BellScenario,
) -> Result<Ratio<i64>> {
    check_setting(setting, scenario)?;
    if outcome.outcomes().len() != scenario.n_parties() {
        return Err(Error::LengthMismatch {
            expected: scenario.n_parties(),
            actual: outcome.outcomes().len(),
        });
    }
    let t = setting.t_count();
    let sigma = outcome.sum() + shift_unchecked(t as i64);
    Ok(if t % 2 == 0 { g1_exact(sigma, scenario) } else { g2_exact(sigma, scenario) })
}

pub fn coefficient(setting: &SettingString, outcome: &OutcomeTuple, scenario: &BellScenario) -> Result<f64> {
    coefficient_exact(setting, outcome, scenario).map(ratio_to_f64)
}

pub(crate) fn check_setting(setting: &SettingString, scenario: &BellScenario) -> Result<()> {
    if setting.len() != scenario.n_parties() {
        return Err(Error::LengthMismatch { expected: scenario.n_parties(), actual: setting.len() });
    }
    Ok(())
}

pub(crate) fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
