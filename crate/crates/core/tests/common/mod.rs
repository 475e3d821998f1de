//! Shared helpers: a naive reference evaluator written straight from the
//! definitions, and random generators.

#![allow(dead_code)]

use qudit_bell::scenario::BellScenario;
use qudit_bell::{JointProbabilityTable, OutcomeTuple, SettingString};
use rand::Rng;

/// `x mod d` in `[0, d)`.
pub fn m(x: i64, d: i64) -> i64 {
    x.rem_euclid(d)
}

/// `g1(x) = 1 - M(x, d) / S`, `S = (d - 1) / 2`, in floating point.
pub fn g1(x: i64, d: usize) -> f64 {
    1.0 - 2.0 * m(x, d as i64) as f64 / (d as f64 - 1.0)
}

pub fn g2(x: i64, d: usize) -> f64 {
    g1(-x, d)
}

/// `I^N = -sum_I sum_x f_I(x) P(x|I)`, one tuple at a time.
pub fn naive_bell_value(table: &JointProbabilityTable) -> f64 {
    let s = table.scenario();
    let (n, d) = (s.n_parties(), s.dimension());
    let mut total = 0.0;
    for index in 0..1usize << n {
        let setting = SettingString::from_index(index, n);
        let t = setting.choices().iter().filter(|&&c| c == 2).count() as i64;
        let shift = 3 * (1 - t / 2);
        let row = table.row(&setting).unwrap();
        for (j, p) in row.iter().enumerate() {
            let sum: i64 = OutcomeTuple::from_index(j, s).outcomes().iter().map(|&x| x as i64).sum();
            let x = sum + shift;
            let f = if t % 2 == 0 { g1(x, d) } else { g2(x, d) };
            total += f * p;
        }
    }
    -total
}

/// Random table with strictly positive rows.
pub fn random_table<R: Rng>(scenario: BellScenario, rng: &mut R) -> JointProbabilityTable {
    let outcomes = scenario.outcome_count().unwrap();
    let rows = (0..scenario.setting_count())
        .map(|_| {
            let raw: Vec<f64> = (0..outcomes).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        })
        .collect();
    JointProbabilityTable::new(scenario, rows).unwrap()
}
