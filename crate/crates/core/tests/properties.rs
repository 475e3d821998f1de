mod common;

use num_rational::Ratio;
use proptest::prelude::*;
use qudit_bell::bounds::Bipartition;
use qudit_bell::optimize::{max_violation, prescribed_angles};
use qudit_bell::quantum::{
    ghz_bell_value, ghz_state, joint_probabilities, product_state, PhaseConfiguration,
};
use qudit_bell::scenario::{
    bell_value, cglmp_value, coefficient_exact, g1_exact, g2_exact, permute_parties, relabel_for_cglmp,
};
use qudit_bell::{BellScenario, OutcomeTuple, SettingString};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_scenario() -> impl Strategy<Value = BellScenario> {
    (2usize..=4, 2usize..=4)
        .prop_filter("keep tables small", |(n, d)| d.pow(*n as u32) <= 81)
        .prop_map(|(n, d)| BellScenario::new(n, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_identity(d in 2usize..40, x in -500i64..500) {
        let s = BellScenario::new(2, d).unwrap();
        prop_assert_eq!(g1_exact(x, &s), -g2_exact(x + 1, &s));
    }

    #[test]
    fn coefficient_depends_on_sum_mod_d(
        n in 2usize..6, d in 2usize..7, setting in 0usize..64, seed in any::<u64>(), party in 0usize..6,
    ) {
        let s = BellScenario::new(n, d).unwrap();
        let setting = SettingString::from_index(setting % (1 << n), n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outcomes: Vec<usize> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0..d)).collect();
        let o = OutcomeTuple::new(outcomes.clone(), &s).unwrap();
        let c = coefficient_exact(&setting, &o, &s).unwrap();
        // values lie on the grid {-1, -1 + 1/S, ..., 1}
        let scaled = c * Ratio::from_integer(d as i64 - 1);
        prop_assert!(scaled.is_integer());
        prop_assert!(c <= Ratio::from_integer(1) && c >= Ratio::from_integer(-1));
        // moving one unit between two parties keeps the sum and the value
        let p = party % n;
        let q = (p + 1) % n;
        let mut moved = outcomes;
        if moved[p] > 0 && moved[q] + 1 < d {
            moved[p] -= 1;
            moved[q] += 1;
            let o2 = OutcomeTuple::new(moved, &s).unwrap();
            prop_assert_eq!(coefficient_exact(&setting, &o2, &s).unwrap(), c);
        }
    }

    #[test]
    fn permutation_symmetry(s in small_scenario(), seed in any::<u64>(), rot in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = common::random_table(s, &mut rng);
        let n = s.n_parties();
        let mut perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        perm.swap(0, n - 1);
        let p = permute_parties(&t, &perm).unwrap();
        prop_assert!((bell_value(&t) - bell_value(&p)).abs() < 1e-12);
    }

    #[test]
    fn algebraic_bound_and_reference(s in small_scenario(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = common::random_table(s, &mut rng);
        let v = bell_value(&t);
        prop_assert!(v.abs() <= (1u64 << s.n_parties()) as f64 + 1e-12);
        prop_assert!((v - common::naive_bell_value(&t)).abs() < 1e-12);
    }

    #[test]
    fn relabel_equivalence(d in 2usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = common::random_table(BellScenario::new(2, d).unwrap(), &mut rng);
        let lhs = cglmp_value(&relabel_for_cglmp(&t).unwrap()).unwrap();
        prop_assert!((lhs - bell_value(&t)).abs() < 1e-12);
    }

    #[test]
    fn ghz_value_never_exceeds_closed_form(n in 2usize..6, d in 2usize..6, seed in any::<u64>()) {
        let s = BellScenario::new(n, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat: Vec<f64> = (0..2 * n * d).map(|_| rand::Rng::gen_range(&mut rng, -4.0..4.0)).collect();
        let config = PhaseConfiguration::from_flat(s, &flat).unwrap();
        prop_assert!(ghz_bell_value(&config) <= max_violation(&s) + 1e-9);
    }
}

/// A GHZ state on a block of N-1 parties times a single party stays within
/// the hybrid bound at the angles that maximize the full GHZ value.
#[test]
fn block_entangled_states_respect_bound() {
    for (n, d) in [(3, 2), (3, 3), (4, 2), (4, 3)] {
        let s = BellScenario::new(n, d).unwrap();
        let angles = prescribed_angles(&s);
        let block = BellScenario::new(n - 1, d).unwrap();
        let rho_a = ghz_state(block).unwrap().into_matrix();
        let mut rho_b = qudit_bell::quantum::CMatrix::zeros(d, d);
        rho_b[(0, 0)] = 1.0.into();
        // block A is the first m parties
        for m in [1, n - 1] {
            let p = Bipartition::leading(n, m).unwrap();
            let (ra, rb) = if m == n - 1 { (&rho_a, &rho_b) } else { (&rho_b, &rho_a) };
            let rho = product_state(s, &p, ra, rb).unwrap();
            let v = bell_value(&joint_probabilities(&rho, &angles).unwrap());
            assert!(v <= s.hlnhv_bound() as f64 + 1e-9, "N={n} d={d} m={m}: {v}");
        }
    }
}
