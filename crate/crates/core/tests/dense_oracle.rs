mod common;

use common::{dense_rhs, max_relative_gap, random_fixture, random_state};
use metapop::engine::network_rhs;
use metapop::state::HUMAN_FIELDS;
use proptest::prelude::*;

#[test]
fn sparse_field_matches_dense_transcription() {
    for trial in 0..200u64 {
        let n = 1 + (trial % 10) as usize;
        let f = random_fixture(trial, n);
        let st = random_state(&f, trial + 10_000);
        let sparse = network_rhs(&st, &f.network, &f.matrices, &f.params, 0.0).unwrap();
        let dense = dense_rhs(&f, &st);
        let gap = max_relative_gap(&sparse, &dense);
        assert!(gap < 1e-12, "trial {trial}, n = {n}: gap {gap:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residents_are_conserved_pointwise(seed in any::<u64>(), n in 1usize..10) {
        let f = random_fixture(seed, n);
        let st = random_state(&f, seed ^ 0x5eed);
        let dy = network_rhs(&st, &f.network, &f.matrices, &f.params, 0.0).unwrap();
        let layout = f.matrices.layout();
        for i in 0..n {
            let sum: f64 = layout
                .pairs_of(i)
                .flat_map(|p| (0..HUMAN_FIELDS).map(move |k| layout.human_index(p, k)))
                .map(|k| dy[k])
                .sum();
            prop_assert!(sum.abs() <= 1e-11 * st.resident_total(i).max(1.0));
        }
    }

    #[test]
    fn no_infection_without_infected(seed in any::<u64>(), n in 1usize..10) {
        let f = random_fixture(seed, n);
        let mut st = random_state(&f, seed);
        let layout = f.matrices.layout().clone();
        for i in 0..n {
            st.set_mosquito(i, metapop::state::I_M, 0.0);
        }
        for p in 0..layout.pair_count() {
            st.set_human(p, metapop::state::I_H, 0.0);
        }
        let dy = network_rhs(&st, &f.network, &f.matrices, &f.params, 0.0).unwrap();
        for i in 0..n {
            prop_assert_eq!(dy[layout.mosquito_index(i, metapop::state::I_M)], 0.0);
        }
        for p in 0..layout.pair_count() {
            prop_assert_eq!(dy[layout.human_index(p, metapop::state::I_H)], 0.0);
        }
    }
}
