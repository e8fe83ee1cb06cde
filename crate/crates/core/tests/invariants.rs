use std::collections::BTreeMap;

use proptest::prelude::*;

use mctsi_core::emi::{empirical_mi, PairSamples};
use mctsi_core::mct::io::{load_model_str, model_to_json};
use mctsi_core::partition::bell_number;
use mctsi_core::shared_info::{edge_mutual_informations, si_brute_force, si_mct};
use mctsi_core::{enumerate_partitions, MctModel, Tree};

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Random MCT: vertex `v > 1` hangs off `parents[v - 2] % (v - 1) + 1`, root 1.
fn model_strategy() -> impl Strategy<Value = MctModel> {
    (3usize..=6)
        .prop_flat_map(|m| {
            (
                Just(m),
                prop::collection::vec(any::<usize>(), m - 1),
                prop::collection::vec(2usize..=3, m),
                prop::collection::vec(0.05f64..1.0, m * 9),
            )
        })
        .prop_map(|(m, parents, cards, pool)| {
            let edges: Vec<(usize, usize)> = (2..=m).map(|v| (parents[v - 2] % (v - 1) + 1, v)).collect();
            let tree = Tree::new(m, edges.clone()).unwrap();
            let mut it = pool.into_iter().cycle();
            let mut dist = |c: usize| normalize((0..c).map(|_| it.next().unwrap()).collect());
            let root_pmf = dist(cards[0]);
            let mut kernels = BTreeMap::new();
            for (p, v) in edges {
                kernels.insert(v, (0..cards[p - 1]).map(|_| dist(cards[v - 1])).collect());
            }
            MctModel::new(tree, 1, cards, root_pmf, kernels).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exact_matches_brute_force(model in model_strategy()) {
        let exact = si_mct(&model).unwrap().value_bits;
        let brute = si_brute_force(&model.joint_pmf().unwrap()).unwrap().value_bits;
        prop_assert!((exact - brute).abs() < 1e-9);
        let min_edge = edge_mutual_informations(&model).values().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(exact, min_edge);
    }

    #[test]
    fn model_json_is_fixed_point(model in model_strategy()) {
        let a = model_to_json(&model);
        let back = load_model_str(&a).unwrap();
        prop_assert_eq!(model_to_json(&back), a);
    }

    #[test]
    fn sampling_is_deterministic(model in model_strategy(), seed in any::<u64>()) {
        let a = model.sample(50, seed);
        let b = model.sample(50, seed);
        for r in 0..50 {
            prop_assert_eq!(a.row(r), b.row(r));
            for v in 1..=model.m() {
                prop_assert!((a.get(r, v) as usize) < model.cards()[v - 1]);
            }
        }
    }

    #[test]
    fn emi_within_alphabet_limit(
        xs in prop::collection::vec(0u32..3, 1..200),
        seed in prop::collection::vec(0u32..4, 200),
    ) {
        let ys: Vec<u32> = seed[..xs.len()].to_vec();
        let v = empirical_mi(&PairSamples::new(xs, ys, 3, 4).unwrap());
        prop_assert!(v >= 0.0);
        prop_assert!(v <= 3f64.log2() + 1e-12);
    }
}

#[test]
fn partition_counts_are_bell_numbers() {
    // every partition except the single block
    for m in 2..=9 {
        let split = enumerate_partitions(m, 2).unwrap().count() as u128;
        assert_eq!(split, bell_number(m) - 1);
    }
}
