use num_rational::Ratio;
use proptest::prelude::*;
use vavg::extension::{delta_plus1_coloring, edge_coloring_2d1, maximal_matching, mis};
use vavg::graph::{gen_forest_union, gen_random_graph, max_degree, IdAssignment};
use vavg::harness::{run_experiment, to_json, Algorithm, ExperimentConfig, GraphSpec};
use vavg::partition::PartitionParams;
use vavg::randomized::{rand_a_loglogn, rand_delta_plus1};

fn algorithm() -> impl Strategy<Value = Algorithm> {
    proptest::sample::select(Algorithm::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn randomized_runs_are_deterministic(n in 2usize..300, frac in 0.0f64..0.1, seed: u64) {
        let m = ((n * (n - 1) / 2) as f64 * frac) as usize;
        let g = gen_random_graph(n, m, seed).unwrap();
        let ids = IdAssignment::identity(n);
        let (c1, r1) = rand_delta_plus1(&g, &ids, seed).unwrap();
        let (c2, r2) = rand_delta_plus1(&g, &ids, seed).unwrap();
        prop_assert_eq!(&r1.transcript, &r2.transcript);
        prop_assert_eq!(&c1, &c2);
        prop_assert!(c1.is_proper(&g));
        let top = max_degree(&g) as u64 + 1;
        prop_assert!(c1.colors.iter().all(|c| (1..=top).contains(&c[0])));
        prop_assert_eq!(r1.ledger.r.iter().sum::<u64>(), r1.metrics.decay.iter().sum::<u64>());
    }

    #[test]
    fn rand_a_loglogn_palette(n in 4usize..400, a in 1usize..4, seed: u64) {
        let g = gen_forest_union(n, a, seed).unwrap();
        let params = PartitionParams::with_default_epsilon(a as u64);
        let (cv, res, rep) = rand_a_loglogn(&g, &IdAssignment::identity(n), &params, seed).unwrap();
        prop_assert!(cv.is_proper(&g));
        prop_assert!(cv.palette_size() as u64 <= (params.big_a + 1) * (rep.t + 1));
        prop_assert_eq!(res.ledger.r.iter().sum::<u64>(), res.metrics.decay.iter().sum::<u64>());
    }

    #[test]
    fn extensions_keep_prefixes(n in 2usize..200, a in 1usize..4, eps in prop_oneof![Just(Ratio::new(2u64, 1)), Just(Ratio::new(1, 2))], seed: u64, perm: u64) {
        let g = gen_forest_union(n, a, seed).unwrap();
        let ids = IdAssignment::random_permutation(n, perm);
        let params = PartitionParams::new(a as u64, eps).unwrap();
        for f in [delta_plus1_coloring, mis, edge_coloring_2d1, maximal_matching] {
            let (_, _, rep) = f(&g, &ids, &params).unwrap();
            prop_assert!(rep.prefix_valid && rep.prefix_stable, "failed at {:?}", rep.first_failure);
        }
    }

    #[test]
    fn harness_accepts_every_algorithm(algo in algorithm(), n in 8usize..150, a in 1usize..4, seed: u64) {
        let mut config = ExperimentConfig::new(algo, GraphSpec::ForestUnion { n, a }, vec![seed]);
        config.id_permutations = 1;
        if matches!(algo, Algorithm::Ka | Algorithm::Ka2) {
            config.k = Some(2);
        }
        let report = run_experiment(&config).unwrap();
        prop_assert!(report.valid, "{:?}", report.runs.iter().flat_map(|r| r.failures.clone()).collect::<Vec<_>>());
        prop_assert_eq!(to_json(&report).unwrap(), to_json(&run_experiment(&config).unwrap()).unwrap());
    }
}
