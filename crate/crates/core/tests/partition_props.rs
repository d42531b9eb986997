use num_rational::Ratio;
use proptest::prelude::*;
use vavg::graph::{exact_arboricity, gen_forest_union, IdAssignment};
use vavg::partition::{
    decay_bound_holds, parallelized_forest_decomposition, procedure_partition, verify_forest_decomposition,
    verify_h_partition, PartitionParams,
};

fn epsilon() -> impl Strategy<Value = Ratio<u64>> {
    prop_oneof![Just(Ratio::new(2, 1)), Just(Ratio::new(1, 1)), Just(Ratio::new(1, 2)), Just(Ratio::new(1, 3))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decay_and_average_bounds(n in 2usize..600, a in 1usize..5, eps in epsilon(), seed: u64, perm: u64) {
        let g = gen_forest_union(n, a, seed).unwrap();
        let params = PartitionParams::new(a as u64, eps).unwrap();
        let ids = IdAssignment::random_permutation(n, perm);
        let (hp, res) = procedure_partition(&g, &ids, &params).unwrap();
        prop_assert!(verify_h_partition(&g, &hp, &params).is_empty());
        prop_assert!(decay_bound_holds(&res.metrics.decay, n as u64, eps));
        // avg <= (2 + eps) / eps + 1
        let bound = (Ratio::from_integer(2) + eps) / eps + Ratio::from_integer(1);
        prop_assert!(res.metrics.avg <= bound, "avg {} > {}", res.metrics.avg, bound);
        let total: u64 = res.ledger.r.iter().sum();
        prop_assert_eq!(total, res.metrics.decay.iter().sum::<u64>());
    }

    #[test]
    fn h_partition_ignores_ids(n in 2usize..300, a in 1usize..4, seed: u64, p1: u64, p2: u64) {
        let g = gen_forest_union(n, a, seed).unwrap();
        let params = PartitionParams::with_default_epsilon(a as u64);
        let (h1, _) = procedure_partition(&g, &IdAssignment::random_permutation(n, p1), &params).unwrap();
        let (h2, _) = procedure_partition(&g, &IdAssignment::random_permutation(n, p2), &params).unwrap();
        prop_assert_eq!(h1.index, h2.index);
    }

    #[test]
    fn forest_decomposition_valid_under_permutation(n in 2usize..300, a in 1usize..4, seed: u64, perm: u64) {
        let g = gen_forest_union(n, a, seed).unwrap();
        let params = PartitionParams::with_default_epsilon(a as u64);
        let ids = IdAssignment::random_permutation(n, perm);
        let (fd, _, _) = parallelized_forest_decomposition(&g, &ids, &params).unwrap();
        prop_assert!(verify_forest_decomposition(&g, &fd, &params).is_valid());
    }

    #[test]
    fn small_decompositions_bound_arboricity(n in 2usize..=14, a in 1usize..4, seed: u64) {
        let g = gen_forest_union(n, a, seed).unwrap();
        let params = PartitionParams::with_default_epsilon(a as u64);
        let (fd, _, _) = parallelized_forest_decomposition(&g, &IdAssignment::identity(n), &params).unwrap();
        prop_assert!(fd.num_labels() as u64 <= params.big_a);
        prop_assert!(exact_arboricity(&g).unwrap() as u64 <= params.big_a);
    }
}
