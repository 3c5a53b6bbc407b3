use proptest::prelude::*;

use stable_tree::chain::{sample_trajectory, AlphaParam};
use stable_tree::distributions::{sample_dirichlet, DirichletParams, M1Sampler};
use stable_tree::linebreaking::{grow, Algorithm, GrowthConfig};
use stable_tree::rng::RngStream;
use stable_tree::WeightedRTree;

fn alpha() -> impl Strategy<Value = f64> {
    prop_oneof![1.01f64..2.0, Just(2.0)]
}

fn line_breaking() -> impl Strategy<Value = Algorithm> {
    prop_oneof![Just(Algorithm::I), Just(Algorithm::II), Just(Algorithm::NormalizedI), Just(Algorithm::NormalizedII)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grown_trees_are_valid(a in alpha(), p in 1usize..200, alg in line_breaking(), seed in any::<u64>()) {
        let mut cfg = GrowthConfig::new(a, p, alg, seed).unwrap();
        cfg.check_ledgers = cfg.weight_tracking;
        let out = grow(&cfg).unwrap();
        let t = &out.tree;
        t.check_invariants().unwrap();
        prop_assert_eq!(t.leaf_count(), p);
        prop_assert!(t.edge_count() <= 2 * p);
        if let (Some(m), false) = (out.m, matches!(alg, Algorithm::NormalizedI | Algorithm::NormalizedII)) {
            prop_assert!(t.total_length() <= m * (1.0 + 1e-12));
        }
        if let Some(stats) = out.ledger {
            prop_assert!(stats.max_weight_error <= 1e-10);
            prop_assert!(stats.max_degree_error <= 1e-10);
        }
    }

    #[test]
    fn same_seed_same_tree(a in alpha(), p in 1usize..60, seed in any::<u64>()) {
        let cfg = GrowthConfig::new(a, p, Algorithm::I, seed).unwrap();
        prop_assert_eq!(grow(&cfg).unwrap().tree.to_newick(), grow(&cfg).unwrap().tree.to_newick());
    }

    #[test]
    fn formats_round_trip(a in alpha(), p in 1usize..80, seed in any::<u64>()) {
        let t = grow(&GrowthConfig::new(a, p, Algorithm::II, seed).unwrap()).unwrap().tree;
        let d = t.distance_matrix();
        let from_newick = WeightedRTree::from_newick(&t.to_newick()).unwrap();
        let from_json = WeightedRTree::from_json(&t.to_json(Some(a), Some(seed)).unwrap()).unwrap();
        prop_assert!(from_newick.distance_matrix().max_abs_diff(&d) <= 1e-12);
        prop_assert!(from_json.distance_matrix().max_abs_diff(&d) <= 1e-12);
        prop_assert_eq!(from_json.shape(), t.shape());
        prop_assert!(d.four_point_violation() <= 1e-9);
    }

    #[test]
    fn restriction_is_consistent(a in alpha(), p in 2usize..60, k in 1usize..60, seed in any::<u64>()) {
        let k = k.min(p);
        let t = grow(&GrowthConfig::new(a, p, Algorithm::I, seed).unwrap()).unwrap().tree;
        let r = t.restrict_to_leaves(k).unwrap();
        r.check_invariants().unwrap();
        let (dt, dr) = (t.distance_matrix(), r.distance_matrix());
        for i in 0..=k {
            for j in 0..=k {
                prop_assert!((dt.get(i, j) - dr.get(i, j)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn chain_is_increasing(a in alpha(), p in 1usize..300, seed in any::<u64>()) {
        let m = sample_trajectory(AlphaParam::new(a).unwrap(), M1Sampler::Exact, p, &mut RngStream::new(seed, 0)).unwrap();
        prop_assert_eq!(m.len(), p);
        prop_assert!(m[0] > 0.0);
        prop_assert!(m.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn dirichlet_on_simplex(a in prop::collection::vec(0.05f64..20.0, 2..8), seed in any::<u64>()) {
        let x = sample_dirichlet(&DirichletParams::new(a.clone()).unwrap(), &mut RngStream::new(seed, 0)).unwrap();
        prop_assert_eq!(x.len(), a.len());
        prop_assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!((x.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}
