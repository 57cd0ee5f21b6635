//! Randomized invariants across modules.

use crate::bec_observables::{cycle_distribution, solve_fugacity};
use crate::cycle_recursion::{ideal_table, normalization_residual, recurse, WeightSequence};
use crate::lemma_g::{check_variance_zero, random_config, summarize, z_l_1};
use crate::merger_graphs::{
    assign_edge_vectors, constraint_rank, free_dimension, incidence_rank, is_merger, parse_edge_list,
    random_bridgeless, to_edge_list, verify_assignment,
};
use crate::numerics::{polylog, theta_sum};
use crate::SystemParams;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn theta_sum_continuous_across_switch(d in 1u32..5, eps in 1e-9f64..1e-3) {
        let lo = theta_sum(1.0 - eps, d).unwrap();
        let hi = theta_sum(1.0 + eps, d).unwrap();
        prop_assert!(lo >= hi);
        prop_assert!((lo - hi) / hi < 10.0 * eps * d as f64);
    }

    #[test]
    fn partition_table_positive_and_normalized(vals in prop::collection::vec(0.01f64..50.0, 1..60)) {
        let w = WeightSequence::from_values(&vals).unwrap();
        let t = recurse(&w);
        for n in 0..=vals.len() {
            prop_assert!(t.ln_q(n).is_finite());
        }
        prop_assert!(normalization_residual(&t) < 1e-10);
    }

    #[test]
    fn cycle_densities_sum_to_density(d in 1u32..4, side in 1.0f64..6.0, n in 1usize..200) {
        let p = SystemParams::new(d, side, 1.0, 1.0, n).unwrap();
        let t = ideal_table(&p).unwrap();
        let dist = cycle_distribution(&t).unwrap();
        prop_assert!(dist.rho_n.iter().all(|&r| r >= 0.0));
        prop_assert!((dist.total() - p.rho()).abs() <= 1e-10 * p.rho());
    }

    #[test]
    fn fugacity_monotone(a in 0.01f64..2.6, b in 0.01f64..2.6) {
        let (za, zb) = (solve_fugacity(a, 3).unwrap().z, solve_fugacity(b, 3).unwrap().z);
        prop_assert!((a < b) <= (za <= zb));
        prop_assert!((polylog(1.5, za).unwrap() - a).abs() < 1e-10);
    }

    #[test]
    fn kinematic_invariants(seed in any::<u64>(), dim in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = random_config(&mut rng, dim, 6, 5);
        let mut total = vec![0i64; dim];
        for l in 0..cfg.cycle_sizes.len() {
            for (t, z) in total.iter_mut().zip(z_l_1(&cfg, l)) {
                *t += z;
            }
            prop_assert!(check_variance_zero(&cfg, l).unwrap().consistent());
        }
        prop_assert!(total.iter().all(|&z| z == 0));
        let s = summarize(&cfg);
        prop_assert!(s.mean_forms_agree);
        prop_assert!(s.variance.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn random_bridgeless_graphs_are_mergers(seed in any::<u64>(), v in 2usize..10, e in 2usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_bridgeless(&mut rng, v, e.max(v));
        prop_assert!(is_merger(&g));
        let a = assign_edge_vectors(&g, 1).unwrap();
        prop_assert!(verify_assignment(&g, &a));
        prop_assert_eq!(incidence_rank(&g), constraint_rank(&g));
        prop_assert_eq!(free_dimension(&g).unwrap(), g.edge_count() - constraint_rank(&g));
        prop_assert_eq!(parse_edge_list(&to_edge_list(&g)).unwrap(), g);
    }
}
