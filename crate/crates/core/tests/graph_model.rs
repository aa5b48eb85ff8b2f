mod common;

use mixmnl::moments::{exact_m2, exact_m3};
use mixmnl::{ComparisonGraph, MixedMnlModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_graphs_are_well_formed(n in 5usize..60, dbar in 2.5f64..6.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Ok(g) = ComparisonGraph::erdos_renyi(n, dbar, &mut rng, 200) else {
            return Ok(());
        };
        prop_assert!(g.is_connected());
        prop_assert!(!g.is_bipartite());
        prop_assert!(g.edges().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(g.edges().iter().all(|&(i, j)| i < j && j < n));
        prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.num_pairs());
        let spec = g.transition_spectrum();
        prop_assert!((spec[0] - 1.0).abs() < 1e-10);
        prop_assert!(spec.iter().all(|&l| (-1.0 - 1e-10..=1.0 + 1e-10).contains(&l)));
        let gap = g.diagnostics().spectral_gap;
        prop_assert!(gap > 0.0 && gap <= 1.0);
    }

    #[test]
    fn pair_expectations_are_antisymmetric_and_bounded(
        w in prop::collection::vec(0.01f64..100.0, 2..12),
    ) {
        let n = w.len();
        let m = MixedMnlModel::new(vec![w], vec![1.0]).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let p = m.pair_expectation(0, i, j);
                    prop_assert!(p > -1.0 && p < 1.0);
                    prop_assert!((p + m.pair_expectation(0, j, i)).abs() < 1e-15);
                    let win = m.pairwise_win_prob(0, i, j).unwrap();
                    prop_assert!((win + m.pairwise_win_prob(0, j, i).unwrap() - 1.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn second_moment_is_psd_with_rank_at_most_r(seed in any::<u64>(), r in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ComparisonGraph::complete(7);
        let m = common::random_model(7, r, 1.0, 4.0, &mut rng);
        let m2 = exact_m2(&m, &g).unwrap();
        let eig = m2.symmetric_eigen().eigenvalues;
        let top = eig.amax();
        prop_assert!(eig.iter().all(|&l| l > -1e-10));
        prop_assert!(eig.iter().filter(|&&l| l > 1e-10 * top).count() <= r);
    }
}

#[test]
fn third_moment_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = ComparisonGraph::complete(5);
    let m = common::random_model(5, 3, 1.0, 3.0, &mut rng);
    let t = exact_m3(&m, &g, 60).unwrap();
    let p = m.p_matrix(&g).unwrap();
    let n = g.num_pairs();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let want: f64 = (0..3)
                    .map(|a| m.q()[a] * p[(i, a)] * p[(j, a)] * p[(k, a)])
                    .sum();
                assert!((t.get(i, j, k) - want).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn rank_one_third_moment() {
    let g = ComparisonGraph::complete(4);
    let m = MixedMnlModel::new(vec![vec![1.0, 3.0, 2.0, 5.0]], vec![1.0]).unwrap();
    let t = exact_m3(&m, &g, 60).unwrap();
    let p = m.component_p_vector(0, &g).unwrap();
    let mut want = mixmnl::Tensor3::zeros(6);
    want.add_cube(1.0, p.as_slice());
    assert!(t.max_abs_diff(&want) < 1e-15);
}

#[test]
fn sampled_outcomes_follow_win_probabilities() {
    let g = ComparisonGraph::complete(4);
    let m = MixedMnlModel::new(
        vec![vec![1.0, 2.0, 3.0, 4.0], vec![4.0, 1.0, 1.0, 2.0]],
        vec![0.3, 0.7],
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let samples = 200_000;
    let batch = m.sample_batch(&g, 2, samples, &mut rng).unwrap();
    let n = g.num_pairs();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for obs in batch.observations() {
        assert_eq!(obs.entries.len(), 2);
        assert!(obs.entries[0].0 < obs.entries[1].0);
        for &(k, s) in &obs.entries {
            sum[k] += s as f64;
            count[k] += 1;
        }
    }
    let p = m.p_matrix(&g).unwrap();
    for k in 0..n {
        let want = 0.3 * p[(k, 0)] + 0.7 * p[(k, 1)];
        let mean = sum[k] / count[k] as f64;
        let se = ((1.0 - want * want) / count[k] as f64).sqrt();
        assert!((mean - want).abs() < 4.0 * se, "pair {k}: {mean} vs {want}");
        let expected_count = samples as f64 * 2.0 / n as f64;
        assert!((count[k] as f64 - expected_count).abs() < 5.0 * expected_count.sqrt());
    }
}
