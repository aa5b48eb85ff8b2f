mod common;

use mixmnl::moments::{
    empirical_s2, exact_m2, exact_m3, exact_projected_m3, projected_cube, projected_s3_statistic,
    s3_scale, uniform_12_p_norm_constant,
};
use mixmnl::{ComparisonGraph, MixedMnlModel, Observation, ObservationBatch};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixed_model() -> (MixedMnlModel, ComparisonGraph) {
    let g = ComparisonGraph::complete(6);
    let m = MixedMnlModel::new(
        vec![
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            vec![6.0, 1.0, 4.0, 2.0, 5.0, 3.0],
        ],
        vec![0.4, 0.6],
    )
    .unwrap();
    (m, g)
}

fn observation_strategy(num_pairs: usize, ell: usize) -> impl Strategy<Value = Observation> {
    (
        proptest::sample::subsequence((0..num_pairs).collect::<Vec<_>>(), ell),
        prop::collection::vec(any::<bool>(), ell),
    )
        .prop_map(|(idx, signs)| {
            let entries = idx
                .into_iter()
                .zip(signs)
                .map(|(k, s)| (k, if s { 1 } else { -1 }))
                .collect();
            Observation::new(entries).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn s2_is_symmetric_with_zero_diagonal(
        obs in prop::collection::vec(observation_strategy(12, 4), 1..40),
    ) {
        let batch = ObservationBatch::new(12, 4, obs).unwrap();
        let s2 = empirical_s2(&batch, 0..batch.len()).unwrap();
        for i in 0..12 {
            prop_assert_eq!(s2.matrix[(i, i)], 0.0);
            for j in 0..12 {
                prop_assert_eq!(s2.matrix[(i, j)], s2.matrix[(j, i)]);
            }
        }
    }

    #[test]
    fn streaming_cube_matches_brute_force(
        obs in observation_strategy(10, 5),
        seed in any::<u64>(),
        r in 1usize..4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = DMatrix::from_fn(10, r, |_, _| rng.gen_range(-1.0..1.0));
        let x: Vec<f64> = obs.to_dense(10).iter().copied().collect();
        let fast = projected_cube(obs.entries.iter().map(|&(k, s)| (k, s as f64)), &w);
        let slow = common::brute_projected_cube(&x, &w);
        for (a, b) in fast.as_slice().iter().zip(&slow) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn s2_is_independent_of_sample_order(
        obs in prop::collection::vec(observation_strategy(8, 3), 2..30),
    ) {
        let a = ObservationBatch::new(8, 3, obs.clone()).unwrap();
        let mut rev = obs;
        rev.reverse();
        let b = ObservationBatch::new(8, 3, rev).unwrap();
        let sa = empirical_s2(&a, 0..a.len()).unwrap();
        let sb = empirical_s2(&b, 0..b.len()).unwrap();
        prop_assert_eq!(sa.matrix, sb.matrix);
    }
}

#[test]
fn dense_cube_helper_agrees_with_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let x: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w = DMatrix::from_fn(9, 2, |_, _| rng.gen_range(-1.0..1.0));
    let fast = projected_cube(x.iter().copied().enumerate(), &w);
    let slow = common::brute_projected_cube(&x, &w);
    for (a, b) in fast.as_slice().iter().zip(&slow) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn exact_projected_third_moment_matches_materialized() {
    let (m, g) = fixed_model();
    let n = g.num_pairs();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = DMatrix::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0));
    let mut m3 = exact_m3(&m, &g, 60).unwrap();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    m3.set(i, j, k, 0.0);
                }
            }
        }
    }
    let want = m3.multilinear(&w);
    let got = exact_projected_m3(&m, &g, &w).unwrap();
    assert!(got.max_abs_diff(&want) < 1e-12);
}

#[test]
fn third_moment_statistic_is_unbiased() {
    let (m, g) = fixed_model();
    let n = g.num_pairs();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let w = DMatrix::from_fn(n, 2, |_, _| rng.gen_range(-0.5..0.5));
    let samples = 1_000_000;
    let batch = m.sample_batch(&g, 3, samples, &mut rng).unwrap();
    let scale = s3_scale(n, 3);
    let mut sum = [0.0; 8];
    let mut sumsq = [0.0; 8];
    for obs in batch.observations() {
        let y = projected_cube(obs.entries.iter().map(|&(k, s)| (k, s as f64)), &w);
        for (e, &v) in y.as_slice().iter().enumerate() {
            sum[e] += v * scale;
            sumsq[e] += (v * scale).powi(2);
        }
    }
    let streamed = projected_s3_statistic(&batch, 0..samples, &w).unwrap();
    let want = exact_projected_m3(&m, &g, &w).unwrap();
    for e in 0..8 {
        let mean = sum[e] / samples as f64;
        let var = sumsq[e] / samples as f64 - mean * mean;
        let se = (var / samples as f64).sqrt();
        assert!((streamed.as_slice()[e] - mean).abs() < 1e-9 * (1.0 + mean.abs()));
        assert!(
            (mean - want.as_slice()[e]).abs() < 4.0 * se,
            "entry {e}: {mean} vs {} (se {se})",
            want.as_slice()[e]
        );
    }
}

#[test]
fn second_moment_error_shrinks_at_root_rate() {
    let (m, g) = fixed_model();
    let m2 = exact_m2(&m, &g).unwrap();
    let n = g.num_pairs();
    let sizes = [2_000usize, 20_000, 200_000];
    let mut logs = Vec::new();
    for &s in &sizes {
        let mut total = 0.0;
        let reps = 6;
        for rep in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + rep as u64 + s as u64);
            let batch = m.sample_batch(&g, 3, s, &mut rng).unwrap();
            let s2 = empirical_s2(&batch, 0..s).unwrap();
            let mut sq = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        sq += (s2.matrix[(i, j)] - m2[(i, j)]).powi(2);
                    }
                }
            }
            total += sq;
        }
        logs.push(((s as f64).ln(), (total / reps as f64).sqrt().ln()));
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}

#[test]
fn uniform_weight_constant_matches_quadrature() {
    // E[((x − y)/(x + y))²] for x, y i.i.d. uniform on [1, 2], by the
    // midpoint rule on a fine grid.
    let k = 2000;
    let h = 1.0 / k as f64;
    let mut s = 0.0;
    for a in 0..k {
        let x = 1.0 + (a as f64 + 0.5) * h;
        for b in 0..k {
            let y = 1.0 + (b as f64 + 0.5) * h;
            s += ((x - y) / (x + y)).powi(2);
        }
    }
    let quad = s * h * h;
    assert!((quad - uniform_12_p_norm_constant()).abs() < 1e-7, "{quad}");
    assert!((uniform_12_p_norm_constant() - 0.0189).abs() < 1e-4);
}
