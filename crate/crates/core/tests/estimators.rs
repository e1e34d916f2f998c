use ldgap_core::estimators::{
    bikmeans, cluster_project_hc, exact_kmeans, kmeans_objective, lloyd_multi, sparse_exhaustive_it, sparse_two_step,
    BiMode, EstimatorConfig, LowDimBackend,
};
use ldgap_core::metrics::clustering_error;
use ldgap_core::model::sample_prior;
use ldgap_core::ModelSpec;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn matrix(n: usize, p: usize, vals: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |i, j| {
        vals[(i * p + j) % vals.len()] + (i * 31 + j * 7) as f64 * 1e-3
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn outputs_are_valid_partitions(
        n in 6usize..10,
        p in 2usize..6,
        k in 1usize..4,
        vals in prop::collection::vec(-3.0f64..3.0, 1..40),
        seed in any::<u64>(),
    ) {
        let y = matrix(n, p, &vals);
        let cfg = EstimatorConfig::new(k).with_seed(seed).with_s(p.min(2)).with_l(2);
        let checks = [
            exact_kmeans(&y, k, 1_000_000).unwrap().rows,
            lloyd_multi(&y, k, 3, seed).unwrap().rows,
            sparse_two_step(&y, k, &cfg.clone().with_backend(LowDimBackend::LloydMulti { restarts: 2 })).unwrap().0.rows,
            sparse_exhaustive_it(&y, k, &cfg).unwrap().partition.rows,
            bikmeans(&y, k, 2, BiMode::Alternating { restarts: 2 }, &cfg).unwrap().partition.rows,
        ];
        for part in &checks {
            prop_assert_eq!(part.n(), n);
            prop_assert!(part.k() <= k && part.nonempty_groups() >= 1);
        }
        if n >= 2 * k {
            let hc = cluster_project_hc(&y, k, &cfg).unwrap().rows;
            prop_assert!(hc.k() <= k);
        }
        let a = kmeans_objective(&y, &checks[0]);
        let b = kmeans_objective(&y, &checks[1]);
        prop_assert!(a <= b + 1e-9);
    }
}

#[test]
fn deterministic_given_seeds() {
    let spec = ModelSpec::clustering(40, 12, 2).with_delta_bar2(3.0);
    let (_, obs, _) = sample_prior(&spec, 5).unwrap();
    let cfg = EstimatorConfig::new(2).with_seed(9).with_s(4).with_l(2);
    assert_eq!(
        cluster_project_hc(&obs.y, 2, &cfg).unwrap(),
        cluster_project_hc(&obs.y, 2, &cfg).unwrap()
    );
    assert_eq!(
        sparse_two_step(&obs.y, 2, &cfg).unwrap(),
        sparse_two_step(&obs.y, 2, &cfg).unwrap()
    );
    let small = obs.y.rows(0, 8).columns(0, 6).into_owned();
    assert_eq!(
        sparse_exhaustive_it(&small, 2, &cfg).unwrap(),
        sparse_exhaustive_it(&small, 2, &cfg).unwrap()
    );
    let alt = BiMode::Alternating { restarts: 3 };
    assert_eq!(
        bikmeans(&small, 2, 2, alt, &cfg).unwrap(),
        bikmeans(&small, 2, 2, alt, &cfg).unwrap()
    );
}

#[test]
fn recovery_improves_along_ladder() {
    // mean err over 100 trials must not increase by more than two standard errors
    let (n, p, k) = (60, 20, 3);
    let mut prev: Option<(f64, f64)> = None;
    for d2 in [0.5, 3.0, 10.0, 30.0, 100.0] {
        let spec = ModelSpec::clustering(n, p, k).with_delta_bar2(d2);
        let errs: Vec<f64> = (0..100)
            .map(|t| {
                let (state, obs, _) = sample_prior(&spec, 1000 + t).unwrap();
                let cfg = EstimatorConfig::new(k).with_seed(t);
                let got = cluster_project_hc(&obs.y, k, &cfg).unwrap();
                clustering_error(&got.rows.padded(k), &state.row_partition(&spec).padded(k)).unwrap()
            })
            .collect();
        let mean = errs.iter().sum::<f64>() / 100.0;
        let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
        let se = sd / 10.0;
        if let Some((m0, s0)) = prev {
            assert!(
                mean <= m0 + 2.0 * (se * se + s0 * s0).sqrt(),
                "Δ̄²={d2}: {mean} after {m0}"
            );
        }
        prev = Some((mean, se));
    }
    assert!(prev.unwrap().0 < 0.05);
}
