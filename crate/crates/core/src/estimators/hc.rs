use nalgebra::DMatrix;
use rand::Rng;

use super::{check_points, lloyd_multi, single_linkage, spectral_project, sq_dist, EstimatorConfig, LowDimBackend};
use crate::error::{param, resource, Result};
use crate::metrics::group_means;
use crate::model::{Partition, PartitionPair};
use crate::rng::{derive_seed, rng_from_seed};

const MAX_SPLIT_RETRIES: u64 = 10;

/// Bernoulli(1/2) row split; attempt t draws from `derive_seed(seed, t)`.
fn split_rows(n: usize, k: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    for attempt in 0..=MAX_SPLIT_RETRIES {
        let mut rng = rng_from_seed(derive_seed(seed, attempt));
        let (mut i1, mut i2) = (Vec::new(), Vec::new());
        for i in 0..n {
            if rng.random_bool(0.5) {
                i2.push(i);
            } else {
                i1.push(i);
            }
        }
        if i1.len() >= k && i2.len() >= k {
            return Ok((i1, i2));
        }
    }
    resource(format!(
        "no split with both halves >= {k} rows after {MAX_SPLIT_RETRIES} retries"
    ))
}

/// Split, project the second half on the first half's leading eigenvectors,
/// cluster the projected half, then assign the first half to the nearest
/// group mean computed from the unprojected rows.
pub fn cluster_project_hc(y: &DMatrix<f64>, k: usize, config: &EstimatorConfig) -> Result<PartitionPair> {
    config.validate()?;
    check_points(y, k)?;
    let (n, p) = y.shape();
    if n < 2 * k {
        return param(format!("need n >= 2K, got n={n}, K={k}"));
    }
    let (i1, i2) = split_rows(n, k, config.split_seed)?;
    let y1 = y.select_rows(i1.iter());
    let y2 = y.select_rows(i2.iter());
    let keep_all = p as f64 <= (k as f64).max((n as f64).ln());
    let projected = if keep_all {
        y2.clone()
    } else {
        spectral_project(&y1, &y2, k)?.coords
    };
    let half = match config.backend {
        LowDimBackend::SingleLinkage => single_linkage(&projected, k)?,
        LowDimBackend::LloydMulti { restarts } => {
            lloyd_multi(&projected, k, restarts, derive_seed(config.split_seed, 1 << 32))?.rows
        }
    };
    let means = group_means(&y2, &half);
    let sizes = half.sizes();
    let mut labels = vec![0; n];
    for (a, &i) in i2.iter().enumerate() {
        labels[i] = half.label(a);
    }
    for (a, &i) in i1.iter().enumerate() {
        let mut best = (0, f64::INFINITY);
        for g in (0..k).filter(|&g| sizes[g] > 0) {
            let d = sq_dist(&y1, a, &means, g);
            if d < best.1 {
                best = (g, d);
            }
        }
        labels[i] = best.0;
    }
    Ok(PartitionPair::rows_only(Partition::from_labels(labels, k)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::clustering_error;
    use crate::rng::gaussian;

    fn planted(n: usize, p: usize, k: usize, gap: f64, seed: u64) -> (DMatrix<f64>, Partition) {
        let mut rng = rng_from_seed(seed);
        let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
        let y = DMatrix::from_fn(n, p, |i, j| gaussian(&mut rng) + if j == labels[i] { gap } else { 0.0 });
        (y, Partition::from_labels(labels, k).unwrap())
    }

    #[test]
    fn separated_recovered_both_backends() {
        let (y, truth) = planted(60, 20, 3, 15.0, 1);
        for backend in [LowDimBackend::SingleLinkage, LowDimBackend::LloydMulti { restarts: 3 }] {
            let cfg = EstimatorConfig::new(3).with_seed(7).with_backend(backend);
            let got = cluster_project_hc(&y, 3, &cfg).unwrap();
            assert_eq!(clustering_error(&got.rows, &truth).unwrap(), 0.0);
        }
    }

    #[test]
    fn minimal_size_completes() {
        let (y, _) = planted(4, 5, 2, 20.0, 2);
        let got = cluster_project_hc(&y, 2, &EstimatorConfig::new(2).with_seed(3)).unwrap();
        assert_eq!(got.rows.n(), 4);
        assert!(got.rows.k() == 2);
    }

    #[test]
    fn deterministic_in_seed() {
        let (y, _) = planted(40, 10, 2, 1.0, 3);
        let cfg = EstimatorConfig::new(2).with_seed(11);
        assert_eq!(
            cluster_project_hc(&y, 2, &cfg).unwrap(),
            cluster_project_hc(&y, 2, &cfg).unwrap()
        );
    }

    #[test]
    fn too_few_rows() {
        let (y, _) = planted(5, 3, 3, 1.0, 4);
        assert!(cluster_project_hc(&y, 3, &EstimatorConfig::new(3)).is_err());
    }
}
