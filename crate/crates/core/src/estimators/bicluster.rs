use nalgebra::DMatrix;

use super::{check_points, lloyd_refine, lloyd_single, partitions_up_to_k, EstimatorConfig};
use crate::error::{param, resource, Result};
use crate::model::{Partition, PartitionPair};
use crate::rng::derive_seed;

const MAX_SWEEPS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BiMode {
    Exhaustive,
    Alternating { restarts: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiResult {
    pub partition: PartitionPair,
    pub objective: f64,
    /// objective after every sweep of the winning alternating run (empty when exhaustive)
    pub trace: Vec<f64>,
}

/// Tr[Yᵀ B_r Y B_c] = Σ_{k,l} S_kl²/(|G_k||H_l|), S_kl the block sum.
pub fn bikmeans_objective(y: &DMatrix<f64>, rows: &Partition, cols: &Partition) -> f64 {
    let (rs, cs) = (rows.sizes(), cols.sizes());
    let mut s = DMatrix::<f64>::zeros(rows.k(), cols.k());
    for i in 0..y.nrows() {
        for j in 0..y.ncols() {
            s[(rows.label(i), cols.label(j))] += y[(i, j)];
        }
    }
    let mut total = 0.0;
    for a in 0..rows.k() {
        for b in 0..cols.k() {
            if rs[a] > 0 && cs[b] > 0 {
                total += s[(a, b)].powi(2) / (rs[a] * cs[b]) as f64;
            }
        }
    }
    total
}

fn rgs_up_to(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0; n];
    fn rec(i: usize, used: usize, k: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == labels.len() {
            out.push(labels.clone());
            return;
        }
        for g in 0..(used + 1).min(k) {
            labels[i] = g;
            rec(i + 1, used.max(g + 1), k, labels, out);
        }
    }
    rec(0, 0, k, &mut labels, &mut out);
    out
}

fn exhaustive(y: &DMatrix<f64>, k: usize, l: usize, guard: u64) -> Result<BiResult> {
    let (n, p) = y.shape();
    if n > 9 || p > 9 {
        return resource(format!("exhaustive bi-k-means needs n, p <= 9, got {n}x{p}"));
    }
    let pairs = partitions_up_to_k(n, k) * partitions_up_to_k(p, l);
    if pairs > u128::from(guard) {
        return resource(format!(
            "{pairs} partition pairs exceed the guard {guard}; use Alternating"
        ));
    }
    let row_parts = rgs_up_to(n, k);
    let col_parts = rgs_up_to(p, l);
    let mut best = (f64::NEG_INFINITY, 0, 0);
    let mut r = vec![0.0; k * p];
    let mut s = vec![0.0; k * l];
    for (ri, rows) in row_parts.iter().enumerate() {
        r.iter_mut().for_each(|v| *v = 0.0);
        let mut rsize = vec![0usize; k];
        for (i, &g) in rows.iter().enumerate() {
            rsize[g] += 1;
            for j in 0..p {
                r[g * p + j] += y[(i, j)];
            }
        }
        for (ci, cols) in col_parts.iter().enumerate() {
            s.iter_mut().for_each(|v| *v = 0.0);
            let mut csize = vec![0usize; l];
            for (j, &h) in cols.iter().enumerate() {
                csize[h] += 1;
                for g in 0..k {
                    s[g * l + h] += r[g * p + j];
                }
            }
            let mut obj = 0.0;
            for g in 0..k {
                for h in 0..l {
                    if rsize[g] > 0 && csize[h] > 0 {
                        obj += s[g * l + h].powi(2) / (rsize[g] * csize[h]) as f64;
                    }
                }
            }
            if obj > best.0 {
                best = (obj, ri, ci);
            }
        }
    }
    Ok(BiResult {
        partition: PartitionPair {
            rows: Partition::from_labels(row_parts[best.1].clone(), k)?,
            cols: Some(Partition::from_labels(col_parts[best.2].clone(), l)?),
        },
        objective: best.0,
        trace: Vec::new(),
    })
}

/// Rows of `y` aggregated over column groups, scaled by 1/√|H_l|.
fn aggregate(y: &DMatrix<f64>, cols: &Partition) -> DMatrix<f64> {
    let sizes = cols.sizes();
    let mut u = DMatrix::zeros(y.nrows(), cols.k());
    for i in 0..y.nrows() {
        for j in 0..y.ncols() {
            u[(i, cols.label(j))] += y[(i, j)];
        }
    }
    for (h, &sz) in sizes.iter().enumerate() {
        if sz > 0 {
            u.column_mut(h).scale_mut(1.0 / (sz as f64).sqrt());
        }
    }
    u
}

fn alternating_run(y: &DMatrix<f64>, k: usize, l: usize, seed: u64) -> Result<BiResult> {
    let yt = y.transpose();
    let mut cols = lloyd_single(&yt, l, derive_seed(seed, 0))?.partition;
    let mut rows = lloyd_single(&aggregate(y, &cols), k, derive_seed(seed, 1))?.partition;
    let mut trace = vec![bikmeans_objective(y, &rows, &cols)];
    for _ in 0..MAX_SWEEPS {
        let new_cols = lloyd_refine(&aggregate(&yt, &rows), cols.labels().to_vec(), l)?.partition;
        let new_rows = lloyd_refine(&aggregate(y, &new_cols), rows.labels().to_vec(), k)?.partition;
        let stable = new_cols == cols && new_rows == rows;
        cols = new_cols;
        rows = new_rows;
        trace.push(bikmeans_objective(y, &rows, &cols));
        if stable {
            break;
        }
    }
    Ok(BiResult {
        objective: *trace.last().expect("nonempty trace"),
        partition: PartitionPair { rows, cols: Some(cols) },
        trace,
    })
}

/// Bi-k-means: maximize Tr[Yᵀ B_r Y B_c] over row partitions into at most K
/// groups and column partitions into at most L groups.
pub fn bikmeans(y: &DMatrix<f64>, k: usize, l: usize, mode: BiMode, config: &EstimatorConfig) -> Result<BiResult> {
    config.validate()?;
    check_points(y, k)?;
    check_points(&y.transpose(), l)?;
    match mode {
        BiMode::Exhaustive => exhaustive(y, k, l, config.exhaustive_guard),
        BiMode::Alternating { restarts: 0 } => param("alternating bi-k-means needs at least one restart"),
        BiMode::Alternating { restarts } => {
            let mut best: Option<BiResult> = None;
            for r in 0..restarts {
                let run = alternating_run(y, k, l, derive_seed(config.split_seed, r as u64))?;
                if best.as_ref().is_none_or(|b| run.objective > b.objective) {
                    best = Some(run);
                }
            }
            Ok(best.expect("restarts >= 1"))
        }
    }
}

/// Same as [`bikmeans`] in alternating mode with a single restart, for inspecting the trace.
pub fn bikmeans_traced(y: &DMatrix<f64>, k: usize, l: usize, seed: u64) -> Result<BiResult> {
    check_points(y, k)?;
    check_points(&y.transpose(), l)?;
    alternating_run(y, k, l, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian, rng_from_seed};

    fn checker(n: usize, p: usize, amp: f64, seed: u64) -> (DMatrix<f64>, Partition, Partition) {
        let mut rng = rng_from_seed(seed);
        let rows: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let cols: Vec<usize> = (0..p).map(|j| (j / 2) % 2).collect();
        let y = DMatrix::from_fn(n, p, |i, j| {
            let sign = if rows[i] == cols[j] { 1.0 } else { -1.0 };
            amp * sign + gaussian(&mut rng)
        });
        (
            y,
            Partition::from_labels(rows, 2).unwrap(),
            Partition::from_labels(cols, 2).unwrap(),
        )
    }

    #[test]
    fn objective_is_trace_form() {
        let (y, r, c) = checker(5, 4, 0.3, 1);
        let (_, br) = crate::metrics::partnership_matrices(&r);
        let (_, bc) = crate::metrics::partnership_matrices(&c);
        let tr = (y.transpose() * br * &y * bc).trace();
        assert!((tr - bikmeans_objective(&y, &r, &c)).abs() < 1e-9);
    }

    #[test]
    fn exhaustive_checkerboard() {
        let (y, r, c) = checker(8, 8, 30.0, 2);
        let res = bikmeans(&y, 2, 2, BiMode::Exhaustive, &EstimatorConfig::new(2).with_l(2)).unwrap();
        assert!(res.partition.rows.same_as(&r));
        assert!(res.partition.cols.unwrap().same_as(&c));
    }

    #[test]
    fn alternating_monotone() {
        for seed in 0..20 {
            let (y, _, _) = checker(12, 10, 0.5, seed);
            let run = bikmeans_traced(&y, 3, 2, seed).unwrap();
            assert!(run.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{:?}", run.trace);
        }
    }

    #[test]
    fn alternating_close_to_exhaustive() {
        let cfg = EstimatorConfig::new(2).with_l(2).with_seed(5);
        let mut good = 0;
        for seed in 0..30 {
            let (y, _, _) = checker(8, 8, 0.7, 100 + seed);
            let ex = bikmeans(&y, 2, 2, BiMode::Exhaustive, &cfg).unwrap();
            let alt = bikmeans(&y, 2, 2, BiMode::Alternating { restarts: 5 }, &cfg).unwrap();
            assert!(alt.objective <= ex.objective + 1e-9);
            if alt.objective >= 0.95 * ex.objective {
                good += 1;
            }
        }
        assert!(good >= 24, "{good}/30");
    }

    #[test]
    fn guards() {
        let y = DMatrix::zeros(10, 3);
        let cfg = EstimatorConfig::new(2);
        assert!(bikmeans(&y, 2, 2, BiMode::Exhaustive, &cfg).is_err());
        assert!(bikmeans(&y, 2, 2, BiMode::Alternating { restarts: 0 }, &cfg).is_err());
    }
}
