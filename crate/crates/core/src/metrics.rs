//! Separations, partnership matrices and clustering error.

use itertools::Itertools;
use nalgebra::DMatrix;
use num_rational::Rational64;
use pathfinding::prelude::{kuhn_munkres, Matrix};

use crate::error::{LdError, Result};
use crate::model::Partition;

/// Row means of `y` per group (empty groups give zero rows).
pub fn group_means(y: &DMatrix<f64>, part: &Partition) -> DMatrix<f64> {
    let k = part.k();
    let mut sums = DMatrix::zeros(k, y.ncols());
    let sizes = part.sizes();
    for i in 0..y.nrows() {
        let g = part.label(i);
        for j in 0..y.ncols() {
            sums[(g, j)] += y[(i, j)];
        }
    }
    for g in 0..k {
        if sizes[g] > 0 {
            let inv = 1.0 / sizes[g] as f64;
            sums.row_mut(g).scale_mut(inv);
        }
    }
    sums
}

/// Δ² = min_{k≠l} ‖μ_k − μ_l‖²/(2σ²) over the rows of `means`.
pub fn separation(means: &DMatrix<f64>, sigma2: f64) -> Result<f64> {
    let k = means.nrows();
    if k < 2 {
        return Err(LdError::Undefined("separation needs at least two groups".into()));
    }
    let mut best = f64::INFINITY;
    for a in 0..k {
        for b in a + 1..k {
            let d = (means.row(a) - means.row(b)).norm_squared();
            best = best.min(d);
        }
    }
    Ok(best / (2.0 * sigma2))
}

/// Δ² of the signal `x` under `part`, over nonempty groups.
pub fn separation_of(x: &DMatrix<f64>, part: &Partition, sigma2: f64) -> Result<f64> {
    let means = group_means(x, part);
    let sizes = part.sizes();
    let keep: Vec<usize> = (0..part.k()).filter(|&g| sizes[g] > 0).collect();
    separation(&means.select_rows(keep.iter()), sigma2)
}

/// Biclustering separations (Δ_r², Δ_c²) from a K×L block-mean matrix.
///
/// Δ_r² = (p/L)·min_{k≠k'}‖μ_{k:}−μ_{k':}‖²/(2σ²), Δ_c² = (n/K)·min_{l≠l'}‖μ_{:l}−μ_{:l'}‖²/(2σ²).
pub fn bicluster_separation(means: &DMatrix<f64>, n: usize, p: usize, sigma2: f64) -> Result<(f64, f64)> {
    let (k, l) = means.shape();
    let r = separation(means, sigma2)? * p as f64 / l as f64;
    let c = separation(&means.transpose(), sigma2)? * n as f64 / k as f64;
    Ok((r, c))
}

/// Co-membership matrix M and its normalized projector form B.
pub fn partnership_matrices(part: &Partition) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = part.n();
    let sizes = part.sizes();
    let m = DMatrix::from_fn(n, n, |i, j| f64::from(u8::from(part.label(i) == part.label(j))));
    let b = DMatrix::from_fn(n, n, |i, j| {
        if part.label(i) == part.label(j) {
            1.0 / sizes[part.label(i)] as f64
        } else {
            0.0
        }
    });
    (m, b)
}

/// B^G with exact rational entries.
pub fn partnership_b_exact(part: &Partition) -> Vec<Vec<Rational64>> {
    let n = part.n();
    let sizes = part.sizes();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if part.label(i) == part.label(j) {
                        Rational64::new(1, sizes[part.label(i)] as i64)
                    } else {
                        Rational64::from_integer(0)
                    }
                })
                .collect()
        })
        .collect()
}

/// ‖M^A − M^B‖²_F, i.e. the number of ordered pairs on which co-membership differs.
pub fn partnership_distance(a: &Partition, b: &Partition) -> Result<usize> {
    same_n(a, b)?;
    let n = a.n();
    let mut count = 0;
    for i in 0..n {
        for j in 0..n {
            let sa = a.label(i) == a.label(j);
            let sb = b.label(i) == b.label(j);
            count += usize::from(sa != sb);
        }
    }
    Ok(count)
}

fn same_n(a: &Partition, b: &Partition) -> Result<()> {
    if a.n() != b.n() {
        return Err(LdError::Mismatch(format!(
            "partitions over {} and {} points",
            a.n(),
            b.n()
        )));
    }
    Ok(())
}

/// Overlap counts C[a][b] = |Â_a ∩ B_b| after padding both to a common K.
fn overlaps(a: &Partition, b: &Partition) -> (usize, Vec<Vec<i64>>) {
    let k = a.k().max(b.k());
    let mut c = vec![vec![0i64; k]; k];
    for i in 0..a.n() {
        c[a.label(i)][b.label(i)] += 1;
    }
    (k, c)
}

/// Largest total overlap over label matchings; exhaustive for K ≤ 8.
fn best_matching(k: usize, c: &[Vec<i64>]) -> i64 {
    if k <= 8 {
        (0..k)
            .permutations(k)
            .map(|perm| (0..k).map(|b| c[perm[b]][b]).sum::<i64>())
            .max()
            .unwrap_or(0)
    } else {
        let m = Matrix::from_rows(c.iter().cloned()).expect("square overlap matrix");
        kuhn_munkres(&m).0
    }
}

/// Minimum over label matchings of Σ_k |G*_k Δ Ĝ_π(k)|, divided by two.
pub fn misclassified(g_hat: &Partition, g_star: &Partition) -> Result<usize> {
    same_n(g_hat, g_star)?;
    let (k, c) = overlaps(g_hat, g_star);
    let matched = best_matching(k, &c) as usize;
    Ok(g_star.n() - matched)
}

/// err = (1/2n)·min_π Σ_k |G*_k Δ Ĝ_π(k)|, in [0, 1].
pub fn clustering_error(g_hat: &Partition, g_star: &Partition) -> Result<f64> {
    Ok(misclassified(g_hat, g_star)? as f64 / g_star.n() as f64)
}

/// Outcome of the partnership/error inequality check.
#[derive(Clone, Debug, PartialEq)]
pub struct LossCheck {
    pub holds: bool,
    /// rhs − lhs, exact.
    pub slack: Rational64,
    pub gamma: Rational64,
    pub err: Rational64,
    pub m_distance: usize,
}

/// Checks (1 − err)² ≤ γ² − K‖M^G − M*‖²_F/(2n²) with γ the larger balance ratio.
pub fn check_loss_inequality(g: &Partition, g_star: &Partition) -> Result<LossCheck> {
    same_n(g, g_star)?;
    let n = g.n() as i64;
    let k = g.k().max(g_star.k()) as i64;
    let ga = g.padded(k as usize).balance_ratio();
    let gb = g_star.padded(k as usize).balance_ratio();
    let gamma = match (ga, gb) {
        (Some(a), Some(b)) => a.max(b),
        _ => {
            return Err(LdError::Undefined(
                "a partition has an empty group, γ is infinite".into(),
            ))
        }
    };
    let err = Rational64::new(misclassified(g, g_star)? as i64, n);
    let dm = partnership_distance(g, g_star)?;
    let one = Rational64::from_integer(1);
    let lhs = (one - err) * (one - err);
    let rhs = gamma * gamma - Rational64::new(k * dm as i64, 2 * n * n);
    Ok(LossCheck {
        holds: lhs <= rhs,
        slack: rhs - lhs,
        gamma,
        err,
        m_distance: dm,
    })
}

/// ‖M^Ĝ − M*‖²_F/(n(n−1)) ≤ 2·err; returns (lhs, rhs).
pub fn mtog_sides(g_hat: &Partition, g_star: &Partition) -> Result<(Rational64, Rational64)> {
    let n = g_star.n() as i64;
    let dm = partnership_distance(g_hat, g_star)? as i64;
    let lhs = Rational64::new(dm, n * (n - 1));
    let rhs = Rational64::new(2 * misclassified(g_hat, g_star)? as i64, n);
    Ok((lhs, rhs))
}
