use nalgebra::DMatrix;
use num_rational::Rational64;

use super::{check_points, cluster_project_hc, lloyd_multi, EstimatorConfig, LowDimBackend};
use crate::error::{param, resource, LdError, Result};
use crate::metrics::separation_of;
use crate::model::{Partition, PartitionPair};
use crate::rng::{derive_seed, gaussian, rng_from_seed};

/// Indices (ascending) of the `s` columns with largest squared norm, lower index on ties.
pub fn select_columns_topnorm(y: &DMatrix<f64>, s: usize) -> Result<Vec<usize>> {
    top_s(
        &(0..y.ncols()).map(|j| y.column(j).norm_squared()).collect::<Vec<_>>(),
        s,
    )
}

fn top_s(scores: &[f64], s: usize) -> Result<Vec<usize>> {
    if s == 0 || s > scores.len() {
        return param(format!("column budget {s} outside [1, {}]", scores.len()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(s);
    idx.sort_unstable();
    Ok(idx)
}

/// Y⁽¹⁾ = (Y+E′)/√2 and Y⁽²⁾ = (Y−E′)/√2 with E′ of entrywise variance σ².
fn gaussian_split(y: &DMatrix<f64>, sigma2: f64, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = rng_from_seed(seed);
    let sd = sigma2.sqrt();
    let e = DMatrix::from_fn(y.nrows(), y.ncols(), |_, _| sd * gaussian(&mut rng));
    let r = std::f64::consts::FRAC_1_SQRT_2;
    ((y + &e) * r, (y - &e) * r)
}

fn budget(config: &EstimatorConfig, p: usize) -> Result<usize> {
    let s = config
        .s
        .ok_or_else(|| LdError::Param("sparse estimators need a column budget s".into()))?;
    if s > p {
        return param(format!("s={s} exceeds p={p}"));
    }
    Ok(s)
}

/// Gaussian splitting, column selection on Y⁽¹⁾, clustering of Y⁽²⁾ restricted
/// to the selected columns. The single-linkage backend runs the projection
/// pipeline; the Lloyd backend clusters the restricted rows directly.
pub fn sparse_two_step(y: &DMatrix<f64>, k: usize, config: &EstimatorConfig) -> Result<(PartitionPair, Vec<usize>)> {
    config.validate()?;
    check_points(y, k)?;
    let s = budget(config, y.ncols())?;
    let (y1, y2) = gaussian_split(y, config.sigma2, derive_seed(config.split_seed, 0x5EED));
    let cols = select_columns_topnorm(&y1, s)?;
    let restricted = y2.select_columns(cols.iter());
    let part = match config.backend {
        LowDimBackend::SingleLinkage => cluster_project_hc(&restricted, k, config)?,
        LowDimBackend::LloydMulti { restarts } => lloyd_multi(&restricted, k, restarts, config.split_seed)?,
    };
    Ok((part, cols))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseExhaustiveResult {
    pub partition: PartitionPair,
    pub columns: Vec<usize>,
    pub candidates: usize,
    /// the winner of the sequential tournament was undominated
    pub tournament_consistent: bool,
    /// no undominated candidate existed; a Copeland winner was returned
    pub copeland_fallback: bool,
}

struct Candidate {
    labels: Vec<usize>,
    cols: Vec<usize>,
    /// Σ_k (Σ_{a∈G_k} Y⁽²⁾_{aj})²/|G_k| − K for every column j
    col_crit: Vec<f64>,
}

/// Exact-K labellings of [n] in restricted-growth order.
fn exact_k_partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0; n];
    fn rec(i: usize, used: usize, k: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let n = labels.len();
        if used + (n - i) < k {
            return;
        }
        if i == n {
            out.push(labels.clone());
            return;
        }
        let top = (used + 1).min(k);
        for g in 0..top {
            labels[i] = g;
            rec(i + 1, used.max(g + 1), k, labels, out);
        }
    }
    rec(0, 0, k, &mut labels, &mut out);
    out
}

fn block_sq_sums(y: &DMatrix<f64>, labels: &[usize], k: usize) -> (Vec<f64>, Vec<usize>) {
    let p = y.ncols();
    let mut sums = vec![0.0; k * p];
    let mut sizes = vec![0; k];
    for (i, &g) in labels.iter().enumerate() {
        sizes[g] += 1;
        for j in 0..p {
            sums[g * p + j] += y[(i, j)];
        }
    }
    (sums, sizes)
}

/// Crit(B, J) = ⟨Y_J Y_Jᵀ − |J|I, B⟩ on the column set `cols`.
fn crit(c: &Candidate, cols: &[usize]) -> f64 {
    cols.iter().map(|&j| c.col_crit[j]).sum()
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut u: Vec<usize> = a.iter().chain(b).copied().collect();
    u.sort_unstable();
    u.dedup();
    u
}

/// `b` strictly dominates `a`.
fn beats(b: &Candidate, a: &Candidate) -> bool {
    let u = union(&a.cols, &b.cols);
    crit(b, &u) > crit(a, &u)
}

/// Exhaustive sparse estimator: every partition into exactly K nonempty groups
/// is a candidate with its own column set chosen on Y⁽¹⁾; candidates are
/// compared by Crit on Y⁽²⁾ over the union of their column sets.
pub fn sparse_exhaustive_it(y: &DMatrix<f64>, k: usize, config: &EstimatorConfig) -> Result<SparseExhaustiveResult> {
    config.validate()?;
    check_points(y, k)?;
    let (n, p) = y.shape();
    if n > 10 {
        return resource(format!("exhaustive sparse search needs n <= 10, got {n}"));
    }
    let s = budget(config, p)?;
    let labellings = exact_k_partitions(n, k);
    let count = labellings.len() as u64;
    if count > config.exhaustive_guard {
        return resource(format!(
            "{count} candidates exceed the exhaustive guard {}",
            config.exhaustive_guard
        ));
    }
    let (y1, y2) = gaussian_split(y, config.sigma2, derive_seed(config.split_seed, 0x5EED));
    let cands: Vec<Candidate> = labellings
        .into_iter()
        .map(|labels| {
            let (s1, _) = block_sq_sums(&y1, &labels, k);
            let col_score: Vec<f64> = (0..p).map(|j| (0..k).map(|g| s1[g * p + j].powi(2)).sum()).collect();
            let cols = top_s(&col_score, s)?;
            let (s2, sizes) = block_sq_sums(&y2, &labels, k);
            let col_crit = (0..p)
                .map(|j| (0..k).map(|g| s2[g * p + j].powi(2) / sizes[g] as f64).sum::<f64>() - k as f64)
                .collect();
            Ok(Candidate { labels, cols, col_crit })
        })
        .collect::<Result<_>>()?;

    // sequential tournament, earliest candidate kept on ties
    let mut champ = 0;
    for b in 1..cands.len() {
        if beats(&cands[b], &cands[champ]) {
            champ = b;
        }
    }
    let undominated = |a: usize| (0..cands.len()).all(|b| !beats(&cands[b], &cands[a]));
    let mut consistent = true;
    let mut fallback = false;
    if !undominated(champ) {
        consistent = false;
        match (0..cands.len()).find(|&a| undominated(a)) {
            Some(a) => champ = a,
            None => {
                fallback = true;
                let wins = |a: usize| (0..cands.len()).filter(|&b| beats(&cands[a], &cands[b])).count();
                let mut best = (0, 0);
                for a in 0..cands.len() {
                    let w = wins(a);
                    if w > best.1 {
                        best = (a, w);
                    }
                }
                champ = best.0;
            }
        }
    }
    let win = &cands[champ];
    Ok(SparseExhaustiveResult {
        partition: PartitionPair::rows_only(Partition::from_labels(win.labels.clone(), k)?),
        columns: win.cols.clone(),
        candidates: cands.len(),
        tournament_consistent: consistent,
        copeland_fallback: fallback,
    })
}

fn active_norms(x: &DMatrix<f64>, j_star: &[usize]) -> Result<Vec<f64>> {
    if j_star.is_empty() {
        return param("active column set is empty");
    }
    if let Some(&j) = j_star.iter().find(|&&j| j >= x.ncols()) {
        return param(format!("column {j} out of range"));
    }
    Ok(j_star.iter().map(|&j| x.column(j).norm_squared()).collect())
}

/// ω²_{J*} = min_{j∈J*} ‖X_{:j}‖²/σ².
pub fn omega_min_column_signal(x: &DMatrix<f64>, j_star: &[usize], sigma2: f64) -> Result<f64> {
    let norms = active_norms(x, j_star)?;
    Ok(norms.into_iter().fold(f64::INFINITY, f64::min) / sigma2)
}

/// η = max/min of ‖X_{:j}‖² over J*.
pub fn homogeneity_ratio(x: &DMatrix<f64>, j_star: &[usize]) -> Result<f64> {
    let norms = active_norms(x, j_star)?;
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = norms.iter().copied().fold(0.0, f64::max);
    if lo == 0.0 {
        return Err(LdError::Undefined("an active column has zero norm; η undefined".into()));
    }
    Ok(hi / lo)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneityCheck {
    pub omega2: f64,
    pub eta: f64,
    pub gamma: Rational64,
    pub delta2: f64,
    /// n(K−1)Δ²/(2sKγη)
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Checks ω²_{J*} ≥ n(K−1)Δ²/(2sKγη) with s = |J*|, K the number of nonempty
/// groups and γ, η, Δ² measured on `x`.
pub fn check_homogeneity_bound(
    x: &DMatrix<f64>,
    part: &Partition,
    j_star: &[usize],
    sigma2: f64,
) -> Result<HomogeneityCheck> {
    let compact = part.canonical();
    let gamma = compact
        .balance_ratio()
        .ok_or_else(|| LdError::Undefined("partition has no groups".into()))?;
    let omega2 = omega_min_column_signal(x, j_star, sigma2)?;
    let eta = homogeneity_ratio(x, j_star)?;
    let delta2 = separation_of(x, &compact, sigma2)?;
    let (n, k, s) = (x.nrows() as f64, compact.k() as f64, j_star.len() as f64);
    let rhs = n * (k - 1.0) * delta2 / (2.0 * s * k * (*gamma.numer() as f64 / *gamma.denom() as f64) * eta);
    let slack = omega2 - rhs;
    Ok(HomogeneityCheck {
        omega2,
        eta,
        gamma,
        delta2,
        rhs,
        slack,
        holds: slack >= -1e-9 * rhs.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topnorm_ties_and_full() {
        let y = DMatrix::zeros(3, 5);
        assert_eq!(select_columns_topnorm(&y, 2).unwrap(), vec![0, 1]);
        assert_eq!(select_columns_topnorm(&y, 5).unwrap(), vec![0, 1, 2, 3, 4]);
        let mut z = DMatrix::zeros(2, 4);
        z[(0, 3)] = 2.0;
        z[(1, 1)] = 1.0;
        assert_eq!(select_columns_topnorm(&z, 2).unwrap(), vec![1, 3]);
        assert!(select_columns_topnorm(&z, 0).is_err());
    }

    #[test]
    fn exact_k_enumeration() {
        assert_eq!(exact_k_partitions(4, 2).len(), 7);
        assert_eq!(exact_k_partitions(5, 3).len(), 25);
        assert_eq!(exact_k_partitions(2, 2), vec![vec![0, 1]]);
    }

    #[test]
    fn single_candidate() {
        let y = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, -1.0, 0.5, 0.0]);
        let cfg = EstimatorConfig::new(2).with_s(1);
        let r = sparse_exhaustive_it(&y, 2, &cfg).unwrap();
        assert_eq!(r.candidates, 1);
        assert_eq!(r.partition.rows.labels(), &[0, 1]);
    }

    #[test]
    fn omega_and_eta() {
        let mut x = DMatrix::zeros(4, 3);
        x[(0, 0)] = 1.0;
        x[(1, 1)] = 2.0;
        assert_eq!(homogeneity_ratio(&x, &[0, 1]).unwrap(), 4.0);
        assert_eq!(omega_min_column_signal(&x, &[0, 1], 0.5).unwrap(), 2.0);
        assert_eq!(homogeneity_ratio(&x, &[0]).unwrap(), 1.0);
        assert!(matches!(homogeneity_ratio(&x, &[2]), Err(LdError::Undefined(_))));
        assert!(homogeneity_ratio(&x, &[]).is_err());
    }

    #[test]
    fn bound_on_two_groups() {
        // means ±1 on two columns, γ = 1, η = 1
        let x = DMatrix::from_fn(6, 3, |i, j| {
            if j == 2 {
                0.0
            } else if i < 3 {
                1.0
            } else {
                -1.0
            }
        });
        let part = Partition::from_labels(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let c = check_homogeneity_bound(&x, &part, &[0, 1], 1.0).unwrap();
        assert_eq!(c.omega2, 6.0);
        assert_eq!(c.delta2, 4.0);
        assert!(c.holds);
    }
}
