use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};

use super::multi_index::MultiIndex;
use crate::error::{param, resource, Result};
use crate::model::ModelKind;

/// Necessary conditions for κ_{x,α} ≠ 0 under the clustering prior:
/// rows 0 and 1 in the support, 𝒢_α^- ∪ {(u₀,u₁)} connected, every other node of degree ≥ 2.
pub fn is_clustering_admissible(alpha: &MultiIndex) -> bool {
    if alpha.n() < 2 {
        return false;
    }
    let g = alpha.graph();
    if g.row_degree[0] == 0 || g.row_degree[1] == 0 {
        return false;
    }
    let rows_ok = g.row_degree.iter().enumerate().skip(2).all(|(_, &d)| d == 0 || d >= 2);
    let cols_ok = g.col_degree.iter().all(|&d| d == 0 || d >= 2);
    rows_ok && cols_ok && g.connected_with(&[(0, 1)])
}

fn sparse_admissible(alpha: &MultiIndex) -> bool {
    let g = alpha.graph();
    is_clustering_admissible(alpha) && g.row_degree.iter().all(|&d| d == 0 || d >= 2)
}

fn bicluster_admissible(alpha: &MultiIndex) -> bool {
    if alpha.n() < 2 {
        return false;
    }
    let g = alpha.graph();
    g.row_degree[0] > 0
        && g.row_degree[1] > 0
        && g.row_degree.iter().all(|&d| d == 0 || d >= 2)
        && g.col_degree.iter().all(|&d| d == 0 || d >= 2)
}

/// True when α is certified to have κ_{x,α} = 0 (a necessary condition fails).
pub fn nullity_predicate(kind: ModelKind, alpha: &MultiIndex) -> bool {
    !match kind {
        ModelKind::Clustering => is_clustering_admissible(alpha),
        ModelKind::SparseClustering => sparse_admissible(alpha),
        ModelKind::Biclustering => bicluster_admissible(alpha),
    }
}

fn int_pow(base: i64, exp: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(base));
    if exp >= 0 {
        Pow::pow(&b, exp as u32)
    } else {
        Pow::pow(&b, (-exp) as u32).recip()
    }
}

/// Coefficient of λ^{|α|} in the explicit bound
/// (1/K)^{#α−1}·|α|^{|α|−2#α+4}·|α|^{|α|−#α−r_α+1}.
pub fn explicit_bound_coeff(alpha: &MultiIndex, k: usize) -> Result<BigRational> {
    if alpha.is_zero() {
        return param("explicit bound needs a nonzero α");
    }
    let d = i64::from(alpha.total());
    let m = alpha.num_rows() as i64;
    let r = alpha.num_cols() as i64;
    let inv_k = BigRational::new(BigInt::one(), BigInt::from(k));
    let kfac = if m >= 1 {
        Pow::pow(&inv_k, (m - 1) as u32)
    } else {
        BigRational::from_integer(BigInt::from(k))
    };
    Ok(kfac * int_pow(d, d - 2 * m + 4) * int_pow(d, d - m - r + 1))
}

/// Exhaustive count of admissible α next to the counting bound.
#[derive(Clone, Debug, PartialEq)]
pub struct CountResult {
    pub count: u64,
    /// d^{3(d−r−m+2)}·n^{m−2}·p^r (exponents may be negative outside the bound's intended range).
    pub bound: BigRational,
}

impl CountResult {
    pub fn within_bound(&self) -> bool {
        BigRational::from_integer(self.count.into()) <= self.bound
    }
}

/// Counts α ∈ ℕ^{n×p} with |α| = d, #α = m, r_α = r meeting the clustering conditions.
pub fn count_admissible(d: u32, m: usize, r: usize, n: usize, p: usize) -> Result<CountResult> {
    if d > 8 || n > 6 || p > 4 {
        return resource(format!("count_admissible guard: d={d} n={n} p={p} (max 8, 6, 4)"));
    }
    if n < 2 || p < 1 {
        return param("count_admissible needs n >= 2, p >= 1");
    }
    let count = MultiIndex::all_with_total(n, p, d)
        .iter()
        .filter(|a| a.num_rows() == m && a.num_cols() == r && is_clustering_admissible(a))
        .count() as u64;
    let (di, mi, ri) = (i64::from(d), m as i64, r as i64);
    let bound = int_pow(di, 3 * (di - ri - mi + 2)) * int_pow(n as i64, mi - 2) * int_pow(p as i64, ri);
    Ok(CountResult { count, bound })
}
