//! Recovery procedures: exhaustive and Lloyd k-means, spectral projection with
//! single linkage, sparse column selection, the exhaustive Crit-ordered sparse
//! estimator and bi-k-means.
//!
//! Every procedure is single-threaded and a pure function of its input and seeds.
//! Ties are broken lexicographically (lowest index first).

mod bicluster;
mod hc;
mod kmeans;
mod linkage;
mod sparse;
mod spectral;

pub use bicluster::{bikmeans, bikmeans_objective, bikmeans_traced, BiMode, BiResult};
pub use hc::cluster_project_hc;
pub use kmeans::{
    exact_kmeans, kmeans_objective, kmeans_score, lloyd_multi, lloyd_refine, lloyd_single, partitions_up_to_k, LloydRun,
};
pub use linkage::{mst_cut, single_linkage};
pub use sparse::{
    check_homogeneity_bound, homogeneity_ratio, omega_min_column_signal, select_columns_topnorm, sparse_exhaustive_it,
    sparse_two_step, HomogeneityCheck, SparseExhaustiveResult,
};
pub use spectral::{spectral_project, SpectralProjection};

use nalgebra::DMatrix;

use crate::error::{param, Result};

/// Clusterer applied after projection (or after column selection).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LowDimBackend {
    SingleLinkage,
    LloydMulti { restarts: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub k: usize,
    pub l: Option<usize>,
    /// column budget for the sparse procedures
    pub s: Option<usize>,
    pub split_seed: u64,
    pub backend: LowDimBackend,
    /// largest number of candidates an exhaustive search may visit
    pub exhaustive_guard: u64,
    /// noise variance, assumed known
    pub sigma2: f64,
}

impl EstimatorConfig {
    pub fn new(k: usize) -> Self {
        EstimatorConfig {
            k,
            l: None,
            s: None,
            split_seed: 0,
            backend: LowDimBackend::SingleLinkage,
            exhaustive_guard: 20_000_000,
            sigma2: 1.0,
        }
    }

    pub fn with_l(mut self, l: usize) -> Self {
        self.l = Some(l);
        self
    }

    pub fn with_s(mut self, s: usize) -> Self {
        self.s = Some(s);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.split_seed = seed;
        self
    }

    pub fn with_backend(mut self, backend: LowDimBackend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = sigma2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return param("K must be positive");
        }
        if self.l == Some(0) || self.s == Some(0) {
            return param("L and s must be positive when set");
        }
        if self.exhaustive_guard == 0 {
            return param("exhaustive guard must be positive");
        }
        if let LowDimBackend::LloydMulti { restarts: 0 } = self.backend {
            return param("Lloyd backend needs at least one restart");
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return param("σ² must be positive");
        }
        Ok(())
    }
}

/// Median-based plug-in for σ²: median(Y_ij²) divided by the χ²₁ median.
/// Biased upward by the signal; a convenience for the harness only.
pub fn estimate_sigma2_median(y: &DMatrix<f64>) -> Option<f64> {
    const CHI2_1_MEDIAN: f64 = 0.454_936_423_119_572_8;
    let mut sq: Vec<f64> = y.iter().map(|v| v * v).collect();
    if sq.is_empty() {
        return None;
    }
    sq.sort_by(f64::total_cmp);
    let m = sq.len();
    let med = if m % 2 == 1 {
        sq[m / 2]
    } else {
        0.5 * (sq[m / 2 - 1] + sq[m / 2])
    };
    Some(med / CHI2_1_MEDIAN)
}

pub(crate) fn sq_dist(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    (0..a.ncols()).map(|c| (a[(i, c)] - b[(j, c)]).powi(2)).sum()
}

pub(crate) fn check_points(y: &DMatrix<f64>, k: usize) -> Result<()> {
    if k == 0 {
        return param("K must be positive");
    }
    if y.nrows() < k {
        return param(format!("{} points cannot form {k} groups", y.nrows()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return param("input contains non-finite entries");
    }
    Ok(())
}
