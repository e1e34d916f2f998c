//! Model parameterizations, prior sampling and partitions.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use std::fmt;
use std::str::FromStr;

use crate::error::{param, LdError, Result};
use crate::rng::{gaussian, rng_from_seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Clustering,
    SparseClustering,
    Biclustering,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::Clustering,
        ModelKind::SparseClustering,
        ModelKind::Biclustering,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Clustering => "clustering",
            ModelKind::SparseClustering => "sparse",
            ModelKind::Biclustering => "biclustering",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = LdError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clustering" => Ok(ModelKind::Clustering),
            "sparse" | "sparse_clustering" | "sparseclustering" => Ok(ModelKind::SparseClustering),
            "biclustering" | "bicluster" => Ok(ModelKind::Biclustering),
            other => param(format!("unknown model kind '{other}'")),
        }
    }
}

/// Full parameterization of one latent model instance.
///
/// The scaled separation Δ̄² is not stored; it is tied to λ² by
/// λ² = Δ̄²σ²/p (clustering, biclustering rows) or λ² = Δ̄²σ²/(ρp) (sparse).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    /// Column groups; only read for biclustering.
    pub l: usize,
    /// Column activation probability; only read for sparse clustering.
    pub rho: Rational64,
    pub sigma2: f64,
    pub lambda2: f64,
}

impl ModelSpec {
    fn base(kind: ModelKind, n: usize, p: usize, k: usize) -> Self {
        ModelSpec {
            kind,
            n,
            p,
            k,
            l: 1,
            rho: Rational64::from_integer(1),
            sigma2: 1.0,
            lambda2: 0.0,
        }
    }

    pub fn clustering(n: usize, p: usize, k: usize) -> Self {
        Self::base(ModelKind::Clustering, n, p, k)
    }

    pub fn sparse(n: usize, p: usize, k: usize, rho: Rational64) -> Self {
        ModelSpec {
            rho,
            ..Self::base(ModelKind::SparseClustering, n, p, k)
        }
    }

    pub fn biclustering(n: usize, p: usize, k: usize, l: usize) -> Self {
        ModelSpec {
            l,
            ..Self::base(ModelKind::Biclustering, n, p, k)
        }
    }

    pub fn with_lambda2(mut self, lambda2: f64) -> Self {
        self.lambda2 = lambda2;
        self
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = sigma2;
        self
    }

    /// Sets λ² from the target scaled separation Δ̄².
    pub fn with_delta_bar2(mut self, delta_bar2: f64) -> Self {
        self.lambda2 = delta_bar2 * self.sigma2 / self.effective_dim();
        self
    }

    /// Builds a spec from both λ² and Δ̄², insisting on exact agreement.
    pub fn with_both(self, lambda2: f64, delta_bar2: f64) -> Result<Self> {
        let spec = self.with_lambda2(lambda2);
        spec.check_consistency(delta_bar2)?;
        Ok(spec)
    }

    /// p for clustering/biclustering, ρp for sparse.
    pub fn effective_dim(&self) -> f64 {
        match self.kind {
            ModelKind::SparseClustering => self.rho_f64() * self.p as f64,
            _ => self.p as f64,
        }
    }

    pub fn rho_f64(&self) -> f64 {
        *self.rho.numer() as f64 / *self.rho.denom() as f64
    }

    pub fn rho_exact(&self) -> BigRational {
        BigRational::new(BigInt::from(*self.rho.numer()), BigInt::from(*self.rho.denom()))
    }

    pub fn delta_bar2(&self) -> f64 {
        self.lambda2 * self.effective_dim() / self.sigma2
    }

    /// Expected number of active columns s̄ = ρp.
    pub fn s_bar(&self) -> f64 {
        self.rho_f64() * self.p as f64
    }

    /// High-probability sparsity level s = 5ρp.
    pub fn s_whp(&self) -> f64 {
        5.0 * self.s_bar()
    }

    /// Number of row groups in the (label, sign) refinement exposed to metrics.
    pub fn refined_k(&self) -> usize {
        match self.kind {
            ModelKind::Clustering => self.k,
            _ => 2 * self.k,
        }
    }

    pub fn refined_l(&self) -> Option<usize> {
        match self.kind {
            ModelKind::Biclustering => Some(2 * self.l),
            _ => None,
        }
    }

    /// λ²·dim == Δ̄²σ² as exact rationals.
    pub fn check_consistency(&self, delta_bar2: f64) -> Result<()> {
        let exact = |v: f64| BigRational::from_float(v).ok_or_else(|| LdError::Param(format!("non-finite value {v}")));
        let dim = match self.kind {
            ModelKind::SparseClustering => self.rho_exact() * BigRational::from_integer(self.p.into()),
            _ => BigRational::from_integer(self.p.into()),
        };
        let lhs = exact(self.lambda2)? * dim;
        let rhs = exact(delta_bar2)? * exact(self.sigma2)?;
        if lhs != rhs {
            return param(format!(
                "lambda2={} inconsistent with delta_bar2={} for {}",
                self.lambda2, delta_bar2, self.kind
            ));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return param(format!("n must be >= 2, got {}", self.n));
        }
        if self.p < 1 {
            return param("p must be >= 1");
        }
        if self.k < 2 || self.k > self.n {
            return param(format!("need 2 <= K <= n, got K={} n={}", self.k, self.n));
        }
        if self.kind == ModelKind::Biclustering && (self.l < 2 || self.l > self.p) {
            return param(format!("need 2 <= L <= p, got L={} p={}", self.l, self.p));
        }
        if self.kind == ModelKind::SparseClustering {
            let r = self.rho;
            if *r.numer() < 0 || r > Rational64::from_integer(1) {
                return param(format!("rho must lie in [0,1], got {r}"));
            }
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return param(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return param(format!("lambda2 must be >= 0, got {}", self.lambda2));
        }
        Ok(())
    }
}

/// Hidden variables Z plus the mean array ν.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentState {
    pub k_star: Vec<usize>,
    pub l_star: Option<Vec<usize>>,
    pub eps_row: Option<Vec<i8>>,
    pub eps_col: Option<Vec<i8>>,
    pub z: Option<Vec<bool>>,
    /// K×p for (sparse) clustering, K×L for biclustering.
    pub nu: DMatrix<f64>,
}

impl LatentState {
    /// δ_ij(Z) ∈ {−1, 0, +1}.
    pub fn delta(&self, i: usize, j: usize) -> i8 {
        let mut d = 1i8;
        if let Some(z) = &self.z {
            if !z[j] {
                return 0;
            }
        }
        if let Some(e) = &self.eps_row {
            d *= e[i];
        }
        if let Some(e) = &self.eps_col {
            d *= e[j];
        }
        d
    }

    /// θ_ij(Z): the (row, column) index into ν.
    pub fn theta(&self, i: usize, j: usize) -> (usize, usize) {
        match &self.l_star {
            Some(l) => (self.k_star[i], l[j]),
            None => (self.k_star[i], j),
        }
    }

    /// X_ij = δ_ij ν_{θ_ij}.
    pub fn signal(&self, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |i, j| {
            let (a, b) = self.theta(i, j);
            f64::from(self.delta(i, j)) * self.nu[(a, b)]
        })
    }

    /// The (label, sign) refinement of the rows.
    pub fn row_partition(&self, spec: &ModelSpec) -> Partition {
        let labels = match &self.eps_row {
            Some(e) => self
                .k_star
                .iter()
                .zip(e)
                .map(|(&k, &s)| 2 * k + usize::from(s < 0))
                .collect(),
            None => self.k_star.clone(),
        };
        Partition::from_labels_unchecked(labels, spec.refined_k())
    }

    pub fn col_partition(&self, spec: &ModelSpec) -> Option<Partition> {
        let l = self.l_star.as_ref()?;
        let e = self.eps_col.as_ref()?;
        let labels = l.iter().zip(e).map(|(&l, &s)| 2 * l + usize::from(s < 0)).collect();
        Some(Partition::from_labels_unchecked(labels, spec.refined_l()?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationPair {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

/// A labelling of `[n]` into `k` groups; groups may be empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn from_labels(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&g| g >= k) {
            return param(format!("label {bad} out of range for {k} groups"));
        }
        Ok(Partition { labels, k })
    }

    pub(crate) fn from_labels_unchecked(labels: Vec<usize>, k: usize) -> Self {
        debug_assert!(labels.iter().all(|&g| g < k));
        Partition { labels, k }
    }

    /// Groups given as index lists; must be disjoint and cover `[n]`.
    pub fn from_groups(n: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (g, members) in groups.iter().enumerate() {
            for &i in members {
                if i >= n {
                    return param(format!("index {i} outside [0,{n})"));
                }
                if labels[i] != usize::MAX {
                    return param(format!("index {i} appears in two groups"));
                }
                labels[i] = g;
            }
        }
        if let Some(i) = labels.iter().position(|&g| g == usize::MAX) {
            return param(format!("index {i} not covered"));
        }
        Ok(Partition {
            labels,
            k: groups.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &g in &self.labels {
            s[g] += 1;
        }
        s
    }

    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut g = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            g[l].push(i);
        }
        g
    }

    pub fn nonempty_groups(&self) -> usize {
        self.sizes().iter().filter(|&&s| s > 0).count()
    }

    /// γ = max|G_k| / min|G_k|; `None` when a group is empty.
    pub fn balance_ratio(&self) -> Option<Rational64> {
        let s = self.sizes();
        let (lo, hi) = (*s.iter().min()?, *s.iter().max()?);
        (lo > 0).then(|| Rational64::new(hi as i64, lo as i64))
    }

    /// Same partition with `k` raised to at least `k` (extra groups empty).
    pub fn padded(&self, k: usize) -> Partition {
        Partition {
            labels: self.labels.clone(),
            k: self.k.max(k),
        }
    }

    /// Relabels groups by first appearance and drops empty groups.
    pub fn canonical(&self) -> Partition {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let labels = self
            .labels
            .iter()
            .map(|&g| {
                if map[g] == usize::MAX {
                    map[g] = next;
                    next += 1;
                }
                map[g]
            })
            .collect();
        Partition { labels, k: next }
    }

    /// Equality up to group relabelling.
    pub fn same_as(&self, other: &Partition) -> bool {
        self.canonical() == other.canonical()
    }
}

/// Row partition G and optional column partition H.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionPair {
    pub rows: Partition,
    pub cols: Option<Partition>,
}

impl PartitionPair {
    pub fn rows_only(rows: Partition) -> Self {
        PartitionPair { rows, cols: None }
    }
}

/// Draws (Z, ν, X, Y) from the prior of `spec`. The seed fixes everything.
pub fn sample_prior(spec: &ModelSpec, seed: u64) -> Result<(LatentState, ObservationPair, PartitionPair)> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let (state, obs) = draw_from(spec, &mut rng);
    let part = PartitionPair {
        rows: state.row_partition(spec),
        cols: state.col_partition(spec),
    };
    Ok((state, obs, part))
}

/// One prior draw from an existing stream; `spec` must already be valid.
pub fn draw_from<R: Rng>(spec: &ModelSpec, rng: &mut R) -> (LatentState, ObservationPair) {
    let state = sample_latent(spec, rng);
    let x = state.signal(spec.n, spec.p);
    let sigma = spec.sigma2.sqrt();
    let mut y = x.clone();
    // column-major noise order
    for v in y.iter_mut() {
        *v += sigma * gaussian(rng);
    }
    (state, ObservationPair { x, y })
}

fn sample_latent<R: Rng>(spec: &ModelSpec, rng: &mut R) -> LatentState {
    let (n, p, k) = (spec.n, spec.p, spec.k);
    let k_star: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let sign = |rng: &mut R| if rng.random_bool(0.5) { 1i8 } else { -1i8 };
    let lambda = spec.lambda2.sqrt();
    match spec.kind {
        ModelKind::Clustering => {
            let nu = DMatrix::from_fn(k, p, |_, _| lambda * gaussian(rng));
            LatentState {
                k_star,
                l_star: None,
                eps_row: None,
                eps_col: None,
                z: None,
                nu,
            }
        }
        ModelKind::SparseClustering => {
            let eps: Vec<i8> = (0..n).map(|_| sign(rng)).collect();
            let rho = spec.rho_f64();
            let z: Vec<bool> = (0..p).map(|_| rng.random::<f64>() < rho).collect();
            let nu = DMatrix::from_fn(k, p, |_, _| lambda * gaussian(rng));
            LatentState {
                k_star,
                l_star: None,
                eps_row: Some(eps),
                eps_col: None,
                z: Some(z),
                nu,
            }
        }
        ModelKind::Biclustering => {
            let l_star: Vec<usize> = (0..p).map(|_| rng.random_range(0..spec.l)).collect();
            let er: Vec<i8> = (0..n).map(|_| sign(rng)).collect();
            let ec: Vec<i8> = (0..p).map(|_| sign(rng)).collect();
            let nu = DMatrix::from_fn(k, spec.l, |_, _| lambda * gaussian(rng));
            LatentState {
                k_star,
                l_star: Some(l_star),
                eps_row: Some(er),
                eps_col: Some(ec),
                z: None,
                nu,
            }
        }
    }
}

/// Converts an exact rational to f64 (saturating on overflow).
pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}
