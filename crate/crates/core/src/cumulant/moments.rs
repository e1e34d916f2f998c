//! Exact latent enumeration.
//!
//! Expectations factor over independent blocks of Z: signs ε, activations z
//! and labels (k, l). Each factor is summed literally over its own finite
//! space restricted to the rows and columns the integrand touches.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::exact::ExactScalar;
use super::multi_index::MultiIndex;
use super::Cell;
use crate::error::{resource, Result};
use crate::model::{LatentState, ModelKind, ModelSpec};

/// Largest number of distinct rows or columns a latent enumeration may touch.
pub const MAX_TOUCHED: usize = 6;

/// The parts of a [`ModelSpec`] that cumulants depend on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CumulantModel {
    pub kind: ModelKind,
    pub k: usize,
    pub l: usize,
    pub rho: BigRational,
}

impl CumulantModel {
    pub fn from_spec(spec: &ModelSpec) -> Self {
        CumulantModel {
            kind: spec.kind,
            k: spec.k,
            l: spec.l,
            rho: spec.rho_exact(),
        }
    }

    fn has_row_signs(&self) -> bool {
        self.kind != ModelKind::Clustering
    }

    fn has_col_labels(&self) -> bool {
        self.kind == ModelKind::Biclustering
    }
}

fn distinct(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

fn local_index(set: &[usize], v: usize) -> usize {
    set.binary_search(&v).expect("index in touched set")
}

/// E_ε[Π_cells δ-sign] summed over the touched sign variables.
pub(crate) fn sign_factor(model: &CumulantModel, cells: &[Cell]) -> BigRational {
    if !model.has_row_signs() || cells.is_empty() {
        return BigRational::one();
    }
    let rows = distinct(cells.iter().map(|c| c.0).collect());
    let cols = if model.has_col_labels() {
        distinct(cells.iter().map(|c| c.1).collect())
    } else {
        Vec::new()
    };
    let bits = rows.len() + cols.len();
    let mut row_count = vec![0u32; rows.len()];
    let mut col_count = vec![0u32; cols.len()];
    for &(i, j) in cells {
        row_count[local_index(&rows, i)] += 1;
        if !cols.is_empty() {
            col_count[local_index(&cols, j)] += 1;
        }
    }
    let mut total: i64 = 0;
    for mask in 0u32..(1 << bits) {
        let mut s = 1i64;
        for (r, &c) in row_count.iter().enumerate() {
            if mask >> r & 1 == 1 && c % 2 == 1 {
                s = -s;
            }
        }
        for (q, &c) in col_count.iter().enumerate() {
            if mask >> (rows.len() + q) & 1 == 1 && c % 2 == 1 {
                s = -s;
            }
        }
        total += s;
    }
    BigRational::new(BigInt::from(total), BigInt::from(1i64 << bits))
}

/// E_z[Π_{touched columns} z_j] (sparse only): Σ over z of ρ^{#on}(1−ρ)^{#off} 𝟙{all on}.
pub(crate) fn activation_factor(model: &CumulantModel, cells: &[Cell]) -> BigRational {
    if model.kind != ModelKind::SparseClustering || cells.is_empty() {
        return BigRational::one();
    }
    let c = distinct(cells.iter().map(|c| c.1).collect()).len();
    let off = BigRational::one() - &model.rho;
    let mut total = BigRational::zero();
    for mask in 0u32..(1 << c) {
        let on = mask.count_ones() as usize;
        if on != c {
            continue;
        }
        let mut w = BigRational::one();
        for _ in 0..on {
            w *= &model.rho;
        }
        for _ in on..c {
            w *= &off;
        }
        total += w;
    }
    total
}

/// Labels on the touched rows (and columns), enumerated in mixed radix.
struct LabelScope {
    rows: Vec<usize>,
    cols: Vec<usize>,
    k: usize,
    l: usize,
}

impl LabelScope {
    fn new(model: &CumulantModel, cells: &[Cell], x_flag: bool) -> Self {
        let mut rows: Vec<usize> = cells.iter().map(|c| c.0).collect();
        if x_flag {
            rows.extend([0, 1]);
        }
        let cols = if model.has_col_labels() {
            distinct(cells.iter().map(|c| c.1).collect())
        } else {
            Vec::new()
        };
        LabelScope {
            rows: distinct(rows),
            cols,
            k: model.k,
            l: model.l,
        }
    }

    fn check(&self) -> Result<()> {
        if self.rows.len() > MAX_TOUCHED || self.cols.len() > MAX_TOUCHED {
            return resource(format!(
                "latent enumeration over {} rows and {} columns exceeds {MAX_TOUCHED}",
                self.rows.len(),
                self.cols.len()
            ));
        }
        Ok(())
    }

    fn states(&self) -> BigUint {
        BigUint::from(self.k).pow(self.rows.len() as u32) * BigUint::from(self.l).pow(self.cols.len() as u32)
    }

    /// Σ over label assignments of `weight(row_labels, col_labels)`, divided by the number of states.
    fn average(&self, mut weight: impl FnMut(&[usize], &[usize]) -> u64) -> BigRational {
        let (nr, nc) = (self.rows.len(), self.cols.len());
        let mut rl = vec![0usize; nr];
        let mut cl = vec![0usize; nc];
        let mut total: u128 = 0;
        loop {
            total += u128::from(weight(&rl, &cl));
            // advance mixed-radix counter, rows first
            let mut pos = 0;
            loop {
                if pos < nr {
                    rl[pos] += 1;
                    if rl[pos] < self.k {
                        break;
                    }
                    rl[pos] = 0;
                } else if pos < nr + nc {
                    cl[pos - nr] += 1;
                    if cl[pos - nr] < self.l {
                        break;
                    }
                    cl[pos - nr] = 0;
                } else {
                    return BigRational::new(BigInt::from(total), BigInt::from(self.states()));
                }
                pos += 1;
            }
        }
    }

    fn row(&self, i: usize) -> usize {
        local_index(&self.rows, i)
    }

    fn col(&self, j: usize) -> usize {
        local_index(&self.cols, j)
    }
}

/// (m−1)!! for even m, 0 for odd m: E[ν^m]/λ^m for ν ~ N(0, λ²).
pub(crate) fn gaussian_moment(m: u32) -> u64 {
    if m % 2 == 1 {
        return 0;
    }
    (1..m).step_by(2).map(u64::from).product()
}

/// Coefficient of λ^{|cells|} in E[x^{x_flag} Π_cells X_c].
pub(crate) fn mixed_moment(model: &CumulantModel, x_flag: bool, cells: &[Cell]) -> Result<BigRational> {
    let scope = LabelScope::new(model, cells, x_flag);
    scope.check()?;
    if cells.is_empty() {
        return Ok(if x_flag {
            BigRational::new(BigInt::one(), BigInt::from(model.k))
        } else {
            BigRational::one()
        });
    }
    // Odd ν-power shortcut: with θ = (k, column), an odd column total forces an odd power somewhere.
    if model.kind != ModelKind::Biclustering {
        let cols = distinct(cells.iter().map(|c| c.1).collect());
        for j in cols {
            if cells.iter().filter(|c| c.1 == j).count() % 2 == 1 {
                return Ok(BigRational::zero());
            }
        }
    }
    let sign = sign_factor(model, cells);
    if sign.is_zero() {
        return Ok(sign);
    }
    let act = activation_factor(model, cells);
    let locals: Vec<(usize, usize)> = cells
        .iter()
        .map(|&(i, j)| {
            let c = if model.has_col_labels() { scope.col(j) } else { j };
            (scope.row(i), c)
        })
        .collect();
    let bicl = model.has_col_labels();
    let (r0, r1) = if x_flag { (scope.row(0), scope.row(1)) } else { (0, 0) };
    let mut powers: Vec<(usize, usize, u32)> = Vec::with_capacity(cells.len());
    let labels = scope.average(|rl, cl| {
        if x_flag && rl[r0] != rl[r1] {
            return 0;
        }
        powers.clear();
        for &(r, c) in &locals {
            let theta = (rl[r], if bicl { cl[c] } else { c });
            match powers.iter_mut().find(|e| (e.0, e.1) == theta) {
                Some(e) => e.2 += 1,
                None => powers.push((theta.0, theta.1, 1)),
            }
        }
        powers.iter().map(|e| gaussian_moment(e.2)).product()
    });
    Ok(sign * act * labels)
}

/// Coefficient-only form of E[x^{x_flag} Π_s δ^{β_s} 𝟙_{Ω_{β_s}}] for two-cell blocks β_s.
pub(crate) fn conditioned_moment(model: &CumulantModel, x_flag: bool, pairs: &[[Cell; 2]]) -> Result<BigRational> {
    let cells: Vec<Cell> = pairs.iter().flatten().copied().collect();
    let scope = LabelScope::new(model, &cells, x_flag);
    scope.check()?;
    let sign = sign_factor(model, &cells);
    if sign.is_zero() {
        return Ok(sign);
    }
    let labels = omega_labels(model, &scope, x_flag, pairs);
    Ok(sign * activation_factor(model, &cells) * labels)
}

/// P over labels of x^{x_flag}·Π_s 𝟙{θ constant on β_s}.
fn omega_labels(model: &CumulantModel, scope: &LabelScope, x_flag: bool, blocks: &[[Cell; 2]]) -> BigRational {
    let bicl = model.has_col_labels();
    if !bicl && blocks.iter().any(|b| b[0].1 != b[1].1) {
        return BigRational::zero();
    }
    let locals: Vec<[(usize, usize); 2]> = blocks
        .iter()
        .map(|b| {
            let f = |&(i, j): &Cell| (scope.row(i), if bicl { scope.col(j) } else { j });
            [f(&b[0]), f(&b[1])]
        })
        .collect();
    let (r0, r1) = if x_flag { (scope.row(0), scope.row(1)) } else { (0, 0) };
    scope.average(|rl, cl| {
        if x_flag && rl[r0] != rl[r1] {
            return 0;
        }
        let theta = |c: (usize, usize)| (rl[c.0], if bicl { cl[c.1] } else { c.1 });
        u64::from(locals.iter().all(|b| theta(b[0]) == theta(b[1])))
    })
}

/// E[x^{x_flag} X^β] as an exact scalar (coefficient times λ^{|β|}).
pub fn moment_oracle(spec: &ModelSpec, x_flag: bool, beta: &MultiIndex) -> Result<ExactScalar> {
    let model = CumulantModel::from_spec(spec);
    let coeff = mixed_moment(&model, x_flag, &beta.cells())?;
    Ok(ExactScalar::new(coeff, beta.total()))
}

/// Ω_β(Z): every cell of β has δ ≠ 0 and all cells share one mean index θ.
pub fn omega_event(beta: &MultiIndex, state: &LatentState) -> bool {
    let cells = beta.cells();
    let Some(&first) = cells.first() else {
        return true;
    };
    let t0 = state.theta(first.0, first.1);
    cells
        .iter()
        .all(|&(i, j)| state.delta(i, j) != 0 && state.theta(i, j) == t0)
}

/// P[∩_s Ω_{β_s}] by exact enumeration over activations and labels.
pub fn omega_probability(spec: &ModelSpec, betas: &[MultiIndex]) -> Result<BigRational> {
    let model = CumulantModel::from_spec(spec);
    let cells: Vec<Cell> = betas.iter().flat_map(|b| b.cells()).collect();
    let scope = LabelScope::new(&model, &cells, false);
    scope.check()?;
    let bicl = model.has_col_labels();
    let groups: Vec<Vec<(usize, usize)>> = betas
        .iter()
        .map(|b| {
            b.cells()
                .iter()
                .map(|&(i, j)| (scope.row(i), if bicl { scope.col(j) } else { j }))
                .collect()
        })
        .collect();
    let labels = scope.average(|rl, cl| {
        let theta = |c: &(usize, usize)| (rl[c.0], if bicl { cl[c.1] } else { c.1 });
        u64::from(groups.iter().all(|g| g.iter().all(|c| theta(c) == theta(&g[0]))))
    });
    Ok(activation_factor(&model, &cells) * labels)
}
