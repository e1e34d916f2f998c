//! Cumulants of random variables on a finite, uniformly weighted sample space.
//!
//! Used for the label-indicator sub-oracle and for checking the law of total
//! cumulance on small examples.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

use super::engine::standard_mobius;
use super::partition::enumerate_set_partitions;
use crate::error::Result;

/// A random variable given by its value on each equally likely outcome.
pub type FiniteVar = Vec<BigRational>;

fn mean(values: impl Iterator<Item = BigRational>, count: usize) -> BigRational {
    values.fold(BigRational::zero(), |a, v| a + v) / BigRational::from_integer(BigInt::from(count))
}

/// Joint cumulant of `vars` over the uniform law on the outcomes listed in `support`.
fn cumulant_on(vars: &[FiniteVar], support: &[usize]) -> Result<BigRational> {
    let mut total = BigRational::zero();
    for pi in enumerate_set_partitions(vars.len())? {
        let mut prod = BigRational::from_integer(standard_mobius(pi.len()).into());
        for block in &pi.blocks {
            let m = mean(
                support
                    .iter()
                    .map(|&w| block.iter().fold(BigRational::one(), |acc, &v| acc * &vars[v][w])),
                support.len(),
            );
            prod *= m;
        }
        total += prod;
    }
    Ok(total)
}

/// Cum(W₁, …, W_l) under the uniform law on all outcomes.
pub fn joint_cumulant(vars: &[FiniteVar]) -> Result<BigRational> {
    let outcomes = vars.first().map_or(1, |v| v.len());
    let all: Vec<usize> = (0..outcomes).collect();
    cumulant_on(vars, &all)
}

/// Cum(W₁, …, W_l | Z) as a variable; `z[w]` is the value of Z on outcome w.
pub fn conditional_cumulant(vars: &[FiniteVar], z: &[usize]) -> Result<FiniteVar> {
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (w, &v) in z.iter().enumerate() {
        classes.entry(v).or_default().push(w);
    }
    let mut out = vec![BigRational::zero(); z.len()];
    for members in classes.values() {
        let c = cumulant_on(vars, members)?;
        for &w in members {
            out[w] = c.clone();
        }
    }
    Ok(out)
}

/// Σ_π Cum(Cum(W_R | Z) : R ∈ π), which equals the unconditional cumulant.
pub fn total_cumulance(vars: &[FiniteVar], z: &[usize]) -> Result<BigRational> {
    let mut total = BigRational::zero();
    for pi in enumerate_set_partitions(vars.len())? {
        let inner = pi
            .blocks
            .iter()
            .map(|block| {
                let sub: Vec<FiniteVar> = block.iter().map(|&v| vars[v].clone()).collect();
                conditional_cumulant(&sub, z)
            })
            .collect::<Result<Vec<_>>>()?;
        total += joint_cumulant(&inner)?;
    }
    Ok(total)
}

/// All label vectors in [K]^m, first coordinate fastest.
pub fn label_space(k: usize, m: usize) -> Vec<Vec<usize>> {
    let count = k.pow(m as u32);
    (0..count)
        .map(|mut c| {
            (0..m)
                .map(|_| {
                    let v = c % k;
                    c /= k;
                    v
                })
                .collect()
        })
        .collect()
}

/// The indicators 𝟙{k_a = k_b} for each pair, as variables on [K]^m.
pub fn indicator_vars(k: usize, pairs: &[(usize, usize)]) -> Vec<FiniteVar> {
    let m = pairs.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
    let space = label_space(k, m);
    pairs
        .iter()
        .map(|&(a, b)| {
            space
                .iter()
                .map(|lab| BigRational::from_integer(BigInt::from(u8::from(lab[a] == lab[b]))))
                .collect()
        })
        .collect()
}

/// Joint cumulant of label-equality indicators under uniform labels.
pub fn indicator_cumulant(k: usize, pairs: &[(usize, usize)]) -> Result<BigRational> {
    joint_cumulant(&indicator_vars(k, pairs))
}
