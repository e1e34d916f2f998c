use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::HashMap;

use super::exact::ExactScalar;
pub use super::moments::CumulantModel;
use super::moments::{conditioned_moment, mixed_moment, MAX_TOUCHED};
use super::multi_index::MultiIndex;
use super::pairing::pairings_with_multiplicity;
use super::partition::{enumerate_set_partitions, SetPartition};
use super::Cell;
use crate::error::{param, resource, Result};
use crate::model::ModelSpec;

/// Largest |α| + x accepted by the Möbius route.
pub const MAX_BRUTE_POSITIONS: usize = 9;
/// Largest |α| accepted by the conditioned route.
pub const MAX_CONDITIONED_TOTAL: u32 = 8;

/// (−1)^{b−1}(b−1)! for a partition with b blocks.
pub fn standard_mobius(blocks: usize) -> i64 {
    let f: i64 = (1..blocks as i64).product();
    if blocks % 2 == 1 {
        f
    } else {
        -f
    }
}

/// Exact cumulant evaluator with memoized moments. Not `Sync`; use one per thread.
pub struct CumulantEngine {
    model: CumulantModel,
    mobius: fn(usize) -> i64,
    moments: HashMap<(bool, Vec<Cell>), BigRational>,
    cond_moments: HashMap<(bool, Vec<[Cell; 2]>), BigRational>,
    cond_cumulants: HashMap<Vec<[Cell; 2]>, BigRational>,
    lattices: Vec<Vec<SetPartition>>,
}

impl CumulantEngine {
    pub fn new(spec: &ModelSpec) -> Self {
        Self::from_model(CumulantModel::from_spec(spec))
    }

    pub fn from_model(model: CumulantModel) -> Self {
        CumulantEngine {
            model,
            mobius: standard_mobius,
            moments: HashMap::new(),
            cond_moments: HashMap::new(),
            cond_cumulants: HashMap::new(),
            lattices: Vec::new(),
        }
    }

    /// Replaces the Möbius function of the brute-force route (fault injection).
    pub fn with_mobius(mut self, mobius: fn(usize) -> i64) -> Self {
        self.mobius = mobius;
        self
    }

    pub fn model(&self) -> &CumulantModel {
        &self.model
    }

    fn moment(&mut self, x_flag: bool, mut cells: Vec<Cell>) -> Result<BigRational> {
        cells.sort_unstable();
        let key = (x_flag, cells);
        if let Some(v) = self.moments.get(&key) {
            return Ok(v.clone());
        }
        let v = mixed_moment(&self.model, key.0, &key.1)?;
        self.moments.insert(key, v.clone());
        Ok(v)
    }

    fn lattice(&mut self, size: usize) -> Result<&[SetPartition]> {
        while self.lattices.len() <= size {
            let next = enumerate_set_partitions(self.lattices.len())?;
            self.lattices.push(next);
        }
        Ok(&self.lattices[size])
    }

    /// Moments of every nonempty sub-family of positions, indexed by bitmask.
    fn block_moments(&mut self, cells: &[Cell], x_flag: bool) -> Result<Vec<BigRational>> {
        let m = cells.len() + usize::from(x_flag);
        let x_pos = cells.len();
        let mut out = vec![BigRational::zero(); 1 << m];
        for mask in 1u32..(1 << m) {
            let sub: Vec<Cell> = (0..cells.len())
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| cells[i])
                .collect();
            let has_x = x_flag && mask >> x_pos & 1 == 1;
            out[mask as usize] = self.moment(has_x, sub)?;
        }
        Ok(out)
    }

    fn check_brute(&self, x_flag: bool, alpha: &MultiIndex) -> Result<usize> {
        let m = alpha.total() as usize + usize::from(x_flag);
        if m == 0 {
            return param("cumulant of an empty family");
        }
        if m > MAX_BRUTE_POSITIONS {
            return resource(format!(
                "|α|+x = {m} exceeds the lattice guard of {MAX_BRUTE_POSITIONS}"
            ));
        }
        Ok(m)
    }

    /// κ = Σ_{π ∈ 𝒫(α ∪ {x})} m(π) Π_{R∈π} E[Π_{c∈R} X_c], positions distinguishable.
    ///
    /// Partitions are walked block by block (least free position first) and any
    /// block whose moment is zero prunes its whole subtree.
    pub fn bruteforce(&mut self, x_flag: bool, alpha: &MultiIndex) -> Result<ExactScalar> {
        let m = self.check_brute(x_flag, alpha)?;
        let cells = alpha.cells();
        let moments = self.block_moments(&cells, x_flag)?;
        let mut by_blocks = vec![BigRational::zero(); m + 1];
        fn walk(rem: u32, blocks: usize, acc: &BigRational, mom: &[BigRational], sums: &mut [BigRational]) {
            if rem == 0 {
                sums[blocks] += acc;
                return;
            }
            let low = rem & rem.wrapping_neg();
            let rest = rem ^ low;
            let mut sub = rest;
            loop {
                let block = sub | low;
                let v = &mom[block as usize];
                if !v.is_zero() {
                    walk(rem ^ block, blocks + 1, &(acc * v), mom, sums);
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
        let one = BigRational::from_integer(1.into());
        walk((1u32 << m) - 1, 0, &one, &moments, &mut by_blocks);
        let mut coeff = BigRational::zero();
        for (b, s) in by_blocks.iter().enumerate().skip(1) {
            if !s.is_zero() {
                coeff += s * BigRational::from_integer(BigInt::from((self.mobius)(b)));
            }
        }
        Ok(ExactScalar::new(coeff, alpha.total()))
    }

    /// Same sum as [`bruteforce`](Self::bruteforce), evaluated partition by partition
    /// from [`enumerate_set_partitions`] without pruning. Slow; kept as a cross-check.
    pub fn bruteforce_literal(&mut self, x_flag: bool, alpha: &MultiIndex) -> Result<ExactScalar> {
        let m = self.check_brute(x_flag, alpha)?;
        let cells = alpha.cells();
        let moments = self.block_moments(&cells, x_flag)?;
        let mobius = self.mobius;
        let mut coeff = BigRational::zero();
        for pi in self.lattice(m)? {
            let mut prod = BigRational::from_integer(mobius(pi.len()).into());
            for mask in pi.masks() {
                prod *= &moments[mask as usize];
                if prod.is_zero() {
                    break;
                }
            }
            coeff += prod;
        }
        Ok(ExactScalar::new(coeff, alpha.total()))
    }

    fn conditioned_moment_cached(&mut self, x_flag: bool, mut pairs: Vec<[Cell; 2]>) -> Result<BigRational> {
        pairs.sort_unstable();
        let key = (x_flag, pairs);
        if let Some(v) = self.cond_moments.get(&key) {
            return Ok(v.clone());
        }
        let v = conditioned_moment(&self.model, key.0, &key.1)?;
        self.cond_moments.insert(key, v.clone());
        Ok(v)
    }

    /// C_{x,β₁…β_l}: joint cumulant of x and the W_s = δ^{β_s}𝟙_{Ω_{β_s}}.
    fn pair_cumulant(&mut self, pairs: &[[Cell; 2]]) -> Result<BigRational> {
        if let Some(v) = self.cond_cumulants.get(pairs) {
            return Ok(v.clone());
        }
        let l = pairs.len();
        // variable 0 is x, variable s ≥ 1 is W_s
        let lattice = self.lattice(l + 1)?.to_vec();
        let mut total = BigRational::zero();
        for pi in &lattice {
            let mut prod = BigRational::from_integer(standard_mobius(pi.len()).into());
            for block in &pi.blocks {
                let has_x = block.contains(&0);
                let sub: Vec<[Cell; 2]> = block.iter().filter(|&&v| v > 0).map(|&v| pairs[v - 1]).collect();
                prod *= self.conditioned_moment_cached(has_x, sub)?;
                if prod.is_zero() {
                    break;
                }
            }
            total += prod;
        }
        self.cond_cumulants.insert(pairs.to_vec(), total.clone());
        Ok(total)
    }

    /// κ_{x,α} = λ^{|α|} Σ_{π ∈ 𝒫₂(α)} C_{x,β₁(π),…,β_l(π)}.
    ///
    /// Positions of α are distinguishable, so a multiset pairing is weighted by
    /// the number of position matchings that produce it.
    pub fn conditioned(&mut self, alpha: &MultiIndex) -> Result<ExactScalar> {
        let total = alpha.total();
        if total > MAX_CONDITIONED_TOTAL {
            return resource(format!(
                "|α| = {total} exceeds the conditioned guard of {MAX_CONDITIONED_TOTAL}"
            ));
        }
        if alpha.num_rows() > MAX_TOUCHED || alpha.num_cols() > MAX_TOUCHED {
            return resource("α touches more than 6 rows or columns");
        }
        if total % 2 == 1 {
            return Ok(ExactScalar::zero(total));
        }
        let mut coeff = BigRational::zero();
        for (pairs, mult) in pairings_with_multiplicity(alpha)? {
            let c = self.pair_cumulant(&pairs)?;
            if !c.is_zero() {
                coeff += c * BigRational::from_integer(BigInt::from(mult));
            }
        }
        Ok(ExactScalar::new(coeff, total))
    }
}

/// Möbius-inversion cumulant of (x, X_α) (or of X_α alone when `x_flag` is false).
pub fn cumulant_bruteforce(spec: &ModelSpec, x_flag: bool, alpha: &MultiIndex) -> Result<ExactScalar> {
    CumulantEngine::new(spec).bruteforce(x_flag, alpha)
}

/// Pairing-decomposition cumulant κ_{x,α}.
pub fn cumulant_conditioned(spec: &ModelSpec, alpha: &MultiIndex) -> Result<ExactScalar> {
    CumulantEngine::new(spec).conditioned(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn mi(rows: &[&[u32]]) -> MultiIndex {
        MultiIndex::from_rows(rows).unwrap()
    }

    #[test]
    fn cum_x_alone() {
        for k in 2..5 {
            let spec = ModelSpec::clustering(2, 1, k);
            let z = MultiIndex::zeros(2, 1);
            let want = ExactScalar::from_ratio(1, k as i64, 0);
            assert_eq!(cumulant_bruteforce(&spec, true, &z).unwrap(), want);
            assert_eq!(cumulant_conditioned(&spec, &z).unwrap(), want);
        }
    }

    #[test]
    fn single_cell_vanishes() {
        let spec = ModelSpec::clustering(2, 1, 2);
        assert!(cumulant_bruteforce(&spec, true, &mi(&[&[1], &[0]])).unwrap().is_zero());
    }

    #[test]
    fn two_row_example() {
        for k in 2..4i64 {
            let spec = ModelSpec::clustering(2, 1, k as usize);
            let a = mi(&[&[1], &[1]]);
            let want = ExactScalar::new(
                BigRational::new(1.into(), k.into()) - BigRational::new(1.into(), (k * k).into()),
                2,
            );
            assert_eq!(cumulant_bruteforce(&spec, true, &a).unwrap(), want);
            assert_eq!(cumulant_conditioned(&spec, &a).unwrap(), want);
        }
    }

    #[test]
    fn pruned_walk_equals_literal_sum() {
        let specs = [
            ModelSpec::clustering(3, 2, 2),
            ModelSpec::sparse(3, 2, 2, Rational64::new(1, 3)),
            ModelSpec::biclustering(3, 2, 3, 2),
        ];
        for spec in &specs {
            let mut e = CumulantEngine::new(spec);
            for alpha in MultiIndex::all_up_to(3, 2, 4) {
                assert_eq!(
                    e.bruteforce(true, &alpha).unwrap(),
                    e.bruteforce_literal(true, &alpha).unwrap()
                );
                assert_eq!(
                    e.bruteforce(false, &alpha).unwrap(),
                    e.bruteforce_literal(false, &alpha).unwrap()
                );
            }
        }
    }

    #[test]
    fn multiplicity_matters() {
        // The pairing {(11,21),(11,21)} is produced by two position matchings.
        let spec = ModelSpec::clustering(2, 1, 3);
        let a = mi(&[&[2], &[2]]);
        assert_eq!(
            cumulant_conditioned(&spec, &a).unwrap(),
            cumulant_bruteforce(&spec, true, &a).unwrap()
        );
        assert!(!cumulant_bruteforce(&spec, true, &a).unwrap().is_zero());
    }

    #[test]
    fn x_free_second_cumulant_is_variance() {
        // Cum(X11, X11) = E[ν²] = λ²
        let spec = ModelSpec::clustering(2, 1, 3);
        assert_eq!(
            cumulant_bruteforce(&spec, false, &mi(&[&[2], &[0]])).unwrap(),
            ExactScalar::from_ratio(1, 1, 2)
        );
    }

    #[test]
    fn guards() {
        let spec = ModelSpec::clustering(2, 1, 2);
        assert!(cumulant_bruteforce(&spec, true, &mi(&[&[5], &[4]])).is_err());
        assert!(cumulant_bruteforce(&spec, false, &MultiIndex::zeros(2, 1)).is_err());
        assert!(cumulant_conditioned(&spec, &mi(&[&[6], &[4]])).is_err());
        assert!(cumulant_conditioned(&spec, &mi(&[&[2], &[1]])).unwrap().is_zero());
    }

    #[test]
    fn fault_injection_changes_result() {
        let spec = ModelSpec::clustering(2, 1, 2);
        let a = mi(&[&[1], &[1]]);
        let mut bad = CumulantEngine::new(&spec).with_mobius(|b| -standard_mobius(b));
        assert_ne!(
            bad.bruteforce(true, &a).unwrap(),
            cumulant_conditioned(&spec, &a).unwrap()
        );
    }
}
