use num_bigint::BigUint;
use num_traits::One;

use crate::error::{resource, Result};

/// Largest ground set accepted by [`enumerate_set_partitions`] (B₁₀ = 115975).
pub const MAX_PARTITION_GROUND: usize = 10;

/// A set partition of {0, …, m−1}; blocks are sorted, and ordered by their least element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SetPartition {
    pub blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Blocks as bitmasks over the ground set.
    pub fn masks(&self) -> Vec<u32> {
        self.blocks
            .iter()
            .map(|b| b.iter().fold(0u32, |m, &i| m | (1 << i)))
            .collect()
    }
}

/// Every partition of an m-element set, once each, in restricted-growth-string order.
pub fn enumerate_set_partitions(ground_size: usize) -> Result<Vec<SetPartition>> {
    if ground_size > MAX_PARTITION_GROUND {
        return resource(format!(
            "set partitions of {ground_size} elements exceed the guard of {MAX_PARTITION_GROUND}"
        ));
    }
    let mut out = Vec::new();
    if ground_size == 0 {
        out.push(SetPartition { blocks: Vec::new() });
        return Ok(out);
    }
    let mut rgs = vec![0usize; ground_size];
    fn rec(pos: usize, max_label: usize, rgs: &mut [usize], out: &mut Vec<SetPartition>) {
        if pos == rgs.len() {
            let mut blocks = vec![Vec::new(); max_label + 1];
            for (i, &b) in rgs.iter().enumerate() {
                blocks[b].push(i);
            }
            out.push(SetPartition { blocks });
            return;
        }
        for b in 0..=max_label + 1 {
            rgs[pos] = b;
            rec(pos + 1, max_label.max(b), rgs, out);
        }
    }
    rec(1, 0, &mut rgs, &mut out);
    Ok(out)
}

/// m(π) = (−1)^{|π|−1}(|π|−1)!.
pub fn mobius_coefficient(pi: &SetPartition) -> i64 {
    super::engine::standard_mobius(pi.len())
}

/// Bell number B_m.
pub fn bell_number(m: usize) -> BigUint {
    // Bell triangle.
    let mut row = vec![BigUint::one()];
    for _ in 0..m {
        let mut next = vec![row.last().cloned().unwrap_or_else(BigUint::one)];
        for v in &row {
            let add = next.last().unwrap() + v;
            next.push(add);
        }
        row = next;
    }
    row[0].clone()
}

/// Ordered Bell (Fubini) number f_l, for l ≤ 12.
pub fn fubini_number(l: usize) -> Result<u64> {
    if l > 12 {
        return resource(format!("Fubini number requested for l={l} > 12"));
    }
    let mut f = vec![1u64; l + 1];
    for m in 1..=l {
        let mut binom = 1u64;
        let mut acc = 0u64;
        for k in 1..=m {
            binom = binom * (m - k + 1) as u64 / k as u64;
            acc += binom * f[m - k];
        }
        f[m] = acc;
    }
    Ok(f[l])
}

/// 3·l!·2^l.
pub fn fubini_bound(l: usize) -> u64 {
    let fact: u64 = (1..=l as u64).product();
    3 * fact * (1u64 << l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    use num_traits::ToPrimitive;

    fn bell_u64(m: usize) -> u64 {
        bell_number(m).to_u64().unwrap()
    }

    #[test]
    fn bell_counts() {
        for (m, b) in [(0, 1), (1, 1), (3, 5), (5, 52), (7, 877)] {
            assert_eq!(enumerate_set_partitions(m).unwrap().len(), b);
            assert_eq!(bell_u64(m), b as u64);
        }
        assert_eq!(bell_u64(10), 115_975);
        assert!(enumerate_set_partitions(11).is_err());
    }

    #[test]
    fn partitions_are_distinct_and_valid() {
        let all = enumerate_set_partitions(6).unwrap();
        let set: HashSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), all.len());
        for p in &all {
            let mut seen: Vec<usize> = p.blocks.concat();
            seen.sort_unstable();
            assert_eq!(seen, (0..6).collect::<Vec<_>>());
            assert!(p.blocks.iter().all(|b| !b.is_empty()));
        }
    }

    #[test]
    fn mobius_values() {
        let part = |k: usize| SetPartition {
            blocks: (0..k).map(|i| vec![i]).collect(),
        };
        assert_eq!(mobius_coefficient(&part(1)), 1);
        assert_eq!(mobius_coefficient(&part(2)), -1);
        assert_eq!(mobius_coefficient(&part(3)), 2);
        assert_eq!(mobius_coefficient(&part(4)), -6);
    }

    #[test]
    fn fubini_values_and_bound() {
        assert_eq!(fubini_number(0).unwrap(), 1);
        assert_eq!(fubini_number(1).unwrap(), 1);
        assert_eq!(fubini_number(2).unwrap(), 3);
        assert_eq!(fubini_number(3).unwrap(), 13);
        assert_eq!(fubini_number(4).unwrap(), 75);
        assert_eq!(fubini_bound(3), 144);
        for l in 1..=12 {
            assert!(fubini_number(l).unwrap() <= fubini_bound(l));
        }
        assert!(fubini_number(13).is_err());
    }

    #[test]
    fn fubini_counts_ordered_partitions() {
        // f_l = Σ_π |π|!
        for l in 1..=6 {
            let s: u64 = enumerate_set_partitions(l)
                .unwrap()
                .iter()
                .map(|p| (1..=p.len() as u64).product::<u64>())
                .sum();
            assert_eq!(s, fubini_number(l).unwrap());
        }
    }
}
