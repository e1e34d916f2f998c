use std::collections::BTreeMap;

use super::multi_index::MultiIndex;
use super::Cell;
use crate::error::{resource, Result};

/// Largest |α| accepted by [`enumerate_pairings`].
pub const MAX_PAIRING_TOTAL: u32 = 12;

/// β₁, …, β_l with |β_s| = 2 and Σ β_s = α.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingDecomposition {
    pub betas: Vec<MultiIndex>,
}

impl PairingDecomposition {
    pub fn sum(&self) -> Option<MultiIndex> {
        let mut it = self.betas.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, b| acc.add(b)))
    }
}

/// Distinct multiset pairings of α, each with the number of position-level
/// perfect matchings that collapse onto it. Sorted by canonical form.
pub fn pairings_with_multiplicity(alpha: &MultiIndex) -> Result<Vec<(Vec<[Cell; 2]>, u64)>> {
    let total = alpha.total();
    if total > MAX_PAIRING_TOTAL {
        return resource(format!(
            "pairings of |α|={total} exceed the guard of {MAX_PAIRING_TOTAL}"
        ));
    }
    if total % 2 == 1 {
        return Ok(Vec::new());
    }
    let cells = alpha.cells();
    let mut counts: BTreeMap<Vec<[Cell; 2]>, u64> = BTreeMap::new();
    let mut used = vec![false; cells.len()];
    let mut cur = Vec::with_capacity(cells.len() / 2);
    fn rec(cells: &[Cell], used: &mut [bool], cur: &mut Vec<[Cell; 2]>, counts: &mut BTreeMap<Vec<[Cell; 2]>, u64>) {
        let Some(first) = used.iter().position(|&u| !u) else {
            let mut key = cur.clone();
            key.sort_unstable();
            *counts.entry(key).or_insert(0) += 1;
            return;
        };
        used[first] = true;
        for other in first + 1..cells.len() {
            if used[other] {
                continue;
            }
            used[other] = true;
            cur.push([cells[first], cells[other]]);
            rec(cells, used, cur, counts);
            cur.pop();
            used[other] = false;
        }
        used[first] = false;
    }
    rec(&cells, &mut used, &mut cur, &mut counts);
    Ok(counts.into_iter().collect())
}

/// All unordered pairings of the multiset α, each once. Odd |α| gives none.
pub fn enumerate_pairings(alpha: &MultiIndex) -> Result<Vec<PairingDecomposition>> {
    let (n, p) = (alpha.n(), alpha.p());
    pairings_with_multiplicity(alpha)?
        .into_iter()
        .map(|(pairs, _)| {
            let betas = pairs
                .iter()
                .map(|pair| MultiIndex::from_cells(n, p, pair))
                .collect::<Result<Vec<_>>>()?;
            Ok(PairingDecomposition { betas })
        })
        .collect()
}
