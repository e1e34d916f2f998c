use num_bigint::BigUint;
use num_traits::One;
use std::fmt;

use super::Cell;
use crate::error::{param, Result};

/// A nonnegative integer n×p matrix α, read as a multiset of cells.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    n: usize,
    p: usize,
    data: Vec<u32>,
}

impl MultiIndex {
    pub fn zeros(n: usize, p: usize) -> Self {
        MultiIndex {
            n,
            p,
            data: vec![0; n * p],
        }
    }

    pub fn from_rows(rows: &[&[u32]]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != p) {
            return param("ragged rows in multi-index");
        }
        Ok(MultiIndex {
            n,
            p,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        })
    }

    /// Builds α from cells, counting repeats.
    pub fn from_cells(n: usize, p: usize, cells: &[Cell]) -> Result<Self> {
        let mut a = Self::zeros(n, p);
        for &(i, j) in cells {
            if i >= n || j >= p {
                return param(format!("cell ({i},{j}) outside {n}x{p}"));
            }
            a.data[i * p + j] += 1;
        }
        Ok(a)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.p + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.p + j] = v;
    }

    /// |α| = Σ α_ij.
    pub fn total(&self) -> u32 {
        self.data.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn row_mass(&self, i: usize) -> u32 {
        (0..self.p).map(|j| self.get(i, j)).sum()
    }

    pub fn col_mass(&self, j: usize) -> u32 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    pub fn support_rows(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.row_mass(i) > 0).collect()
    }

    pub fn support_cols(&self) -> Vec<usize> {
        (0..self.p).filter(|&j| self.col_mass(j) > 0).collect()
    }

    /// #α.
    pub fn num_rows(&self) -> usize {
        self.support_rows().len()
    }

    /// r_α.
    pub fn num_cols(&self) -> usize {
        self.support_cols().len()
    }

    /// α! = Π α_ij!.
    pub fn factorial(&self) -> BigUint {
        let mut acc = BigUint::one();
        for &v in &self.data {
            for t in 2..=v {
                acc *= BigUint::from(t);
            }
        }
        acc
    }

    /// Cells with repetition, row-major.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.total() as usize);
        for i in 0..self.n {
            for j in 0..self.p {
                for _ in 0..self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!((self.n, self.p), (other.n, other.p));
        MultiIndex {
            n: self.n,
            p: self.p,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// Rows reordered: new row `i` is old row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> MultiIndex {
        let mut out = Self::zeros(self.n, self.p);
        for (i, &src) in perm.iter().enumerate() {
            for j in 0..self.p {
                out.set(i, j, self.get(src, j));
            }
        }
        out
    }

    pub fn permute_cols(&self, perm: &[usize]) -> MultiIndex {
        let mut out = Self::zeros(self.n, self.p);
        for i in 0..self.n {
            for (j, &src) in perm.iter().enumerate() {
                out.set(i, j, self.get(i, src));
            }
        }
        out
    }

    /// All α ∈ ℕ^{n×p} with |α| = d, in lexicographic order of the flat entries.
    pub fn all_with_total(n: usize, p: usize, d: u32) -> Vec<MultiIndex> {
        let cells = n * p;
        let mut out = Vec::new();
        let mut cur = vec![0u32; cells];
        fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if pos + 1 == cur.len() {
                cur[pos] = left;
                out.push(cur.clone());
                cur[pos] = 0;
                return;
            }
            for v in (0..=left).rev() {
                cur[pos] = v;
                rec(pos + 1, left - v, cur, out);
            }
            cur[pos] = 0;
        }
        if cells == 0 {
            return out;
        }
        let mut raw = Vec::new();
        rec(0, d, &mut cur, &mut raw);
        for data in raw {
            out.push(MultiIndex { n, p, data });
        }
        out
    }

    /// All α with 1 ≤ |α| ≤ d.
    pub fn all_up_to(n: usize, p: usize, d: u32) -> Vec<MultiIndex> {
        (1..=d).flat_map(|t| Self::all_with_total(n, p, t)).collect()
    }

    /// The bipartite multigraph 𝒢_α.
    pub fn graph(&self) -> AlphaGraph {
        AlphaGraph::new(self)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.n {
            if i > 0 {
                write!(f, ";")?;
            }
            let row: Vec<String> = (0..self.p).map(|j| self.get(i, j).to_string()).collect();
            write!(f, "{}", row.join(","))?;
        }
        write!(f, "]")
    }
}

/// Bipartite multigraph with row nodes u_i, column nodes v_j and α_ij parallel edges.
#[derive(Clone, Debug)]
pub struct AlphaGraph {
    pub row_degree: Vec<u32>,
    pub col_degree: Vec<u32>,
    edges: Vec<(usize, usize, u32)>,
}

impl AlphaGraph {
    fn new(a: &MultiIndex) -> Self {
        let mut edges = Vec::new();
        for i in 0..a.n() {
            for j in 0..a.p() {
                if a.get(i, j) > 0 {
                    edges.push((i, j, a.get(i, j)));
                }
            }
        }
        AlphaGraph {
            row_degree: (0..a.n()).map(|i| a.row_mass(i)).collect(),
            col_degree: (0..a.p()).map(|j| a.col_mass(j)).collect(),
            edges,
        }
    }

    /// Whether 𝒢_α^- plus the optional extra row-row edges is connected.
    /// Node ids: rows 0..n, columns n..n+p.
    pub fn connected_with(&self, extra_row_edges: &[(usize, usize)]) -> bool {
        let n = self.row_degree.len();
        let p = self.col_degree.len();
        let mut parent: Vec<usize> = (0..n + p).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut unite = |a: usize, b: usize| {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        };
        for &(i, j, _) in &self.edges {
            unite(i, n + j);
        }
        for &(a, b) in extra_row_edges {
            unite(a, b);
        }
        let mut nodes: Vec<usize> = (0..n).filter(|&i| self.row_degree[i] > 0).collect();
        nodes.extend((0..p).filter(|&j| self.col_degree[j] > 0).map(|j| n + j));
        for &(a, b) in extra_row_edges {
            nodes.push(a);
            nodes.push(b);
        }
        let Some(&first) = nodes.first() else {
            return true;
        };
        let root = find(&mut parent, first);
        nodes.iter().all(|&v| find(&mut parent, v) == root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_statistics() {
        let a = MultiIndex::from_rows(&[&[1, 0, 2], &[0, 0, 0], &[3, 0, 0]]).unwrap();
        assert_eq!(a.total(), 6);
        assert_eq!(a.num_rows(), 2);
        assert_eq!(a.num_cols(), 2);
        assert_eq!(a.factorial(), BigUint::from(12u32));
        assert_eq!(a.cells(), vec![(0, 0), (0, 2), (0, 2), (2, 0), (2, 0), (2, 0)]);
        assert_eq!(MultiIndex::from_cells(3, 3, &a.cells()).unwrap(), a);
        assert_eq!(a.to_string(), "[1,0,2;0,0,0;3,0,0]");
    }

    #[test]
    fn enumeration_counts() {
        // Multisets of size d from c cells: C(c+d-1, d).
        assert_eq!(MultiIndex::all_with_total(2, 2, 3).len(), 20);
        assert_eq!(MultiIndex::all_with_total(4, 3, 6).len(), 12376);
        assert_eq!(MultiIndex::all_up_to(2, 1, 2).len(), 5);
    }

    #[test]
    fn graph_connectivity() {
        let a = MultiIndex::from_rows(&[&[1, 0], &[0, 1]]).unwrap();
        let g = a.graph();
        assert!(!g.connected_with(&[]));
        assert!(g.connected_with(&[(0, 1)]));
        assert_eq!(g.row_degree, vec![1, 1]);
    }
}
