use nalgebra::DMatrix;

use super::{check_points, sq_dist};
use crate::error::Result;
use crate::model::Partition;

/// Agglomerative single linkage down to exactly `k` groups. Each step merges
/// the closest pair of groups, lowest (a, b) on ties; group `b` folds into `a`.
/// Labels follow the surviving group order.
pub fn single_linkage(points: &DMatrix<f64>, k: usize) -> Result<Partition> {
    check_points(points, k)?;
    let n = points.nrows();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| sq_dist(points, i, points, j)).collect())
        .collect();
    while members.len() > k {
        let m = members.len();
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..m {
            for b in a + 1..m {
                if dist[a][b] < best.2 {
                    best = (a, b, dist[a][b]);
                }
            }
        }
        let (a, b, _) = best;
        for c in 0..m {
            let v = dist[a][c].min(dist[b][c]);
            dist[a][c] = v;
            dist[c][a] = v;
        }
        dist[a][a] = 0.0;
        dist.remove(b);
        for row in dist.iter_mut() {
            row.remove(b);
        }
        let moved = members.remove(b);
        members[a].extend(moved);
    }
    Partition::from_groups(n, &members)
}

/// Minimum spanning tree with its `k − 1` heaviest edges removed, as a
/// partition labelled by smallest member. Oracle for [`single_linkage`].
pub fn mst_cut(points: &DMatrix<f64>, k: usize) -> Result<Partition> {
    check_points(points, k)?;
    let n = points.nrows();
    // Prim's algorithm on the complete graph
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, usize::MAX); n];
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n - 1);
    best[0] = (0.0, usize::MAX);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0))
            .expect("vertex left");
        in_tree[v] = true;
        if best[v].1 != usize::MAX {
            edges.push((best[v].0, best[v].1, v));
        }
        for u in 0..n {
            let d = sq_dist(points, v, points, u);
            if !in_tree[u] && d < best[u].0 {
                best[u] = (d, v);
            }
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0));
    edges.truncate(n - k);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(_, a, b) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(Partition::from_labels(roots, n)?.canonical())
}
