use nalgebra::DMatrix;
use rand::Rng;

use super::{check_points, sq_dist};
use crate::error::{resource, Result};
use crate::metrics::group_means;
use crate::model::{Partition, PartitionPair};
use crate::rng::{derive_seed, rng_from_seed};

const MAX_LLOYD_ITERS: usize = 500;

/// Number of set partitions of [n] into at most k groups (saturating).
pub fn partitions_up_to_k(n: usize, k: usize) -> u128 {
    // S(i, j) row by row
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for _ in 0..n {
        let mut next = vec![0u128; k + 1];
        for j in 1..=k {
            next[j] = (j as u128).saturating_mul(row[j]).saturating_add(row[j - 1]);
        }
        row = next;
    }
    row[1..].iter().fold(0u128, |a, &b| a.saturating_add(b))
}

/// Σ_g ‖Σ_{i∈G_g} y_i‖²/|G_g|, i.e. ⟨YYᵀ, B^G⟩.
pub fn kmeans_score(y: &DMatrix<f64>, part: &Partition) -> f64 {
    let sizes = part.sizes();
    let means = group_means(y, part);
    (0..part.k())
        .filter(|&g| sizes[g] > 0)
        .map(|g| sizes[g] as f64 * means.row(g).norm_squared())
        .sum()
}

/// Within-group sum of squares Σ_i ‖y_i − μ_{g(i)}‖².
pub fn kmeans_objective(y: &DMatrix<f64>, part: &Partition) -> f64 {
    let means = group_means(y, part);
    (0..y.nrows()).map(|i| sq_dist(y, i, &means, part.label(i))).sum()
}

/// Global k-means minimizer over all partitions into at most `k` groups.
pub fn exact_kmeans(y: &DMatrix<f64>, k: usize, guard: u64) -> Result<PartitionPair> {
    check_points(y, k)?;
    let (n, p) = y.shape();
    let count = partitions_up_to_k(n, k);
    if count > u128::from(guard) {
        return resource(format!(
            "{count} partitions of {n} points into <= {k} groups exceed the guard {guard}; use lloyd_multi"
        ));
    }
    struct Search<'a> {
        y: &'a DMatrix<f64>,
        k: usize,
        sums: DMatrix<f64>,
        sizes: Vec<usize>,
        labels: Vec<usize>,
        best: f64,
        best_labels: Vec<usize>,
    }
    impl Search<'_> {
        fn walk(&mut self, i: usize, used: usize) {
            if i == self.labels.len() {
                let score: f64 = (0..used)
                    .map(|g| self.sums.row(g).norm_squared() / self.sizes[g] as f64)
                    .sum();
                if score > self.best {
                    self.best = score;
                    self.best_labels.clone_from(&self.labels);
                }
                return;
            }
            let top = if used < self.k { used + 1 } else { used };
            for g in 0..top {
                self.labels[i] = g;
                self.sizes[g] += 1;
                for c in 0..self.y.ncols() {
                    self.sums[(g, c)] += self.y[(i, c)];
                }
                self.walk(i + 1, used.max(g + 1));
                for c in 0..self.y.ncols() {
                    self.sums[(g, c)] -= self.y[(i, c)];
                }
                self.sizes[g] -= 1;
            }
        }
    }
    let mut s = Search {
        y,
        k,
        sums: DMatrix::zeros(k, p),
        sizes: vec![0; k],
        labels: vec![0; n],
        best: f64::NEG_INFINITY,
        best_labels: vec![0; n],
    };
    s.walk(0, 0);
    Ok(PartitionPair::rows_only(Partition::from_labels(s.best_labels, k)?))
}

/// Result of one Lloyd run; `trace` holds the objective after every mean update.
#[derive(Clone, Debug, PartialEq)]
pub struct LloydRun {
    pub partition: Partition,
    pub objective: f64,
    pub trace: Vec<f64>,
}

fn nearest(y: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for g in 0..centers.nrows() {
        let d = sq_dist(y, i, centers, g);
        if d < best.1 {
            best = (g, d);
        }
    }
    best
}

/// Moves the point farthest from its own center into each empty group.
fn repair_empty(y: &DMatrix<f64>, labels: &mut [usize], k: usize) -> DMatrix<f64> {
    loop {
        let part = Partition::from_labels_unchecked(labels.to_vec(), k);
        let means = group_means(y, &part);
        let sizes = part.sizes();
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return means;
        };
        let mut pick = (usize::MAX, f64::NEG_INFINITY);
        for i in 0..y.nrows() {
            if sizes[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(y, i, &means, labels[i]);
            if d > pick.1 {
                pick = (i, d);
            }
        }
        labels[pick.0] = empty;
    }
}

/// Single-point moves that strictly lower the objective once means are
/// updated: i leaves A for B when |A|/(|A|−1)·‖y−μ_A‖² > |B|/(|B|+1)·‖y−μ_B‖².
fn hartigan_pass(y: &DMatrix<f64>, labels: &mut [usize], k: usize) -> bool {
    let part = Partition::from_labels_unchecked(labels.to_vec(), k);
    let mut means = group_means(y, &part);
    let mut sizes = part.sizes();
    let mut moved = false;
    for i in 0..y.nrows() {
        let a = labels[i];
        if sizes[a] < 2 {
            continue;
        }
        let ma = sizes[a] as f64;
        let leave = ma / (ma - 1.0) * sq_dist(y, i, &means, a);
        let mut best = (a, leave * (1.0 - 1e-12));
        for b in (0..k).filter(|&b| b != a) {
            let mb = sizes[b] as f64;
            let join = mb / (mb + 1.0) * sq_dist(y, i, &means, b);
            if join < best.1 {
                best = (b, join);
            }
        }
        let b = best.0;
        if b == a {
            continue;
        }
        for c in 0..y.ncols() {
            let v = y[(i, c)];
            means[(a, c)] = (means[(a, c)] * ma - v) / (ma - 1.0);
            let mb = sizes[b] as f64;
            means[(b, c)] = (means[(b, c)] * mb + v) / (mb + 1.0);
        }
        sizes[a] -= 1;
        sizes[b] += 1;
        labels[i] = b;
        moved = true;
    }
    moved
}

/// Lloyd iterations from a given labelling, with Hartigan moves whenever Lloyd
/// stalls. Assignment keeps the current group on ties, so the objective never
/// increases.
pub fn lloyd_refine(y: &DMatrix<f64>, init: Vec<usize>, k: usize) -> Result<LloydRun> {
    check_points(y, k)?;
    let mut labels = Partition::from_labels(init, k)?.labels().to_vec();
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD_ITERS {
        let means = repair_empty(y, &mut labels, k);
        let part = Partition::from_labels_unchecked(labels.clone(), k);
        trace.push(kmeans_objective(y, &part));
        let mut changed = false;
        for i in 0..y.nrows() {
            let (g, d) = nearest(y, i, &means);
            if g != labels[i] && d < sq_dist(y, i, &means, labels[i]) {
                labels[i] = g;
                changed = true;
            }
        }
        if !changed && !hartigan_pass(y, &mut labels, k) {
            break;
        }
    }
    repair_empty(y, &mut labels, k);
    let partition = Partition::from_labels_unchecked(labels, k);
    let objective = kmeans_objective(y, &partition);
    if trace.last() != Some(&objective) {
        trace.push(objective);
    }
    Ok(LloydRun {
        partition,
        objective,
        trace,
    })
}

/// Greedy farthest-point seeding from a random first center, then Lloyd.
pub fn lloyd_single(y: &DMatrix<f64>, k: usize, seed: u64) -> Result<LloydRun> {
    seeded_run(y, k, seed, false)
}

/// `sampled` swaps the greedy farthest pick for a draw proportional to the
/// squared distance, which diversifies restarts.
fn seeded_run(y: &DMatrix<f64>, k: usize, seed: u64, sampled: bool) -> Result<LloydRun> {
    check_points(y, k)?;
    let n = y.nrows();
    let mut rng = rng_from_seed(seed);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut dmin: Vec<f64> = (0..n).map(|i| sq_dist(y, i, y, chosen[0])).collect();
    while chosen.len() < k {
        let total: f64 = dmin.iter().sum();
        let mut far = (0, f64::NEG_INFINITY);
        if sampled && total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            for (i, &d) in dmin.iter().enumerate() {
                far = (i, d);
                if u < d {
                    break;
                }
                u -= d;
            }
        } else {
            for (i, &d) in dmin.iter().enumerate() {
                if d > far.1 {
                    far = (i, d);
                }
            }
        }
        chosen.push(far.0);
        for (i, d) in dmin.iter_mut().enumerate() {
            *d = d.min(sq_dist(y, i, y, far.0));
        }
    }
    let centers = y.select_rows(chosen.iter());
    let init = (0..n).map(|i| nearest(y, i, &centers).0).collect();
    lloyd_refine(y, init, k)
}

/// Best of `restarts` Lloyd runs; restart r uses `derive_seed(seed, r)` and
/// the lowest restart index wins ties. Restart 0 seeds greedily, later
/// restarts draw seeds proportionally to squared distance.
pub fn lloyd_multi(y: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<PartitionPair> {
    if restarts == 0 {
        return Err(crate::LdError::Param("lloyd_multi needs at least one restart".into()));
    }
    let mut best: Option<LloydRun> = None;
    for r in 0..restarts {
        let run = seeded_run(y, k, derive_seed(seed, r as u64), r > 0)?;
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(PartitionPair::rows_only(best.expect("restarts >= 1").partition))
}
