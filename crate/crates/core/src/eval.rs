//! Evaluators and true-distance reference algorithms.
//!
//! Everything here reads `GroundTruth` directly and issues zero oracle
//! queries. The reference algorithms double as the `TDist` baseline and as
//! the brute-force side of the exactness checks; their tie-breaking matches
//! the oracle-driven algorithms so zero-noise runs agree item for item.

use crate::dataset::{GroundTruth, ItemId};
use crate::error::{Error, Result};
use crate::hierarchical::Linkage;

/// 1-based rank of an item in the non-increasing (Max) or non-decreasing
/// (Min) order of hidden values; the best item has rank 1.
pub fn value_rank(g: &GroundTruth, id: ItemId, dir: crate::maxfind::Direction) -> usize {
    let v = g.value(id);
    let better = (0..g.len() as ItemId)
        .filter(|&x| match dir {
            crate::maxfind::Direction::Max => g.value(x) > v,
            crate::maxfind::Direction::Min => g.value(x) < v,
        })
        .count();
    better + 1
}

/// Rank of an item by distance from a query point (Max = farthest first).
pub fn distance_rank(g: &GroundTruth, q: ItemId, id: ItemId, dir: crate::maxfind::Direction) -> usize {
    let v = g.distance(q, id);
    let better = (0..g.len() as ItemId)
        .filter(|&x| x != q)
        .filter(|&x| match dir {
            crate::maxfind::Direction::Max => g.distance(q, x) > v,
            crate::maxfind::Direction::Min => g.distance(q, x) < v,
        })
        .count();
    better + 1
}

/// True maximum by value; ties resolve to the larger id, matching what the
/// exact oracle's canonical tie rule induces in the count-based algorithms.
pub fn true_max(g: &GroundTruth) -> ItemId {
    (0..g.len() as ItemId)
        .max_by(|&a, &b| g.value(a).partial_cmp(&g.value(b)).unwrap().then(a.cmp(&b)))
        .expect("nonempty")
}

/// True minimum by value; ties resolve to the smaller id.
pub fn true_min(g: &GroundTruth) -> ItemId {
    (0..g.len() as ItemId)
        .min_by(|&a, &b| g.value(a).partial_cmp(&g.value(b)).unwrap().then(a.cmp(&b)))
        .expect("nonempty")
}

/// True farthest point from `q`; value ties resolve to the larger id.
pub fn true_farthest(g: &GroundTruth, q: ItemId) -> ItemId {
    (0..g.len() as ItemId)
        .filter(|&x| x != q)
        .max_by(|&a, &b| g.distance(q, a).partial_cmp(&g.distance(q, b)).unwrap().then(a.cmp(&b)))
        .expect("needs at least two items")
}

/// True nearest neighbor of `q`; ties resolve to the smaller id.
pub fn true_nearest(g: &GroundTruth, q: ItemId) -> ItemId {
    (0..g.len() as ItemId)
        .filter(|&x| x != q)
        .min_by(|&a, &b| g.distance(q, a).partial_cmp(&g.distance(q, b)).unwrap().then(a.cmp(&b)))
        .expect("needs at least two items")
}

/// The k-center objective: the maximum true distance of any point from its
/// assigned center. Errors if a point maps to a center not in the list.
pub fn kcenter_objective(g: &GroundTruth, centers: &[ItemId], assign: &[ItemId]) -> Result<f64> {
    if assign.len() != g.len() {
        return Err(Error::invalid("assignment length does not match dataset"));
    }
    let mut worst = 0.0f64;
    for (u, &c) in assign.iter().enumerate() {
        if !centers.contains(&c) {
            return Err(Error::invalid(format!("point {u} assigned to non-center {c}")));
        }
        worst = worst.max(g.distance(u as ItemId, c));
    }
    Ok(worst)
}

/// Classical greedy farthest-first traversal on true distances. Points are
/// assigned to the nearest center (ties to the earliest center); the next
/// center is the point with the largest assigned distance (ties to the
/// largest id, matching the exact oracle's count semantics).
pub fn greedy_kcenter_true(
    g: &GroundTruth,
    k: usize,
    first_center: ItemId,
) -> Result<(Vec<ItemId>, Vec<ItemId>)> {
    let n = g.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} out of range for n = {n}")));
    }
    let mut centers = vec![first_center];
    let mut assign: Vec<ItemId> = vec![first_center; n];
    for _ in 1..k {
        let mut far: Option<(f64, ItemId)> = None;
        for u in 0..n as ItemId {
            if centers.contains(&u) {
                continue;
            }
            let d = g.distance(u, assign[u as usize]);
            let beat = match far {
                None => true,
                Some((bd, bu)) => d > bd || (d == bd && u > bu),
            };
            if beat {
                far = Some((d, u));
            }
        }
        let (_, next) = far.ok_or_else(|| Error::invalid("all points are centers"))?;
        centers.push(next);
        for u in 0..n as ItemId {
            if g.distance(u, next) < g.distance(u, assign[u as usize]) {
                assign[u as usize] = next;
            }
        }
    }
    Ok((centers, assign))
}

/// Exact optimal k-center objective by exhaustive search over center sets.
/// Exponential; guarded to tiny instances.
pub fn kcenter_opt_exhaustive(g: &GroundTruth, k: usize) -> Result<f64> {
    let n = g.len();
    if k == 0 || k > n {
        return Err(Error::invalid("k out of range"));
    }
    if binomial(n, k) > 5_000_000 {
        return Err(Error::invalid("instance too large for exhaustive k-center"));
    }
    let mut best = f64::INFINITY;
    let mut centers: Vec<usize> = (0..k).collect();
    loop {
        let mut radius = 0.0f64;
        for u in 0..n {
            let d = centers
                .iter()
                .map(|&c| g.distance(u as ItemId, c as ItemId))
                .fold(f64::INFINITY, f64::min);
            radius = radius.max(d);
        }
        best = best.min(radius);
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if centers[i] != i + n - k {
                centers[i] += 1;
                for j in i + 1..k {
                    centers[j] = centers[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
        if r > u64::MAX as u128 {
            return r;
        }
    }
    r
}

/// Pairwise F-score between a predicted assignment and true labels: the
/// harmonic mean of precision and recall over unordered co-clustered pairs,
/// invariant under relabeling; 0 when precision + recall is 0.
pub fn pairwise_fscore(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::invalid("assignment/label length mismatch"));
    }
    use std::collections::HashMap;
    let mut pred_sizes: HashMap<usize, u64> = HashMap::new();
    let mut truth_sizes: HashMap<usize, u64> = HashMap::new();
    let mut cell_sizes: HashMap<(usize, usize), u64> = HashMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *pred_sizes.entry(p).or_default() += 1;
        *truth_sizes.entry(t).or_default() += 1;
        *cell_sizes.entry((p, t)).or_default() += 1;
    }
    let pairs = |c: u64| c * c.saturating_sub(1) / 2;
    let pred_pairs: u64 = pred_sizes.values().map(|&c| pairs(c)).sum();
    let truth_pairs: u64 = truth_sizes.values().map(|&c| pairs(c)).sum();
    let both: u64 = cell_sizes.values().map(|&c| pairs(c)).sum();
    if pred_pairs == 0 && truth_pairs == 0 {
        return Ok(1.0);
    }
    if pred_pairs == 0 || truth_pairs == 0 || both == 0 {
        return Ok(0.0);
    }
    let precision = both as f64 / pred_pairs as f64;
    let recall = both as f64 / truth_pairs as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Convert a point-to-center map into cluster ids usable by `pairwise_fscore`.
pub fn assignment_to_labels(assign: &[ItemId]) -> Vec<usize> {
    assign.iter().map(|&c| c as usize).collect()
}

/// Reference agglomerative clustering on true distances with the same merge
/// identifiers and tie rule as the oracle-driven algorithm: merge the pair
/// with the smallest linkage distance, ties to the lexicographically
/// smallest (cluster id, cluster id) pair. Returns (left, right, new_id,
/// linkage distance) per merge.
pub fn agglomerative_true(
    g: &GroundTruth,
    linkage: Linkage,
) -> Result<Vec<(usize, usize, usize, f64)>> {
    let n = g.len();
    if n < 2 {
        return Err(Error::invalid("agglomerative clustering needs n >= 2"));
    }
    // linkage distance matrix over alive clusters, updated Lance-Williams style
    let mut alive: Vec<usize> = (0..n).collect();
    let mut dist: std::collections::HashMap<(usize, usize), f64> = std::collections::HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            dist.insert((i, j), g.distance(i as ItemId, j as ItemId));
        }
    }
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut merges = Vec::with_capacity(n - 1);
    for iter in 0..n - 1 {
        let mut best: Option<(f64, (usize, usize))> = None;
        for (ai, &a) in alive.iter().enumerate() {
            for &b in &alive[ai + 1..] {
                let d = dist[&key(a, b)];
                let beat = match best {
                    None => true,
                    Some((bd, bp)) => d < bd || (d == bd && key(a, b) < bp),
                };
                if beat {
                    best = Some((d, key(a, b)));
                }
            }
        }
        let (d, (a, b)) = best.expect("at least two clusters alive");
        let new_id = n + iter;
        for &c in alive.iter().filter(|&&c| c != a && c != b) {
            let da = dist[&key(a, c)];
            let db = dist[&key(b, c)];
            let dn = match linkage {
                Linkage::Single => da.min(db),
                Linkage::Complete => da.max(db),
            };
            dist.insert(key(new_id, c), dn);
        }
        alive.retain(|&c| c != a && c != b);
        alive.push(new_id);
        merges.push((a, b, new_id, d));
    }
    Ok(merges)
}

/// Tracks the true closest-pair linkage distance over the course of an
/// agglomerative run, mirroring the merge sequence the algorithm performed.
/// Feeding it each merge yields the optimal merge distance available at that
/// iteration, for per-merge approximation checks.
pub struct LinkageTracker {
    alive: Vec<usize>,
    dist: std::collections::HashMap<(usize, usize), f64>,
    linkage: Linkage,
    n: usize,
}

impl LinkageTracker {
    pub fn new(g: &GroundTruth, linkage: Linkage) -> Self {
        let n = g.len();
        let mut dist = std::collections::HashMap::new();
        for i in 0..n {
            for j in i + 1..n {
                dist.insert((i, j), g.distance(i as ItemId, j as ItemId));
            }
        }
        LinkageTracker { alive: (0..n).collect(), dist, linkage, n }
    }

    /// Smallest linkage distance among currently alive cluster pairs.
    pub fn optimal_merge_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, &a) in self.alive.iter().enumerate() {
            for &b in &self.alive[i + 1..] {
                best = best.min(self.dist[&(a.min(b), a.max(b))]);
            }
        }
        best
    }

    /// True linkage distance between two alive clusters.
    pub fn linkage_distance(&self, a: usize, b: usize) -> f64 {
        self.dist[&(a.min(b), a.max(b))]
    }

    /// Apply a merge performed by the algorithm under evaluation.
    pub fn apply_merge(&mut self, a: usize, b: usize, new_id: usize) {
        assert!(new_id >= self.n);
        let key = |x: usize, y: usize| (x.min(y), x.max(y));
        for &c in self.alive.iter().filter(|&&c| c != a && c != b) {
            let da = self.dist[&key(a, c)];
            let db = self.dist[&key(b, c)];
            let dn = match self.linkage {
                Linkage::Single => da.min(db),
                Linkage::Complete => da.max(db),
            };
            self.dist.insert(key(new_id, c), dn);
        }
        self.alive.retain(|&c| c != a && c != b);
        self.alive.push(new_id);
    }
}

/// Largest true distance from the anchor to a member of the set; the alpha
/// bound of a core set, computed only on the evaluator side.
pub fn core_alpha(g: &GroundTruth, anchor: ItemId, members: &[ItemId]) -> f64 {
    members.iter().map(|&x| g.distance(anchor, x)).fold(0.0, f64::max)
}
