//! Agglomerative hierarchical clustering with an adjacency-list scheme.
//!
//! Every pair of clusters carries a representative record pair realizing
//! their linkage distance. Merging two clusters costs exactly one oracle
//! query per surviving cluster (the two stored representative pairs are
//! compared once), which keeps the whole run at O(n^2) merge-update queries
//! on top of the nearest-neighbor bookkeeping.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::ItemId;
use crate::error::{Error, Result};
use crate::maxfind::{self, Direction, SelectionParams};
use crate::oracle::{NoiseKind, NoiseParams, Oracle, QuadQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Linkage {
    Single,
    Complete,
}

/// A pair of records realizing the linkage distance between two clusters.
pub type RepPair = (ItemId, ItemId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub new_id: usize,
    pub rep: RepPair,
    pub iteration: usize,
}

/// Ordered merge list forming a binary tree over the initial clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    /// Number of leaves (initial clusters).
    pub n: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Structural well-formedness: n-1 merges, each id merged exactly once,
    /// new ids issued consecutively.
    pub fn validate(&self) -> Result<()> {
        if self.merges.len() + 1 != self.n {
            return Err(Error::invalid("dendrogram must contain exactly n-1 merges"));
        }
        let mut open: Vec<bool> = vec![true; 2 * self.n - 1];
        for (i, m) in self.merges.iter().enumerate() {
            if m.new_id != self.n + i || m.iteration != i {
                return Err(Error::invalid("merge ids must be issued in iteration order"));
            }
            for side in [m.left, m.right] {
                if side >= m.new_id || !open[side] {
                    return Err(Error::invalid("merge references a consumed or future cluster"));
                }
                open[side] = false;
            }
        }
        Ok(())
    }

    /// Topology-only Newick rendering with leaf ids as labels.
    pub fn newick(&self) -> String {
        if self.merges.is_empty() {
            return format!("{};", if self.n == 1 { "0" } else { "" });
        }
        let mut out = String::new();
        self.render(self.merges.last().unwrap().new_id, &mut out);
        out.push(';');
        out
    }

    fn render(&self, id: usize, out: &mut String) {
        if id < self.n {
            out.push_str(&id.to_string());
        } else {
            let m = &self.merges[id - self.n];
            out.push('(');
            self.render(m.left, out);
            out.push(',');
            self.render(m.right, out);
            out.push(')');
        }
    }

    /// Flat clustering obtained by cutting the dendrogram to `k` clusters,
    /// labeling each leaf by its cluster's smallest leaf id.
    pub fn cut(&self, k: usize) -> Vec<usize> {
        let keep = self.merges.len().saturating_sub(k.saturating_sub(1));
        let mut parent: Vec<usize> = (0..2 * self.n - 1).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for m in &self.merges[..keep] {
            let a = find(&mut parent, m.left);
            let b = find(&mut parent, m.right);
            parent[a] = m.new_id;
            parent[b] = m.new_id;
        }
        let mut root_min: BTreeMap<usize, usize> = BTreeMap::new();
        for leaf in 0..self.n {
            let r = find(&mut parent, leaf);
            root_min.entry(r).or_insert(leaf);
        }
        (0..self.n).map(|leaf| root_min[&find(&mut parent, leaf)]).collect()
    }
}

/// The engine used for every internal minimum search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinFinder {
    /// Sampling-plus-tournament selection with the given repetition count.
    Robust { t: usize },
    /// Plain binary tournament, the Tour2 baseline.
    Tournament2,
}

/// The probabilistic noise model keeps its constant per-query error under
/// repetition, so the merge scheme's single-query updates carry no guarantee
/// there; it is only accepted when the caller supplies a pre-partition.
pub fn check_noise_supported(noise: &NoiseParams, has_partition: bool) -> Result<()> {
    if noise.kind == NoiseKind::Probabilistic && noise.p > 0.0 && !has_partition {
        return Err(Error::Unsupported(
            "hierarchical clustering under probabilistic noise requires a pre-partition".into(),
        ));
    }
    Ok(())
}

struct Cluster {
    adj: BTreeMap<usize, RepPair>,
    nn: Option<usize>,
}

/// Merge-update of the adjacency entries: for every surviving cluster the
/// two stored representative pairs are compared with one oracle query and
/// the winner is kept (min side for single linkage, max for complete).
/// Returns the merged cluster's adjacency.
pub fn merge_adjacency<O: Oracle>(
    left_adj: &BTreeMap<usize, RepPair>,
    right_adj: &BTreeMap<usize, RepPair>,
    survivors: &[usize],
    linkage: Linkage,
    oracle: &mut O,
) -> Result<BTreeMap<usize, RepPair>> {
    let mut adj = BTreeMap::new();
    for &c in survivors {
        let ra = *left_adj
            .get(&c)
            .ok_or_else(|| Error::invalid(format!("missing adjacency entry for {c}")))?;
        let rb = *right_adj
            .get(&c)
            .ok_or_else(|| Error::invalid(format!("missing adjacency entry for {c}")))?;
        let left_leq =
            oracle.compare_distances(QuadQuery::new(ra.0, ra.1, rb.0, rb.1))?.as_bool();
        let winner = match linkage {
            Linkage::Single => {
                if left_leq {
                    ra
                } else {
                    rb
                }
            }
            Linkage::Complete => {
                if left_leq {
                    rb
                } else {
                    ra
                }
            }
        };
        adj.insert(c, winner);
    }
    Ok(adj)
}

fn nearest_neighbor<O: Oracle>(
    cluster: &Cluster,
    finder: MinFinder,
    delta: f64,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<Option<usize>> {
    if cluster.adj.is_empty() {
        return Ok(None);
    }
    // carry the representative pair with each entry so the comparison needs
    // no map lookups on the hot path
    let entries: Vec<(usize, RepPair)> = cluster.adj.iter().map(|(&c, &r)| (c, r)).collect();
    let mut leq = |a: (usize, RepPair), b: (usize, RepPair)| {
        let (ra, rb) = (a.1, b.1);
        Ok(oracle.compare_distances(QuadQuery::new(ra.0, ra.1, rb.0, rb.1))?.as_bool())
    };
    let winner = match finder {
        MinFinder::Robust { t } => {
            let params = SelectionParams { t, l: None, lambda: 2, kappa: 1.0, delta };
            maxfind::robust_max(&entries, &params, &mut leq, Direction::Min, rng)?
        }
        MinFinder::Tournament2 => {
            maxfind::tournament(&entries, 2, &mut leq, Direction::Min, rng)?
        }
    };
    Ok(Some(winner.0))
}

/// Agglomerative clustering over singleton leaves.
pub fn agglomerate<O: Oracle>(
    n: usize,
    linkage: Linkage,
    delta: f64,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<Dendrogram> {
    let t = (2.0 * ((n as f64) / delta).ln().ceil()).max(2.0) as usize;
    agglomerate_with(n, linkage, delta, MinFinder::Robust { t }, oracle, rng)
}

/// Agglomerative clustering with an explicit minimum-search engine.
pub fn agglomerate_with<O: Oracle>(
    n: usize,
    linkage: Linkage,
    delta: f64,
    finder: MinFinder,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<Dendrogram> {
    if n < 2 {
        return Err(Error::invalid("agglomerative clustering needs n >= 2"));
    }
    let singleton = |i: usize, j: usize| (i as ItemId, j as ItemId);
    let mut clusters: BTreeMap<usize, Cluster> = BTreeMap::new();
    for i in 0..n {
        let adj: BTreeMap<usize, RepPair> =
            (0..n).filter(|&j| j != i).map(|j| (j, singleton(i.min(j), i.max(j)))).collect();
        clusters.insert(i, Cluster { adj, nn: None });
    }
    run_agglomeration(n, clusters, linkage, delta, finder, oracle, rng)
}

/// Agglomerative clustering starting from a supplied partition (the gated
/// probabilistic mode). Leaves are the groups in the order given; the merge
/// machinery is unchanged and no approximation claim is made.
pub fn agglomerate_partitioned<O: Oracle>(
    groups: &[Vec<ItemId>],
    linkage: Linkage,
    delta: f64,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<Dendrogram> {
    let g = groups.len();
    if g < 2 {
        return Err(Error::invalid("need at least two groups"));
    }
    if groups.iter().any(|grp| grp.is_empty()) {
        return Err(Error::invalid("empty group in partition"));
    }
    let dir = match linkage {
        Linkage::Single => Direction::Min,
        Linkage::Complete => Direction::Max,
    };
    let mut clusters: BTreeMap<usize, Cluster> = BTreeMap::new();
    let mut reps: BTreeMap<(usize, usize), RepPair> = BTreeMap::new();
    for i in 0..g {
        for j in i + 1..g {
            let cross: Vec<RepPair> = groups[i]
                .iter()
                .flat_map(|&a| groups[j].iter().map(move |&b| (a, b)))
                .collect();
            let mut leq = |x: RepPair, y: RepPair| {
                Ok(oracle.compare_distances(QuadQuery::new(x.0, x.1, y.0, y.1))?.as_bool())
            };
            reps.insert((i, j), maxfind::tournament(&cross, 2, &mut leq, dir, rng)?);
        }
    }
    for i in 0..g {
        let adj: BTreeMap<usize, RepPair> =
            (0..g).filter(|&j| j != i).map(|j| (j, reps[&(i.min(j), i.max(j))])).collect();
        clusters.insert(i, Cluster { adj, nn: None });
    }
    let t = (2.0 * ((g as f64) / delta).ln().ceil()).max(2.0) as usize;
    run_agglomeration(g, clusters, linkage, delta, MinFinder::Robust { t }, oracle, rng)
}

fn run_agglomeration<O: Oracle>(
    n: usize,
    mut clusters: BTreeMap<usize, Cluster>,
    linkage: Linkage,
    delta: f64,
    finder: MinFinder,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<Dendrogram> {
    // initial nearest neighbors
    let ids: Vec<usize> = clusters.keys().copied().collect();
    for id in ids {
        let nn = nearest_neighbor(&clusters[&id], finder, delta, oracle, rng)?;
        clusters.get_mut(&id).unwrap().nn = nn;
    }
    let mut merges = Vec::with_capacity(n - 1);
    for iteration in 0..n - 1 {
        // candidate pairs (cluster, cached nearest neighbor), deduplicated
        let mut candidates: BTreeMap<(usize, usize), RepPair> = BTreeMap::new();
        for (&c, cl) in &clusters {
            let nn = cl.nn.expect("every cluster has a neighbor while two remain");
            let key = (c.min(nn), c.max(nn));
            candidates.entry(key).or_insert(cl.adj[&nn]);
        }
        let entries: Vec<((usize, usize), RepPair)> =
            candidates.iter().map(|(&k, &r)| (k, r)).collect();
        let winner = {
            let mut leq = |a: ((usize, usize), RepPair), b: ((usize, usize), RepPair)| {
                let (ra, rb) = (a.1, b.1);
                Ok(oracle.compare_distances(QuadQuery::new(ra.0, ra.1, rb.0, rb.1))?.as_bool())
            };
            match finder {
                MinFinder::Robust { t } => {
                    let params = SelectionParams { t, l: None, lambda: 2, kappa: 1.0, delta };
                    maxfind::robust_max(&entries, &params, &mut leq, Direction::Min, rng)?
                }
                MinFinder::Tournament2 => {
                    maxfind::tournament(&entries, 2, &mut leq, Direction::Min, rng)?
                }
            }
        };
        let (a, b) = winner.0;
        let rep = clusters[&a].adj[&b];
        let new_id = n + iteration;
        let survivors: Vec<usize> =
            clusters.keys().copied().filter(|&c| c != a && c != b).collect();
        let left = clusters.remove(&a).expect("alive");
        let right = clusters.remove(&b).expect("alive");
        let new_adj = merge_adjacency(&left.adj, &right.adj, &survivors, linkage, oracle)?;
        for (&c, &r) in &new_adj {
            let cl = clusters.get_mut(&c).expect("alive");
            cl.adj.remove(&a);
            cl.adj.remove(&b);
            cl.adj.insert(new_id, r);
        }
        clusters.insert(new_id, Cluster { adj: new_adj, nn: None });
        merges.push(Merge { left: a, right: b, new_id, rep, iteration });
        if clusters.len() > 1 {
            let nn = nearest_neighbor(&clusters[&new_id], finder, delta, oracle, rng)?;
            clusters.get_mut(&new_id).unwrap().nn = nn;
            // repair neighbors that pointed at a merged cluster
            let stale: Vec<usize> = clusters
                .iter()
                .filter(|(&c, cl)| c != new_id && matches!(cl.nn, Some(x) if x == a || x == b))
                .map(|(&c, _)| c)
                .collect();
            for c in stale {
                let nn = nearest_neighbor(&clusters[&c], finder, delta, oracle, rng)?;
                clusters.get_mut(&c).unwrap().nn = nn;
            }
        }
    }
    Ok(Dendrogram { n, merges })
}
