//! Greedy k-center clustering over a noisy quadruplet oracle.
//!
//! `greedy` is the farthest-first traversal with vote-based assignment,
//! suited to exact and adversarial oracles. `greedy_sampled` is the
//! persistent-probabilistic variant: it clusters a small sample, identifies
//! a core of reliably-near points around each center, and then assigns every
//! point by majority votes against those cores.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::ItemId;
use crate::error::{Error, Result};
use crate::maxfind::{self, Direction, SelectionParams};
use crate::oracle::{Oracle, QuadQuery};

pub const THEORY_GAMMA: f64 = 450.0;
pub const EXPERIMENT_GAMMA: f64 = 2.0;

/// Threshold of the one-sided move vote used by the in-sample assignment.
pub const MOVE_VOTE_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KCenterParams {
    pub k: usize,
    pub delta: f64,
    /// Smallest optimal cluster size; required by the probabilistic mode.
    /// None falls back to the documented heuristic n / (5k).
    pub m: Option<usize>,
    /// Sampling/core constant: 450 for the theory preset, 2 for experiments.
    pub gamma: f64,
    pub first_center: Option<ItemId>,
    /// Core size override for tiny instances and trace tests; the default is
    /// ceil(8 * gamma * ln(n/delta) / 9).
    pub core_size: Option<usize>,
}

impl KCenterParams {
    pub fn new(k: usize) -> Self {
        KCenterParams {
            k,
            delta: 0.1,
            m: None,
            gamma: EXPERIMENT_GAMMA,
            first_center: None,
            core_size: None,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_first_center(mut self, c: ItemId) -> Self {
        self.first_center = Some(c);
        self
    }

    pub fn theory_gamma(mut self) -> Self {
        self.gamma = THEORY_GAMMA;
        self
    }

    fn core_size_for(&self, n: usize) -> usize {
        self.core_size.unwrap_or_else(|| {
            ((8.0 * self.gamma * ((n as f64) / self.delta).ln()) / 9.0).ceil().max(1.0) as usize
        })
    }

    fn resolved_m(&self, n: usize) -> usize {
        self.m.unwrap_or_else(|| (n / (5 * self.k.max(1))).max(1))
    }
}

/// Output clustering. `cores` and `sampled` are populated by the
/// probabilistic mode only. Centers whose cluster was smaller than the
/// requested core size are listed in `undersized_cores`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub centers: Vec<ItemId>,
    pub assign: Vec<ItemId>,
    pub cores: BTreeMap<ItemId, Vec<ItemId>>,
    pub sampled: Vec<ItemId>,
    pub undersized_cores: Vec<ItemId>,
    pub warnings: Vec<String>,
}

impl Clustering {
    pub fn labels(&self) -> Vec<usize> {
        self.assign.iter().map(|&c| c as usize).collect()
    }
}

/// Memo of center-vs-center comparisons per point, shared across assignment
/// rounds so each unordered center pair is bought from the oracle once per
/// point over the whole greedy run.
pub type CenterVoteCache = HashMap<(ItemId, ItemId, ItemId), bool>;

fn center_pair_leq<O: Oracle>(
    u: ItemId,
    a: ItemId,
    b: ItemId,
    oracle: &mut O,
    cache: &mut CenterVoteCache,
) -> Result<bool> {
    // answer for "d(a,u) <= d(b,u)?", memoized on the unordered pair
    let (lo, hi) = (a.min(b), a.max(b));
    let stored = match cache.get(&(u, lo, hi)) {
        Some(&v) => v,
        None => {
            let v = oracle.compare_distances(QuadQuery::new(lo, u, hi, u))?.as_bool();
            cache.insert((u, lo, hi), v);
            v
        }
    };
    Ok(if a == lo { stored } else { !stored })
}

/// Number of centers the oracle deems farther from `u` than `s_j` is.
pub fn center_score<O: Oracle>(
    u: ItemId,
    s_j: ItemId,
    centers: &[ItemId],
    oracle: &mut O,
    cache: &mut CenterVoteCache,
) -> Result<usize> {
    let mut score = 0;
    for &s_k in centers {
        if s_k == s_j {
            continue;
        }
        if center_pair_leq(u, s_j, s_k, oracle, cache)? {
            score += 1;
        }
    }
    Ok(score)
}

/// Assign every point to the center with the highest score; ties go to the
/// earliest center in creation order.
pub fn assign_by_center_score<O: Oracle>(
    n: usize,
    centers: &[ItemId],
    oracle: &mut O,
    cache: &mut CenterVoteCache,
) -> Result<Vec<ItemId>> {
    let mut assign = vec![centers[0]; n];
    if centers.len() == 1 {
        return Ok(assign);
    }
    for u in 0..n as ItemId {
        let mut best = centers[0];
        let mut best_score = center_score(u, centers[0], centers, oracle, cache)?;
        for &c in &centers[1..] {
            let s = center_score(u, c, centers, oracle, cache)?;
            if s > best_score {
                best = c;
                best_score = s;
            }
        }
        assign[u as usize] = best;
    }
    Ok(assign)
}

/// Adapter: `leq` over assigned distances, comparing d(a, center(a)) with
/// d(b, center(b)) in one quadruplet query.
pub fn assigned_distance_leq<'x, O: Oracle>(
    assign: &'x [ItemId],
    oracle: &'x mut O,
) -> impl FnMut(ItemId, ItemId) -> Result<bool> + 'x {
    move |a, b| {
        Ok(oracle
            .compare_distances(QuadQuery::new(a, assign[a as usize], b, assign[b as usize]))?
            .as_bool())
    }
}

/// The engine used to find the next center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarthestFinder {
    /// Sampling-plus-tournament selection.
    Robust,
    /// Plain binary tournament, the Tour2 baseline.
    Tournament2,
}

/// Approximate farthest (point, assigned center) pair among non-centers.
pub fn approx_farthest<O: Oracle>(
    centers: &[ItemId],
    assign: &[ItemId],
    delta: f64,
    k: usize,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<ItemId> {
    approx_farthest_with(centers, assign, delta, k, FarthestFinder::Robust, oracle, rng)
}

pub fn approx_farthest_with<O: Oracle>(
    centers: &[ItemId],
    assign: &[ItemId],
    delta: f64,
    k: usize,
    finder: FarthestFinder,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<ItemId> {
    let candidates: Vec<ItemId> = (0..assign.len() as ItemId)
        .filter(|u| !centers.contains(u))
        .collect();
    if candidates.is_empty() {
        return Err(Error::invalid("all points are centers"));
    }
    match finder {
        FarthestFinder::Robust => {
            let t = ((2.0 * k as f64 / delta).ln().ceil() as usize).max(1);
            let params = SelectionParams { t, l: None, lambda: 2, kappa: 1.0, delta };
            maxfind::robust_max(
                &candidates,
                &params,
                &mut assigned_distance_leq(assign, oracle),
                Direction::Max,
                rng,
            )
        }
        FarthestFinder::Tournament2 => maxfind::tournament(
            &candidates,
            2,
            &mut assigned_distance_leq(assign, oracle),
            Direction::Max,
            rng,
        ),
    }
}

/// Greedy farthest-first traversal driven entirely by oracle votes.
pub fn greedy<O: Oracle>(
    n: usize,
    params: &KCenterParams,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<Clustering> {
    greedy_with(n, params, FarthestFinder::Robust, oracle, rng)
}

pub fn greedy_with<O: Oracle>(
    n: usize,
    params: &KCenterParams,
    finder: FarthestFinder,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<Clustering> {
    let k = params.k;
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} out of range for n = {n}")));
    }
    let first = match params.first_center {
        Some(c) => {
            if c as usize >= n {
                return Err(Error::ItemOutOfRange(c, n));
            }
            c
        }
        None => rng.gen_range(0..n) as ItemId,
    };
    let mut centers = vec![first];
    let mut assign = vec![first; n];
    let mut cache = CenterVoteCache::new();
    for _ in 1..k {
        let next =
            approx_farthest_with(&centers, &assign, params.delta, k, finder, oracle, rng)?;
        centers.push(next);
        assign = assign_by_center_score(n, &centers, oracle, &mut cache)?;
    }
    Ok(Clustering {
        centers,
        assign,
        cores: BTreeMap::new(),
        sampled: Vec::new(),
        undersized_cores: Vec::new(),
        warnings: Vec::new(),
    })
}

/// Count-based core selection: the `size` cluster members the oracle ranks
/// nearest the center. Returns the whole cluster and an undersized flag when
/// the cluster cannot fill the core.
pub fn select_core<O: Oracle>(
    members: &[ItemId],
    center: ItemId,
    size: usize,
    oracle: &mut O,
) -> Result<(Vec<ItemId>, bool)> {
    if members.is_empty() {
        return Err(Error::EmptySet);
    }
    if members.len() <= size {
        let mut all = members.to_vec();
        all.sort_unstable();
        return Ok((all, true));
    }
    let mut scored: Vec<(usize, ItemId)> = Vec::with_capacity(members.len());
    for &u in members {
        let mut count = 0usize;
        for &x in members {
            if x == u {
                continue;
            }
            // how many members look farther from the center than u does
            if !oracle.compare_distances(QuadQuery::new(center, x, center, u))?.as_bool() {
                count += 1;
            }
        }
        scored.push((count, u));
    }
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut core: Vec<ItemId> = scored.into_iter().take(size).map(|(_, u)| u).collect();
    core.sort_unstable();
    Ok((core, false))
}

/// One-sided move score: votes that `u` sits closer to the challenger
/// center than to members of the incumbent's core.
pub fn move_score<O: Oracle>(
    u: ItemId,
    challenger: ItemId,
    incumbent_core: &[ItemId],
    oracle: &mut O,
) -> Result<usize> {
    if incumbent_core.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut votes = 0usize;
    for &v in incumbent_core {
        if oracle.compare_distances(QuadQuery::new(u, challenger, u, v))?.as_bool() {
            votes += 1;
        }
    }
    Ok(votes)
}

/// Robust comparison of two (point, center) distances through the centers'
/// cores. Same-cluster comparisons use the full core; cross-cluster ones a
/// fixed sqrt-sized subset of each, answering Yes when at least 0.3 of the
/// votes agree.
pub fn core_compare<O: Oracle>(
    v_i: ItemId,
    s_i: ItemId,
    v_j: ItemId,
    s_j: ItemId,
    cores: &BTreeMap<ItemId, Vec<ItemId>>,
    oracle: &mut O,
) -> Result<bool> {
    let r_i = cores.get(&s_i).ok_or_else(|| Error::invalid("missing core"))?;
    let r_j = cores.get(&s_j).ok_or_else(|| Error::invalid("missing core"))?;
    if r_i.is_empty() || r_j.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut fcount = 0usize;
    let comparisons;
    if s_i == s_j {
        comparisons = r_i.len();
        for &x in r_i {
            if oracle.compare_distances(QuadQuery::new(v_i, x, v_j, x))?.as_bool() {
                fcount += 1;
            }
        }
    } else {
        let sub = |r: &[ItemId]| {
            let take = (r.len() as f64).sqrt().ceil() as usize;
            r[..take.min(r.len())].to_vec()
        };
        let ri = sub(r_i);
        let rj = sub(r_j);
        comparisons = ri.len() * rj.len();
        for &x in &ri {
            for &y in &rj {
                if oracle.compare_distances(QuadQuery::new(v_i, x, v_j, y))?.as_bool() {
                    fcount += 1;
                }
            }
        }
    }
    Ok(fcount as f64 >= 0.3 * comparisons as f64)
}

/// Cross-core majority duel: does `u` sit closer to `challenger` than to
/// `incumbent`? One vote per (challenger core member, incumbent core member)
/// pair; strict majority moves, ties stay.
fn core_duel<O: Oracle>(
    u: ItemId,
    challenger_core: &[ItemId],
    incumbent_core: &[ItemId],
    oracle: &mut O,
) -> Result<bool> {
    let mut votes = 0usize;
    let total = challenger_core.len() * incumbent_core.len();
    for &x in challenger_core {
        for &y in incumbent_core {
            if oracle.compare_distances(QuadQuery::new(u, x, u, y))?.as_bool() {
                votes += 1;
            }
        }
    }
    Ok(2 * votes > total)
}

/// Greedy clustering under persistent probabilistic noise: sample, cluster
/// the sample while identifying per-center cores, then assign every point by
/// core votes.
pub fn greedy_sampled<O: Oracle>(
    n: usize,
    params: &KCenterParams,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<Clustering> {
    let k = params.k;
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} out of range for n = {n}")));
    }
    let m = params.resolved_m(n);
    let rate = (params.gamma * ((n as f64) / params.delta).ln() / m as f64).min(1.0);
    let mut sampled: Vec<ItemId> =
        (0..n as ItemId).filter(|_| rng.gen::<f64>() < rate).collect();
    let mut warnings = Vec::new();
    if sampled.is_empty() {
        sampled = (0..n as ItemId).collect();
        warnings.push("empty sample; falling back to all points".to_string());
    }
    let first = match params.first_center {
        Some(c) => {
            if c as usize >= n {
                return Err(Error::ItemOutOfRange(c, n));
            }
            if !sampled.contains(&c) {
                sampled.push(c);
                sampled.sort_unstable();
            }
            c
        }
        None => sampled[rng.gen_range(0..sampled.len())],
    };
    if sampled.len() < k {
        return Err(Error::invalid(format!(
            "sample of {} points cannot host {k} centers; lower m or raise gamma",
            sampled.len()
        )));
    }
    let core_size = params.core_size_for(n);
    let mut centers = vec![first];
    let mut clusters: BTreeMap<ItemId, Vec<ItemId>> = BTreeMap::new();
    clusters.insert(first, sampled.clone());
    let mut cores: BTreeMap<ItemId, Vec<ItemId>> = BTreeMap::new();
    let mut undersized = Vec::new();
    let (core, small) = select_core(&clusters[&first], first, core_size, oracle)?;
    if small {
        undersized.push(first);
    }
    cores.insert(first, core);

    for _ in 1..k {
        let next = sampled_farthest(&centers, &clusters, &cores, n, params, oracle, rng)?;
        // move members toward the new center by one-sided majority votes
        // against their current core (the new center has no core yet)
        let mut moved = vec![next];
        for &s_j in &centers {
            let core_j = cores[&s_j].clone();
            let members = clusters[&s_j].clone();
            let mut stay = Vec::with_capacity(members.len());
            for &u in &members {
                if u == s_j || u == next {
                    if u == s_j {
                        stay.push(u);
                    }
                    continue;
                }
                if core_j.contains(&u) {
                    stay.push(u);
                    continue;
                }
                let votes = move_score(u, next, &core_j, oracle)?;
                if 2 * votes > core_j.len() {
                    moved.push(u);
                } else {
                    stay.push(u);
                }
            }
            clusters.insert(s_j, stay);
        }
        moved.sort_unstable();
        let (core, small) = select_core(&moved, next, core_size, oracle)?;
        if small {
            undersized.push(next);
        }
        clusters.insert(next, moved);
        cores.insert(next, core);
        centers.push(next);
    }

    // final assignment of every point by cross-core majority duels, walking
    // the centers in creation order and keeping the last winner
    let mut assign = vec![centers[0]; n];
    for u in 0..n as ItemId {
        if let Some(&c) = centers.iter().find(|&&c| c == u) {
            assign[u as usize] = c;
            continue;
        }
        let mut cur = centers[0];
        for &s in &centers[1..] {
            if core_duel(u, &cores[&s], &cores[&cur], oracle)? {
                cur = s;
            }
        }
        assign[u as usize] = cur;
    }
    Ok(Clustering { centers, assign, cores, sampled, undersized_cores: undersized, warnings })
}

fn sampled_farthest<O: Oracle>(
    centers: &[ItemId],
    clusters: &BTreeMap<ItemId, Vec<ItemId>>,
    cores: &BTreeMap<ItemId, Vec<ItemId>>,
    n: usize,
    params: &KCenterParams,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<ItemId> {
    let mut owner: HashMap<ItemId, ItemId> = HashMap::new();
    for (&c, members) in clusters {
        for &u in members {
            owner.insert(u, c);
        }
    }
    let mut candidates: Vec<ItemId> = clusters
        .values()
        .flatten()
        .copied()
        .filter(|u| !centers.contains(u))
        .filter(|u| !cores[&owner[u]].contains(u))
        .collect();
    if candidates.is_empty() {
        candidates = clusters
            .values()
            .flatten()
            .copied()
            .filter(|u| !centers.contains(u))
            .collect();
    }
    if candidates.is_empty() {
        return Err(Error::invalid("no candidates left for a new center"));
    }
    candidates.sort_unstable();
    let sample_count: usize = clusters.values().map(|v| v.len()).sum();
    let t = (((n as f64) / params.delta).ln().ceil() as usize).max(1);
    let l = (sample_count as f64).sqrt().ceil() as usize;
    let sel = SelectionParams {
        t,
        l: Some(l.clamp(1, candidates.len())),
        lambda: 2,
        kappa: 1.0,
        delta: params.delta,
    };
    let mut leq =
        |a: ItemId, b: ItemId| core_compare(a, owner[&a], b, owner[&b], cores, oracle);
    maxfind::robust_max(&candidates, &sel, &mut leq, Direction::Max, rng)
}
