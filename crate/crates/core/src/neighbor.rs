//! Farthest and nearest neighbor of a query point.
//!
//! A farthest (nearest) query is maximum (minimum) finding over the value
//! set {d(q, u)}, with each elementary comparison routed to one quadruplet
//! query. Under persistent probabilistic noise the elementary comparison is
//! replaced by a core-anchored majority-of-votes comparison.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::ItemId;
use crate::error::{Error, Result};
use crate::maxfind::{self, Direction, SelectionParams};
use crate::oracle::{Oracle, QuadQuery};

/// The vote threshold of the anchored comparison; analyzed for p <= 0.40.
pub const VOTE_THRESHOLD: f64 = 0.3;

/// Adapter: `leq` over distances from a fixed query point. One quadruplet
/// query per comparison.
pub fn distance_view_leq<'o, O: Oracle>(
    q: ItemId,
    oracle: &'o mut O,
) -> impl FnMut(ItemId, ItemId) -> Result<bool> + 'o {
    move |a, b| Ok(oracle.compare_distances(QuadQuery::new(q, a, q, b))?.as_bool())
}

/// Approximate farthest point from `q` among `items` (which must not
/// contain `q`). Suited to exact and adversarial oracles.
pub fn farthest<O: Oracle>(
    q: ItemId,
    items: &[ItemId],
    params: &SelectionParams,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<ItemId> {
    if items.is_empty() {
        return Err(Error::EmptySet);
    }
    maxfind::robust_max(items, params, &mut distance_view_leq(q, oracle), Direction::Max, rng)
}

/// Approximate nearest neighbor of `q` among `items`.
pub fn nearest<O: Oracle>(
    q: ItemId,
    items: &[ItemId],
    params: &SelectionParams,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<ItemId> {
    if items.is_empty() {
        return Err(Error::EmptySet);
    }
    maxfind::robust_max(items, params, &mut distance_view_leq(q, oracle), Direction::Min, rng)
}

/// A set of points known (or believed) to be close to an anchor, used to
/// amplify the reliability of pairwise comparisons from that anchor. The
/// distance bound alpha is never visible to algorithms; evaluators compute
/// it from ground truth when a check needs it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreSet {
    pub anchor: ItemId,
    pub members: Vec<ItemId>,
}

impl CoreSet {
    pub fn new(anchor: ItemId, members: Vec<ItemId>) -> Self {
        CoreSet { anchor, members }
    }

    /// Smallest member count for which the anchored comparison's guarantee
    /// is analyzed at confidence delta.
    pub fn required_size(delta: f64) -> usize {
        (6.0 * (1.0 / delta).ln()).ceil().max(1.0) as usize
    }
}

/// Robust pairwise comparison: does the anchor sit closer to `v_i` than to
/// `v_j`? Tallies one vote per core member x via O(x, v_i, x, v_j) and
/// answers Yes when at least 0.3|S| votes agree. Exactly |S| queries.
pub fn anchored_compare<O: Oracle>(
    core: &CoreSet,
    v_i: ItemId,
    v_j: ItemId,
    oracle: &mut O,
) -> Result<bool> {
    if core.members.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut fcount = 0usize;
    for &x in &core.members {
        if oracle.compare_distances(QuadQuery::new(x, v_i, x, v_j))?.as_bool() {
            fcount += 1;
        }
    }
    Ok(fcount as f64 >= VOTE_THRESHOLD * core.members.len() as f64)
}

fn check_core(core: &CoreSet, delta: f64) -> Result<()> {
    let need = CoreSet::required_size(delta);
    if core.members.len() < need {
        return Err(Error::invalid(format!(
            "core set has {} members, needs at least {need} for delta = {delta}",
            core.members.len()
        )));
    }
    Ok(())
}

/// Farthest point under persistent probabilistic noise: the selection
/// skeleton with every elementary comparison replaced by the core-anchored
/// vote. The caller supplies the core (k-center supplies identified cores;
/// the CLI builds a heuristic one).
pub fn farthest_with_core<O: Oracle>(
    q: ItemId,
    items: &[ItemId],
    core: &CoreSet,
    params: &SelectionParams,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<ItemId> {
    let _ = q;
    check_core(core, params.delta)?;
    if items.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut leq = |a, b| anchored_compare(core, a, b, oracle);
    maxfind::robust_max(items, params, &mut leq, Direction::Max, rng)
}

/// Nearest neighbor under persistent probabilistic noise.
pub fn nearest_with_core<O: Oracle>(
    q: ItemId,
    items: &[ItemId],
    core: &CoreSet,
    params: &SelectionParams,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<ItemId> {
    let _ = q;
    check_core(core, params.delta)?;
    if items.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut leq = |a, b| anchored_compare(core, a, b, oracle);
    maxfind::robust_max(items, params, &mut leq, Direction::Min, rng)
}

/// Heuristic core for standalone use: score every candidate against a
/// random reference sample on the distance view from `q` and keep the
/// `size` highest minimum-direction scorers. No closeness guarantee; the
/// clustering pipeline builds its cores from cluster structure instead.
pub fn heuristic_core<O: Oracle>(
    q: ItemId,
    items: &[ItemId],
    size: usize,
    delta: f64,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<CoreSet> {
    if items.len() < size {
        return Err(Error::invalid("not enough items to build a core"));
    }
    let n = items.len();
    let sample_size = ((5.0 * ((n as f64) / delta).ln()).ceil() as usize).clamp(1, n);
    let sample: Vec<ItemId> = (0..sample_size).map(|_| items[rng.gen_range(0..n)]).collect();
    let mut scored: Vec<(usize, ItemId)> = Vec::with_capacity(n);
    {
        let mut leq = distance_view_leq(q, oracle);
        for &u in items {
            let s = maxfind::count_score(u, &sample, &mut leq, Direction::Min)?;
            scored.push((s, u));
        }
    }
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(CoreSet::new(q, scored.into_iter().take(size).map(|(_, u)| u).collect()))
}
