//! Comparison and quadruplet oracles with noise, persistence and query
//! accounting.
//!
//! Every query is reduced to a canonical orientation before it is answered.
//! The canonical answer is a pure function of (oracle seed, canonical key),
//! and the reversed orientation returns its negation, so replaying any query
//! sequence, permuted or duplicated, yields identical answers.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::dataset::{GroundTruth, ItemId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Answer {
    Yes,
    No,
}

impl Answer {
    pub fn as_bool(self) -> bool {
        self == Answer::Yes
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            Answer::Yes
        } else {
            Answer::No
        }
    }

    pub fn negate(self) -> Self {
        Answer::from_bool(!self.as_bool())
    }
}

/// Asks whether d(a,b) <= d(c,d). Equal ids are permitted (distance zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadQuery {
    pub a: ItemId,
    pub b: ItemId,
    pub c: ItemId,
    pub d: ItemId,
}

impl QuadQuery {
    pub fn new(a: ItemId, b: ItemId, c: ItemId, d: ItemId) -> Self {
        QuadQuery { a, b, c, d }
    }
}

/// A query reduced to canonical form: both pairs sorted, pairs ordered
/// lexicographically, with `swapped` recording whether the caller's first
/// pair sorted after the second. Non-canonical orientations are answered by
/// negating the stored canonical answer, except identical pairs, which are
/// always `Yes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonicalKey {
    pub pair1: (ItemId, ItemId),
    pub pair2: (ItemId, ItemId),
    pub swapped: bool,
}

impl CanonicalKey {
    /// Orientation-independent identity of the query.
    pub fn pairs(&self) -> ((ItemId, ItemId), (ItemId, ItemId)) {
        (self.pair1, self.pair2)
    }
}

pub fn canonicalize(q: &QuadQuery) -> CanonicalKey {
    let p = (q.a.min(q.b), q.a.max(q.b));
    let r = (q.c.min(q.d), q.c.max(q.d));
    if p <= r {
        CanonicalKey { pair1: p, pair2: r, swapped: false }
    } else {
        CanonicalKey { pair1: r, pair2: p, swapped: true }
    }
}

fn value_key(i: ItemId, j: ItemId) -> CanonicalKey {
    let lo = i.min(j);
    let hi = i.max(j);
    CanonicalKey { pair1: (lo, lo), pair2: (hi, hi), swapped: i > j }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    None,
    Adversarial,
    Probabilistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryStrategy {
    /// Lies on every in-band query, always against the larger quantity.
    #[default]
    Pessimistic,
    /// Answers in-band queries with a seeded fair coin, fixed per query.
    RandomInBand,
}

/// Noise model configuration. `mu` applies to the adversarial kind, `p` to
/// the probabilistic kind; `delta` is the confidence parameter handed to the
/// algorithms that consume this oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub kind: NoiseKind,
    pub mu: f64,
    pub p: f64,
    pub delta: f64,
    pub seed: u64,
    pub adversary: AdversaryStrategy,
}

impl NoiseParams {
    pub fn exact(seed: u64) -> Self {
        NoiseParams {
            kind: NoiseKind::None,
            mu: 0.0,
            p: 0.0,
            delta: 0.1,
            seed,
            adversary: AdversaryStrategy::Pessimistic,
        }
    }

    pub fn adversarial(mu: f64, adversary: AdversaryStrategy, seed: u64) -> Self {
        NoiseParams { kind: NoiseKind::Adversarial, mu, p: 0.0, delta: 0.1, seed, adversary }
    }

    pub fn probabilistic(p: f64, seed: u64) -> Self {
        NoiseParams {
            kind: NoiseKind::Probabilistic,
            mu: 0.0,
            p,
            delta: 0.1,
            seed,
            adversary: AdversaryStrategy::Pessimistic,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.mu < 0.0 || !self.mu.is_finite() {
            return Err(Error::invalid("mu must be a finite nonnegative real"));
        }
        if !(0.0..0.5).contains(&self.p) {
            return Err(Error::invalid("p must lie in [0, 0.5)"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta must lie in (0, 1)"));
        }
        if self.kind == NoiseKind::Probabilistic && self.p > 0.40 {
            warnings.push(
                "p > 0.40: the fixed 0.3 vote thresholds are only analyzed for p <= 0.40"
                    .to_string(),
            );
        }
        Ok(warnings)
    }
}

/// Per-run query count and optional transcript.
#[derive(Debug, Clone, Default)]
pub struct QueryLedger {
    count: u64,
    transcript: Option<Vec<(CanonicalKey, Answer)>>,
}

impl QueryLedger {
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn reset(&mut self) {
        self.count = 0;
        if let Some(t) = &mut self.transcript {
            t.clear();
        }
    }

    pub fn enable_transcript(&mut self) {
        if self.transcript.is_none() {
            self.transcript = Some(Vec::new());
        }
    }

    pub fn transcript(&self) -> Option<&[(CanonicalKey, Answer)]> {
        self.transcript.as_deref()
    }

    fn record(&mut self, key: CanonicalKey, ans: Answer) {
        self.count += 1;
        if let Some(t) = &mut self.transcript {
            t.push((key, ans));
        }
    }
}

/// Common oracle interface. All algorithm code is generic over this trait and
/// never touches `GroundTruth` directly.
pub trait Oracle {
    /// Is val(i) <= val(j)? Values-mode ground truth only.
    fn compare_values(&mut self, i: ItemId, j: ItemId) -> Result<Answer>;

    /// Is d(a,b) <= d(c,d)? Points- or matrix-mode ground truth only.
    fn compare_distances(&mut self, q: QuadQuery) -> Result<Answer>;

    fn queries(&self) -> u64;

    fn reset_queries(&mut self);
}

/// Simulated oracle over a hidden ground truth.
pub struct SimOracle<'g> {
    ground: &'g GroundTruth,
    params: NoiseParams,
    ledger: QueryLedger,
}

impl<'g> SimOracle<'g> {
    pub fn new(ground: &'g GroundTruth, params: NoiseParams) -> Self {
        SimOracle { ground, params, ledger: QueryLedger::default() }
    }

    pub fn params(&self) -> &NoiseParams {
        &self.params
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn enable_transcript(&mut self) {
        self.ledger.enable_transcript();
    }

    /// Canonical answer for a pair of hidden quantities. Ties are answered
    /// `Yes` in the canonical orientation for every kind (flips still apply
    /// to the probabilistic kind).
    fn decide(&self, x: f64, y: f64, key: &CanonicalKey) -> bool {
        match self.params.kind {
            NoiseKind::None => x <= y,
            NoiseKind::Adversarial => {
                if x == y {
                    true
                } else if in_band(x, y, self.params.mu) {
                    match self.params.adversary {
                        AdversaryStrategy::Pessimistic => x >= y,
                        AdversaryStrategy::RandomInBand => {
                            coin(self.params.seed, key, TAG_IN_BAND)
                        }
                    }
                } else {
                    x <= y
                }
            }
            NoiseKind::Probabilistic => {
                let truthful = x <= y;
                let flip = unit(self.params.seed, key, TAG_FLIP) < self.params.p;
                truthful ^ flip
            }
        }
    }
}

/// Band membership for the adversarial model: the oracle may lie when the
/// two quantities are within a (1+mu) ratio, boundary inclusive. Two zeros
/// are in-band; zero against a positive quantity is out-of-band.
pub fn in_band(x: f64, y: f64, mu: f64) -> bool {
    if x == y {
        return true;
    }
    if x == 0.0 || y == 0.0 {
        return false;
    }
    let f = 1.0 + mu;
    x <= f * y && y <= f * x
}

const TAG_FLIP: u64 = 0x9d5c_17ab_23d1_4e01;
const TAG_IN_BAND: u64 = 0x51f0_3c2a_88b7_66d3;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn key_hash(seed: u64, key: &CanonicalKey, tag: u64) -> u64 {
    let p1 = ((key.pair1.0 as u64) << 32) | key.pair1.1 as u64;
    let p2 = ((key.pair2.0 as u64) << 32) | key.pair2.1 as u64;
    let mut h = mix64(seed ^ tag);
    h = mix64(h ^ p1);
    h = mix64(h ^ p2);
    h
}

fn coin(seed: u64, key: &CanonicalKey, tag: u64) -> bool {
    key_hash(seed, key, tag) & 1 == 1
}

fn unit(seed: u64, key: &CanonicalKey, tag: u64) -> f64 {
    (key_hash(seed, key, tag) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl Oracle for SimOracle<'_> {
    fn compare_values(&mut self, i: ItemId, j: ItemId) -> Result<Answer> {
        if !self.ground.has_values() {
            return Err(Error::WrongMode { expected: "values", got: self.ground.mode() });
        }
        self.ground.check_id(i)?;
        self.ground.check_id(j)?;
        let key = value_key(i, j);
        let ans = if i == j {
            Answer::Yes
        } else {
            let (lo, hi) = (i.min(j), i.max(j));
            let canonical = self.decide(self.ground.value(lo), self.ground.value(hi), &key);
            Answer::from_bool(canonical ^ key.swapped)
        };
        self.ledger.record(key, ans);
        Ok(ans)
    }

    fn compare_distances(&mut self, q: QuadQuery) -> Result<Answer> {
        if !self.ground.has_distances() {
            return Err(Error::WrongMode { expected: "points or matrix", got: self.ground.mode() });
        }
        for id in [q.a, q.b, q.c, q.d] {
            self.ground.check_id(id)?;
        }
        let key = canonicalize(&q);
        let ans = if key.pair1 == key.pair2 {
            Answer::Yes
        } else {
            let x = self.ground.distance(key.pair1.0, key.pair1.1);
            let y = self.ground.distance(key.pair2.0, key.pair2.1);
            Answer::from_bool(self.decide(x, y, &key) ^ key.swapped)
        };
        self.ledger.record(key, ans);
        Ok(ans)
    }

    fn queries(&self) -> u64 {
        self.ledger.count()
    }

    fn reset_queries(&mut self) {
        self.ledger.reset();
    }
}

/// Oracle backed by a human (or a script) on line-oriented channels.
///
/// Prompt: `Q <id>: is d(<a>,<b>) <= d(<c>,<d>) ? [y/n]`, reply `y` or `n`.
/// Answers are memoized by canonical key so the same question is never asked
/// twice; three malformed replies abort the run.
type PairKey = ((ItemId, ItemId), (ItemId, ItemId));

pub struct InteractiveOracle<R, W> {
    input: R,
    output: W,
    memo: HashMap<PairKey, bool>,
    ledger: QueryLedger,
}

impl<R: BufRead, W: Write> InteractiveOracle<R, W> {
    pub fn new(input: R, output: W) -> Self {
        InteractiveOracle { input, output, memo: HashMap::new(), ledger: QueryLedger::default() }
    }

    fn prompt(&mut self, q: &QuadQuery) -> Result<bool> {
        for attempt in 1..=3 {
            writeln!(
                self.output,
                "Q {}: is d({},{}) <= d({},{}) ? [y/n]",
                self.ledger.count(),
                q.a,
                q.b,
                q.c,
                q.d
            )?;
            self.output.flush()?;
            let mut line = String::new();
            let read = self.input.read_line(&mut line)?;
            if read == 0 {
                return Err(Error::InteractiveAborted("input channel closed".into()));
            }
            match line.trim().to_ascii_lowercase().as_str() {
                "y" => return Ok(true),
                "n" => return Ok(false),
                other => {
                    if attempt == 3 {
                        return Err(Error::InteractiveAborted(format!(
                            "malformed response `{other}` after 3 attempts"
                        )));
                    }
                }
            }
        }
        unreachable!("loop returns or errors")
    }
}

impl<R: BufRead, W: Write> Oracle for InteractiveOracle<R, W> {
    fn compare_values(&mut self, _i: ItemId, _j: ItemId) -> Result<Answer> {
        Err(Error::Unsupported("interactive oracle answers quadruplet queries only".into()))
    }

    fn compare_distances(&mut self, q: QuadQuery) -> Result<Answer> {
        let key = canonicalize(&q);
        if key.pair1 == key.pair2 {
            self.ledger.record(key, Answer::Yes);
            return Ok(Answer::Yes);
        }
        let canonical = match self.memo.get(&key.pairs()) {
            Some(&stored) => stored,
            None => {
                let given = self.prompt(&q)?;
                let canonical = given ^ key.swapped;
                self.memo.insert(key.pairs(), canonical);
                canonical
            }
        };
        let ans = Answer::from_bool(canonical ^ key.swapped);
        self.ledger.record(key, ans);
        Ok(ans)
    }

    fn queries(&self) -> u64 {
        self.ledger.count()
    }

    fn reset_queries(&mut self) {
        self.ledger.reset();
    }
}
