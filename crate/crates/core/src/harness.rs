//! Trial runner, baselines and experiment sweeps.
//!
//! A trial pairs one algorithm with one task on one instance under one noise
//! setting; the runner records the output, the evaluator-computed quality
//! metrics and the oracle ledger. Sweeps grid over noise levels and
//! algorithms and aggregate trial metrics per cell.

use std::time::Instant;

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, GroundTruth, InputFormat, ItemId};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::eval;
use crate::hierarchical::{self, Dendrogram, Linkage, MinFinder};
use crate::kcenter::{self, Clustering, FarthestFinder, KCenterParams};
use crate::maxfind::{self, Direction, SelectionParams};
use crate::neighbor::{self, CoreSet};
use crate::oracle::{NoiseKind, NoiseParams, Oracle, SimOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    /// The algorithms built in this crate.
    Robust,
    /// Binary tournament tree over the whole input, no repetition.
    Tour2,
    /// Compare only a small uniform sample.
    Samp,
    /// Greedy on the true distances; the reference every ratio is against.
    #[serde(rename = "tdist")]
    TDist,
}

impl Algo {
    pub fn label(&self) -> &'static str {
        match self {
            Algo::Robust => "robust",
            Algo::Tour2 => "tour2",
            Algo::Samp => "samp",
            Algo::TDist => "tdist",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Task {
    Max { dir: Direction },
    Farthest { query: ItemId },
    Nearest { query: ItemId },
    KCenter { k: usize },
    HCluster { linkage: Linkage },
}

impl Task {
    pub fn label(&self) -> String {
        match self {
            Task::Max { dir: Direction::Max } => "max".into(),
            Task::Max { dir: Direction::Min } => "min".into(),
            Task::Farthest { .. } => "farthest".into(),
            Task::Nearest { .. } => "nn".into(),
            Task::KCenter { k } => format!("kcenter-k{k}"),
            Task::HCluster { linkage: Linkage::Single } => "hcluster-single".into(),
            Task::HCluster { linkage: Linkage::Complete } => "hcluster-complete".into(),
        }
    }
}

/// One trial's outcome. Quality metrics are computed from ground truth by
/// the evaluators, never by the algorithms; ratios are normalized so that
/// 1.0 is perfect and larger is worse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub algorithm: String,
    pub task: String,
    pub noise: NoiseParams,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winner: Option<ItemId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimum_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<ItemId>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_vs_tdist: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fscore: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merges: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_merge_ratio: Option<f64>,
    pub queries: u64,
    pub wall_time: f64,
}

impl TrialReport {
    fn new(algo: Algo, task: &Task, noise: NoiseParams, seed: u64) -> Self {
        TrialReport {
            algorithm: algo.label().to_string(),
            task: task.label(),
            noise,
            seed,
            winner: None,
            true_rank: None,
            true_ratio: None,
            true_distance: None,
            optimum_distance: None,
            centers: None,
            objective: None,
            ratio_vs_tdist: None,
            fscore: None,
            merges: None,
            mean_merge_ratio: None,
            queries: 0,
            wall_time: 0.0,
        }
    }

    /// The task's headline quality ratio, whichever field carries it.
    pub fn ratio(&self) -> Option<f64> {
        self.true_ratio.or(self.ratio_vs_tdist).or(self.mean_merge_ratio)
    }
}

/// Full trial output; sweeps keep only the report.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub report: TrialReport,
    pub dendrogram: Option<Dendrogram>,
    pub clustering: Option<Clustering>,
}

/// Algorithm-side knobs for a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub algo: Algo,
    pub task: Task,
    pub noise: NoiseParams,
    pub selection: SelectionParams,
    pub kcenter: KCenterParams,
}

impl TrialSpec {
    pub fn new(algo: Algo, task: Task, noise: NoiseParams) -> Self {
        let delta = noise.delta;
        TrialSpec {
            algo,
            task,
            noise,
            selection: SelectionParams::theory(delta),
            kcenter: KCenterParams::new(1).with_delta(delta),
        }
    }
}

fn ratio_of(best: f64, got: f64, dir: Direction) -> f64 {
    match dir {
        Direction::Max => {
            if got == best {
                1.0
            } else {
                best / got
            }
        }
        Direction::Min => {
            if got == best {
                1.0
            } else if best == 0.0 {
                f64::INFINITY
            } else {
                got / best
            }
        }
    }
}

/// Run one trial. The master seed spawns independent oracle noise and
/// algorithm randomness streams; both are resampled per trial.
pub fn run_trial(g: &GroundTruth, spec: &TrialSpec, seed: u64) -> Result<TrialOutput> {
    let mut noise = spec.noise;
    noise.seed = derive_seed(seed, 0xA11CE);
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xB0B));
    let mut oracle = SimOracle::new(g, noise);
    let mut report = TrialReport::new(spec.algo, &spec.task, noise, seed);
    let started = Instant::now();
    let mut output = TrialOutput { report: report.clone(), dendrogram: None, clustering: None };

    match spec.task {
        Task::Max { dir } => {
            if !g.has_values() {
                return Err(Error::invalid("max task needs a values-mode instance"));
            }
            let items = g.ids();
            let winner = match spec.algo {
                Algo::Robust => {
                    if noise.kind == NoiseKind::Probabilistic && noise.p > 0.0 {
                        maxfind::elimination_max_values(
                            &items,
                            spec.selection.delta,
                            spec.selection.kappa,
                            &mut oracle,
                            dir,
                            &mut rng,
                        )?
                    } else {
                        maxfind::robust_max_values(
                            &items,
                            &spec.selection,
                            &mut oracle,
                            dir,
                            &mut rng,
                        )?
                    }
                }
                Algo::Tour2 => maxfind::tournament_values(&items, 2, &mut oracle, dir, &mut rng)?,
                Algo::Samp => {
                    let take = (items.len() as f64).sqrt().ceil() as usize;
                    let picks = index_sample(&mut rng, items.len(), take.min(items.len()));
                    let sample: Vec<ItemId> = picks.iter().map(|i| items[i]).collect();
                    maxfind::count_max_values(&sample, &mut oracle, dir)?
                }
                Algo::TDist => match dir {
                    Direction::Max => eval::true_max(g),
                    Direction::Min => eval::true_min(g),
                },
            };
            let best = match dir {
                Direction::Max => eval::true_max(g),
                Direction::Min => eval::true_min(g),
            };
            report.winner = Some(winner);
            report.true_rank = Some(eval::value_rank(g, winner, dir));
            report.true_ratio = Some(ratio_of(g.value(best), g.value(winner), dir));
        }
        Task::Farthest { query } | Task::Nearest { query } => {
            if !g.has_distances() {
                return Err(Error::invalid("neighbor tasks need a metric instance"));
            }
            g.check_id(query)?;
            let dir = match spec.task {
                Task::Farthest { .. } => Direction::Max,
                _ => Direction::Min,
            };
            let items: Vec<ItemId> = g.ids().into_iter().filter(|&u| u != query).collect();
            let winner = match spec.algo {
                Algo::Robust => {
                    if noise.kind == NoiseKind::Probabilistic && noise.p > 0.0 {
                        let size = CoreSet::required_size(spec.selection.delta);
                        let core = neighbor::heuristic_core(
                            query,
                            &items,
                            size,
                            spec.selection.delta,
                            &mut oracle,
                            &mut rng,
                        )?;
                        match dir {
                            Direction::Max => neighbor::farthest_with_core(
                                query,
                                &items,
                                &core,
                                &spec.selection,
                                &mut oracle,
                                &mut rng,
                            )?,
                            Direction::Min => neighbor::nearest_with_core(
                                query,
                                &items,
                                &core,
                                &spec.selection,
                                &mut oracle,
                                &mut rng,
                            )?,
                        }
                    } else {
                        match dir {
                            Direction::Max => neighbor::farthest(
                                query,
                                &items,
                                &spec.selection,
                                &mut oracle,
                                &mut rng,
                            )?,
                            Direction::Min => neighbor::nearest(
                                query,
                                &items,
                                &spec.selection,
                                &mut oracle,
                                &mut rng,
                            )?,
                        }
                    }
                }
                Algo::Tour2 => {
                    let mut leq = neighbor::distance_view_leq(query, &mut oracle);
                    maxfind::tournament(&items, 2, &mut leq, dir, &mut rng)?
                }
                Algo::Samp => {
                    let take = (items.len() as f64).sqrt().ceil() as usize;
                    let picks = index_sample(&mut rng, items.len(), take.min(items.len()));
                    let sample: Vec<ItemId> = picks.iter().map(|i| items[i]).collect();
                    let mut leq = neighbor::distance_view_leq(query, &mut oracle);
                    maxfind::count_max(&sample, &mut leq, dir)?
                }
                Algo::TDist => match dir {
                    Direction::Max => eval::true_farthest(g, query),
                    Direction::Min => eval::true_nearest(g, query),
                },
            };
            let best = match dir {
                Direction::Max => eval::true_farthest(g, query),
                Direction::Min => eval::true_nearest(g, query),
            };
            report.winner = Some(winner);
            report.true_rank = Some(eval::distance_rank(g, query, winner, dir));
            report.true_distance = Some(g.distance(query, winner));
            report.optimum_distance = Some(g.distance(query, best));
            report.true_ratio =
                Some(ratio_of(g.distance(query, best), g.distance(query, winner), dir));
        }
        Task::KCenter { k } => {
            if !g.has_distances() {
                return Err(Error::invalid("k-center needs a metric instance"));
            }
            let n = g.len();
            let mut params = spec.kcenter;
            params.k = k;
            let first = params
                .first_center
                .unwrap_or_else(|| rng.gen_range(0..n) as ItemId);
            params.first_center = Some(first);
            let clustering = match spec.algo {
                Algo::Robust => {
                    if noise.kind == NoiseKind::Probabilistic {
                        kcenter::greedy_sampled(n, &params, &mut oracle, &mut rng)?
                    } else {
                        kcenter::greedy(n, &params, &mut oracle, &mut rng)?
                    }
                }
                Algo::Tour2 => kcenter::greedy_with(
                    n,
                    &params,
                    FarthestFinder::Tournament2,
                    &mut oracle,
                    &mut rng,
                )?,
                Algo::Samp => samp_kcenter(g, &params, &mut oracle, &mut rng)?,
                Algo::TDist => {
                    let (centers, assign) = eval::greedy_kcenter_true(g, k, first)?;
                    Clustering {
                        centers,
                        assign,
                        cores: Default::default(),
                        sampled: Vec::new(),
                        undersized_cores: Vec::new(),
                        warnings: Vec::new(),
                    }
                }
            };
            let objective = eval::kcenter_objective(g, &clustering.centers, &clustering.assign)?;
            let (_, tdist_assign) = eval::greedy_kcenter_true(g, k, first)?;
            let tdist_centers: Vec<ItemId> = {
                let (c, _) = eval::greedy_kcenter_true(g, k, first)?;
                c
            };
            let tdist_obj = eval::kcenter_objective(g, &tdist_centers, &tdist_assign)?;
            report.centers = Some(clustering.centers.clone());
            report.objective = Some(objective);
            report.ratio_vs_tdist =
                Some(if objective == tdist_obj { 1.0 } else { objective / tdist_obj });
            if let Some(labels) = g.labels() {
                report.fscore = Some(eval::pairwise_fscore(&clustering.labels(), labels)?);
            }
            output.clustering = Some(clustering);
        }
        Task::HCluster { linkage } => {
            if !g.has_distances() {
                return Err(Error::invalid("hierarchical clustering needs a metric instance"));
            }
            let n = g.len();
            hierarchical::check_noise_supported(&noise, false)?;
            let (dendrogram, merged_dists): (Option<Dendrogram>, Vec<(usize, usize, usize)>) =
                match spec.algo {
                    Algo::Robust => {
                        let d = hierarchical::agglomerate(
                            n,
                            linkage,
                            spec.selection.delta,
                            &mut oracle,
                            &mut rng,
                        )?;
                        let m = d.merges.iter().map(|m| (m.left, m.right, m.new_id)).collect();
                        (Some(d), m)
                    }
                    Algo::Tour2 => {
                        let d = hierarchical::agglomerate_with(
                            n,
                            linkage,
                            spec.selection.delta,
                            MinFinder::Tournament2,
                            &mut oracle,
                            &mut rng,
                        )?;
                        let m = d.merges.iter().map(|m| (m.left, m.right, m.new_id)).collect();
                        (Some(d), m)
                    }
                    Algo::Samp => {
                        return Err(Error::Unsupported(
                            "the sampling baseline has no hierarchical variant".into(),
                        ))
                    }
                    Algo::TDist => {
                        let ms = eval::agglomerative_true(g, linkage)?;
                        let merges = ms
                            .iter()
                            .enumerate()
                            .map(|(i, &(a, b, id, _))| hierarchical::Merge {
                                left: a,
                                right: b,
                                new_id: id,
                                rep: (0, 0),
                                iteration: i,
                            })
                            .collect();
                        let m = ms.iter().map(|&(a, b, id, _)| (a, b, id)).collect();
                        (Some(Dendrogram { n, merges }), m)
                    }
                };
            // per-iteration merge quality against the true optimal merge
            let mut tracker = eval::LinkageTracker::new(g, linkage);
            let mut ratios = Vec::with_capacity(merged_dists.len());
            for (a, b, new_id) in merged_dists {
                let opt = tracker.optimal_merge_distance();
                let got = tracker.linkage_distance(a, b);
                ratios.push(if got == opt { 1.0 } else { got / opt });
                tracker.apply_merge(a, b, new_id);
            }
            report.merges = Some(ratios.len());
            report.mean_merge_ratio =
                Some(ratios.iter().sum::<f64>() / ratios.len().max(1) as f64);
            output.dendrogram = dendrogram;
        }
    }

    report.queries = oracle.queries();
    report.wall_time = started.elapsed().as_secs_f64();
    output.report = report;
    Ok(output)
}

/// The sampling baseline for k-center: greedy over a k*ln(n) sample, then
/// assign every point to the vote-winning center.
fn samp_kcenter<O: Oracle>(
    g: &GroundTruth,
    params: &KCenterParams,
    oracle: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<Clustering> {
    let n = g.len();
    let k = params.k;
    let sample_size =
        ((k as f64 * (n as f64).ln()).ceil() as usize).clamp(k, n);
    let picks = index_sample(rng, n, sample_size);
    let mut sample: Vec<ItemId> = picks.iter().map(|i| i as ItemId).collect();
    sample.sort_unstable();
    let first = params.first_center.filter(|c| sample.contains(c)).unwrap_or_else(|| {
        sample[rng.gen_range(0..sample.len())]
    });
    let mut centers = vec![first];
    let mut cache = kcenter::CenterVoteCache::new();
    // greedy over the sample: full count-based farthest, vote-based assign
    let mut sample_assign: Vec<(ItemId, ItemId)> =
        sample.iter().map(|&u| (u, first)).collect();
    for _ in 1..k {
        let candidates: Vec<ItemId> =
            sample.iter().copied().filter(|u| !centers.contains(u)).collect();
        if candidates.is_empty() {
            break;
        }
        let assign_of = |u: ItemId, sa: &[(ItemId, ItemId)]| {
            sa.iter().find(|&&(x, _)| x == u).map(|&(_, c)| c).unwrap()
        };
        let next = {
            let sa = sample_assign.clone();
            let mut leq = |a: ItemId, b: ItemId| {
                Ok(oracle
                    .compare_distances(crate::oracle::QuadQuery::new(
                        a,
                        assign_of(a, &sa),
                        b,
                        assign_of(b, &sa),
                    ))?
                    .as_bool())
            };
            maxfind::count_max(&candidates, &mut leq, Direction::Max)?
        };
        centers.push(next);
        for entry in sample_assign.iter_mut() {
            let u = entry.0;
            let mut best = centers[0];
            let mut best_score = kcenter::center_score(u, centers[0], &centers, oracle, &mut cache)?;
            for &c in &centers[1..] {
                let s = kcenter::center_score(u, c, &centers, oracle, &mut cache)?;
                if s > best_score {
                    best = c;
                    best_score = s;
                }
            }
            entry.1 = best;
        }
    }
    let assign = kcenter::assign_by_center_score(n, &centers, oracle, &mut cache)?;
    Ok(Clustering {
        centers,
        assign,
        cores: Default::default(),
        sampled: sample,
        undersized_cores: Vec::new(),
        warnings: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// sweeps

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InstanceSpec {
    File { path: String, format: InputFormat },
    UniformValues { n: usize },
    UniformPoints { n: usize, dim: usize },
    GeometricChain { n: usize, mu: f64, eps: f64 },
    PlantedClusters { n: usize, k: usize, separation: f64, m_min: usize },
}

impl InstanceSpec {
    pub fn materialize(&self, seed: u64) -> Result<GroundTruth> {
        match self {
            InstanceSpec::File { path, format } => dataset::load_dataset(path, *format),
            InstanceSpec::UniformValues { n } => dataset::gen_uniform_values(*n, seed),
            InstanceSpec::UniformPoints { n, dim } => dataset::gen_uniform_points(*n, *dim, seed),
            InstanceSpec::GeometricChain { n, mu, eps } => {
                dataset::gen_geometric_chain(*n, *mu, *eps)
            }
            InstanceSpec::PlantedClusters { n, k, separation, m_min } => {
                dataset::gen_planted_clusters(*n, *k, *separation, *m_min, seed)
            }
        }
    }
}

/// Either a list of adversarial mu levels or probabilistic p levels; an
/// empty grid means a single exact-oracle cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum NoiseGrid {
    Exact,
    Adversarial { mus: Vec<f64>, adversary: crate::oracle::AdversaryStrategy },
    Probabilistic { ps: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Theory,
    #[default]
    Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub task: Task,
    pub instance: InstanceSpec,
    pub noise: NoiseGrid,
    pub delta: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub algorithms: Vec<Algo>,
    #[serde(default)]
    pub selection_preset: Preset,
    #[serde(default)]
    pub gamma_preset: Preset,
    #[serde(default)]
    pub m: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub task: String,
    pub algorithm: String,
    pub noise_kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub trials: usize,
    pub mean_ratio: f64,
    pub median_ratio: f64,
    pub q10_ratio: f64,
    pub q90_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_rank: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_fscore: Option<f64>,
    pub mean_queries: f64,
    pub median_queries: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub cells: Vec<CellReport>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    }
}

fn aggregate(task: &Task, algo: Algo, noise: &NoiseParams, reports: &[TrialReport]) -> CellReport {
    let mut ratios: Vec<f64> = reports.iter().filter_map(|r| r.ratio()).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut queries: Vec<f64> = reports.iter().map(|r| r.queries as f64).collect();
    queries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ranks: Vec<f64> =
        reports.iter().filter_map(|r| r.true_rank.map(|x| x as f64)).collect();
    let mut fscores: Vec<f64> = reports.iter().filter_map(|r| r.fscore).collect();
    fscores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    CellReport {
        task: task.label(),
        algorithm: algo.label().to_string(),
        noise_kind: format!("{:?}", noise.kind).to_lowercase(),
        mu: (noise.kind == NoiseKind::Adversarial).then_some(noise.mu),
        p: (noise.kind == NoiseKind::Probabilistic).then_some(noise.p),
        trials: reports.len(),
        mean_ratio: ratios.iter().sum::<f64>() / ratios.len().max(1) as f64,
        median_ratio: quantile(&ratios, 0.5),
        q10_ratio: quantile(&ratios, 0.1),
        q90_ratio: quantile(&ratios, 0.9),
        mean_rank: (!ranks.is_empty())
            .then(|| ranks.iter().sum::<f64>() / ranks.len() as f64),
        median_fscore: (!fscores.is_empty()).then(|| quantile(&fscores, 0.5)),
        mean_queries: queries.iter().sum::<f64>() / queries.len().max(1) as f64,
        median_queries: quantile(&queries, 0.5),
    }
}

fn noise_points(grid: &NoiseGrid, delta: f64) -> Vec<NoiseParams> {
    match grid {
        NoiseGrid::Exact => vec![NoiseParams::exact(0).with_delta(delta)],
        NoiseGrid::Adversarial { mus, adversary } => mus
            .iter()
            .map(|&mu| NoiseParams::adversarial(mu, *adversary, 0).with_delta(delta))
            .collect(),
        NoiseGrid::Probabilistic { ps } => {
            ps.iter().map(|&p| NoiseParams::probabilistic(p, 0).with_delta(delta)).collect()
        }
    }
}

/// Maximum worker threads for sweep trials: the NOISY_COMPARE_THREADS
/// environment variable, defaulting to the machine's parallelism.
pub fn trial_threads() -> usize {
    std::env::var("NOISY_COMPARE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1))
}

/// Run a sweep: every noise level crossed with every algorithm, `trials`
/// seeded trials per cell, aggregated per cell. Deterministic for a fixed
/// master seed regardless of thread count.
pub fn sweep(config: &SweepConfig) -> Result<SweepReport> {
    if config.trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    if !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    let g = config.instance.materialize(derive_seed(config.master_seed, 0xDA7A))?;
    let selection = match config.selection_preset {
        Preset::Theory => SelectionParams::theory(config.delta),
        Preset::Experiment => SelectionParams::experiment(config.delta),
    };
    let mut kc = KCenterParams::new(1).with_delta(config.delta);
    if config.gamma_preset == Preset::Theory {
        kc = kc.theory_gamma();
    }
    kc.m = config.m;
    let threads = trial_threads();
    let mut cells = Vec::new();
    for (cell_idx, noise) in noise_points(&config.noise, config.delta).into_iter().enumerate() {
        for &algo in &config.algorithms {
            let spec = TrialSpec { algo, task: config.task, noise, selection, kcenter: kc };
            let seeds: Vec<u64> = (0..config.trials)
                .map(|t| {
                    derive_seed(
                        config.master_seed,
                        ((cell_idx as u64) << 40) ^ ((algo as u64) << 32) ^ t as u64,
                    )
                })
                .collect();
            let reports = run_trials_parallel(&g, &spec, &seeds, threads)?;
            cells.push(aggregate(&config.task, algo, &noise, &reports));
        }
    }
    Ok(SweepReport { config: config.clone(), cells })
}

fn run_trials_parallel(
    g: &GroundTruth,
    spec: &TrialSpec,
    seeds: &[u64],
    threads: usize,
) -> Result<Vec<TrialReport>> {
    if threads <= 1 || seeds.len() <= 1 {
        return seeds.iter().map(|&s| run_trial(g, spec, s).map(|o| o.report)).collect();
    }
    let chunk = seeds.len().div_ceil(threads);
    let mut slots: Vec<Option<Result<TrialReport>>> = Vec::new();
    slots.resize_with(seeds.len(), || None);
    std::thread::scope(|scope| {
        for (c, slot_chunk) in slots.chunks_mut(chunk).enumerate() {
            let seeds = &seeds[c * chunk..(c * chunk + slot_chunk.len())];
            scope.spawn(move || {
                for (slot, &seed) in slot_chunk.iter_mut().zip(seeds) {
                    *slot = Some(run_trial(g, spec, seed).map(|o| o.report));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("trial ran")).collect()
}

/// Frozen CSV schema for sweep cells.
pub const CSV_HEADER: &str = "task,algorithm,noise_kind,mu,p,delta,trials,mean_ratio,median_ratio,q10_ratio,q90_ratio,mean_rank,median_fscore,mean_queries,median_queries";

pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for c in &report.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.task,
            c.algorithm,
            c.noise_kind,
            fmt_opt(c.mu),
            fmt_opt(c.p),
            report.config.delta,
            c.trials,
            c.mean_ratio,
            c.median_ratio,
            c.q10_ratio,
            c.q90_ratio,
            fmt_opt(c.mean_rank),
            fmt_opt(c.median_fscore),
            c.mean_queries,
            c.median_queries,
        ));
    }
    out
}
