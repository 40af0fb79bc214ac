//! `noisy-compare`: selection and clustering when the only access to the
//! data is a noisy Yes/No comparison oracle.
//!
//! Every subcommand loads a hidden ground truth, simulates (or proxies) the
//! oracle, runs the requested algorithm against it and reports the outcome
//! together with evaluator-computed quality metrics and the query count.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use noisy_compare::dataset::{load_dataset, GroundTruth, InputFormat, ItemId};
use noisy_compare::harness::{self, Algo, Task, TrialOutput, TrialSpec};
use noisy_compare::hierarchical::{self, Linkage};
use noisy_compare::kcenter::KCenterParams;
use noisy_compare::maxfind::Direction;
use noisy_compare::neighbor;
use noisy_compare::oracle::{
    AdversaryStrategy, InteractiveOracle, NoiseKind, NoiseParams, Oracle,
};
use noisy_compare::{derive_seed, eval, Error, SelectionParams};

#[derive(Parser)]
#[command(name = "noisy-compare", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find the maximum (or minimum) hidden value
    Max(MaxArgs),
    /// Find the farthest point from a query point
    Farthest(NeighborArgs),
    /// Find the nearest neighbor of a query point
    Nn(NeighborArgs),
    /// Greedy k-center clustering
    Kcenter(KcenterArgs),
    /// Agglomerative hierarchical clustering
    Hcluster(HclusterArgs),
    /// Run a sweep over noise levels and algorithms from a config file
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    PointsCsv,
    Matrix,
    ValuesCsv,
}

impl From<FormatArg> for InputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::PointsCsv => InputFormat::PointsCsv,
            FormatArg::Matrix => InputFormat::Matrix,
            FormatArg::ValuesCsv => InputFormat::ValuesCsv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    None,
    Adversarial,
    Probabilistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdversaryArg {
    Pessimistic,
    RandomInBand,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Robust,
    Tour2,
    Samp,
    Tdist,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Robust => Algo::Robust,
            AlgoArg::Tour2 => Algo::Tour2,
            AlgoArg::Samp => Algo::Samp,
            AlgoArg::Tdist => Algo::TDist,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Theory,
    Experiment,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirArg {
    Max,
    Min,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkageArg {
    Single,
    Complete,
}

#[derive(Args)]
struct CommonArgs {
    /// Dataset file
    #[arg(long)]
    input: PathBuf,
    /// Dataset file format
    #[arg(long, value_enum)]
    format: FormatArg,
    /// Noise model of the simulated oracle
    #[arg(long, value_enum, default_value = "none")]
    noise: NoiseArg,
    /// Adversarial band parameter
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Probabilistic flip probability
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    /// Confidence parameter of the algorithms
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Master seed: oracle noise and algorithm randomness derive from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// In-band strategy of the adversarial oracle
    #[arg(long, value_enum, default_value = "pessimistic")]
    adversary: AdversaryArg,
    /// Algorithm to run
    #[arg(long, value_enum, default_value = "robust")]
    algorithm: AlgoArg,
    /// Parameter preset for the selection machinery
    #[arg(long, value_enum, default_value = "theory")]
    preset: PresetArg,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn noise_params(&self) -> Result<NoiseParams, Error> {
        let kind = match self.noise {
            NoiseArg::None => NoiseKind::None,
            NoiseArg::Adversarial => NoiseKind::Adversarial,
            NoiseArg::Probabilistic => NoiseKind::Probabilistic,
        };
        let adversary = match self.adversary {
            AdversaryArg::Pessimistic => AdversaryStrategy::Pessimistic,
            AdversaryArg::RandomInBand => AdversaryStrategy::RandomInBand,
        };
        let params = NoiseParams { kind, mu: self.mu, p: self.p, delta: self.delta, seed: 0, adversary };
        for w in params.validate()? {
            eprintln!("warning: {w}");
        }
        Ok(params)
    }

    fn selection(&self) -> SelectionParams {
        match self.preset {
            PresetArg::Theory => SelectionParams::theory(self.delta),
            PresetArg::Experiment => SelectionParams::experiment(self.delta),
        }
    }

    fn load(&self) -> Result<GroundTruth, Error> {
        load_dataset(&self.input, self.format.into())
    }

    fn emit<T: Serialize>(&self, value: &T) -> Result<(), Error> {
        let json = serde_json::to_string_pretty(value)?;
        match &self.out {
            Some(path) => std::fs::write(path, json + "\n")?,
            None => println!("{json}"),
        }
        Ok(())
    }
}

#[derive(Args)]
struct MaxArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Search direction
    #[arg(long, value_enum, default_value = "max")]
    dir: DirArg,
}

#[derive(Args)]
struct NeighborArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Query point id
    #[arg(long)]
    query: ItemId,
    /// Ask a human on stdin/stdout instead of simulating the oracle
    #[arg(long, default_value_t = false)]
    interactive: bool,
}

#[derive(Args)]
struct KcenterArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of centers
    #[arg(long)]
    k: usize,
    /// Smallest optimal cluster size (probabilistic mode); default n/(5k)
    #[arg(long)]
    m: Option<usize>,
    /// Core-size constant preset: 450 (theory) or 2 (experiment)
    #[arg(long, value_enum, default_value = "experiment")]
    gamma_preset: PresetArg,
    /// Fix the first center instead of picking it at random
    #[arg(long)]
    first_center: Option<ItemId>,
}

#[derive(Args)]
struct HclusterArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Linkage criterion
    #[arg(long, value_enum, default_value = "single")]
    linkage: LinkageArg,
    /// Pre-partition label file (values-csv of integer labels); required for
    /// probabilistic noise
    #[arg(long)]
    partition: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Sweep configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-cell aggregates as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Max(args) => {
            let g = args.common.load()?;
            let dir = match args.dir {
                DirArg::Max => Direction::Max,
                DirArg::Min => Direction::Min,
            };
            let spec = TrialSpec {
                algo: args.common.algorithm.into(),
                task: Task::Max { dir },
                noise: args.common.noise_params()?,
                selection: args.common.selection(),
                kcenter: KCenterParams::new(1).with_delta(args.common.delta),
            };
            let out = harness::run_trial(&g, &spec, args.common.seed)?;
            args.common.emit(&out.report)
        }
        Cmd::Farthest(args) => run_neighbor(args, Direction::Max),
        Cmd::Nn(args) => run_neighbor(args, Direction::Min),
        Cmd::Kcenter(args) => {
            let g = args.common.load()?;
            let mut kc = KCenterParams::new(args.k).with_delta(args.common.delta);
            if matches!(args.gamma_preset, PresetArg::Theory) {
                kc = kc.theory_gamma();
            }
            kc.m = args.m;
            kc.first_center = args.first_center;
            let spec = TrialSpec {
                algo: args.common.algorithm.into(),
                task: Task::KCenter { k: args.k },
                noise: args.common.noise_params()?,
                selection: args.common.selection(),
                kcenter: kc,
            };
            let out = harness::run_trial(&g, &spec, args.common.seed)?;
            args.common.emit(&out.report)
        }
        Cmd::Hcluster(args) => run_hcluster(args),
        Cmd::Bench(args) => {
            let text = std::fs::read_to_string(&args.config)?;
            let config: harness::SweepConfig = serde_json::from_str(&text)?;
            let report = harness::sweep(&config)?;
            if let Some(path) = &args.csv {
                std::fs::write(path, harness::sweep_csv(&report))?;
            }
            let json = serde_json::to_string_pretty(&report)?;
            match &args.out {
                Some(path) => std::fs::write(path, json + "\n")?,
                None => println!("{json}"),
            }
            Ok(())
        }
    }
}

fn run_neighbor(args: NeighborArgs, dir: Direction) -> Result<(), Error> {
    let task = match dir {
        Direction::Max => Task::Farthest { query: args.query },
        Direction::Min => Task::Nearest { query: args.query },
    };
    let g = args.common.load()?;
    if args.interactive {
        return run_neighbor_interactive(&args, &g, dir, task);
    }
    let spec = TrialSpec {
        algo: args.common.algorithm.into(),
        task,
        noise: args.common.noise_params()?,
        selection: args.common.selection(),
        kcenter: KCenterParams::new(1).with_delta(args.common.delta),
    };
    let out = harness::run_trial(&g, &spec, args.common.seed)?;
    args.common.emit(&out.report)
}

/// Interactive runs answer through stdin/stdout with memoized prompts; the
/// loaded ground truth is still used by the evaluator fields of the report.
fn run_neighbor_interactive(
    args: &NeighborArgs,
    g: &GroundTruth,
    dir: Direction,
    task: Task,
) -> Result<(), Error> {
    if !g.has_distances() {
        return Err(Error::invalid("interactive mode needs a metric instance"));
    }
    g.check_id(args.query)?;
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut oracle = InteractiveOracle::new(stdin.lock(), stdout.lock());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.common.seed, 0xB0B));
    let items: Vec<ItemId> = g.ids().into_iter().filter(|&u| u != args.query).collect();
    let selection = args.common.selection();
    let winner = match dir {
        Direction::Max => {
            neighbor::farthest(args.query, &items, &selection, &mut oracle, &mut rng)?
        }
        Direction::Min => {
            neighbor::nearest(args.query, &items, &selection, &mut oracle, &mut rng)?
        }
    };
    let best = match dir {
        Direction::Max => eval::true_farthest(g, args.query),
        Direction::Min => eval::true_nearest(g, args.query),
    };
    #[derive(Serialize)]
    struct InteractiveReport {
        task: String,
        winner: ItemId,
        true_distance: f64,
        optimum_distance: f64,
        queries: u64,
    }
    let report = InteractiveReport {
        task: task.label(),
        winner,
        true_distance: g.distance(args.query, winner),
        optimum_distance: g.distance(args.query, best),
        queries: oracle.queries(),
    };
    let mut err = std::io::stderr();
    writeln!(err, "done: {} queries", oracle.queries())?;
    args.common.emit(&report)
}

fn run_hcluster(args: HclusterArgs) -> Result<(), Error> {
    let g = args.common.load()?;
    let linkage = match args.linkage {
        LinkageArg::Single => Linkage::Single,
        LinkageArg::Complete => Linkage::Complete,
    };
    let noise = args.common.noise_params()?;
    hierarchical::check_noise_supported(&noise, args.partition.is_some())?;

    #[derive(Serialize)]
    struct HclusterReport {
        #[serde(flatten)]
        report: harness::TrialReport,
        dendrogram: noisy_compare::Dendrogram,
        newick: String,
    }

    if let Some(path) = &args.partition {
        // gated probabilistic mode: leaves are the supplied groups
        let labels = read_partition(path, g.len())?;
        let max_label = *labels.iter().max().expect("nonempty");
        let mut groups: Vec<Vec<ItemId>> = vec![Vec::new(); max_label + 1];
        for (i, &l) in labels.iter().enumerate() {
            groups[l].push(i as ItemId);
        }
        groups.retain(|grp| !grp.is_empty());
        let mut noise = noise;
        noise.seed = derive_seed(args.common.seed, 0xA11CE);
        let mut oracle = noisy_compare::SimOracle::new(&g, noise);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.common.seed, 0xB0B));
        let dendrogram = hierarchical::agglomerate_partitioned(
            &groups,
            linkage,
            args.common.delta,
            &mut oracle,
            &mut rng,
        )?;
        #[derive(Serialize)]
        struct PartitionedReport {
            task: String,
            groups: usize,
            queries: u64,
            dendrogram: noisy_compare::Dendrogram,
            newick: String,
        }
        let newick = dendrogram.newick();
        return args.common.emit(&PartitionedReport {
            task: Task::HCluster { linkage }.label(),
            groups: groups.len(),
            queries: oracle.queries(),
            dendrogram,
            newick,
        });
    }

    let spec = TrialSpec {
        algo: args.common.algorithm.into(),
        task: Task::HCluster { linkage },
        noise,
        selection: args.common.selection(),
        kcenter: KCenterParams::new(1).with_delta(args.common.delta),
    };
    let TrialOutput { report, dendrogram, .. } = harness::run_trial(&g, &spec, args.common.seed)?;
    let dendrogram = dendrogram.ok_or_else(|| Error::invalid("no dendrogram produced"))?;
    let newick = dendrogram.newick();
    args.common.emit(&HclusterReport { report, dendrogram, newick })
}

fn read_partition(path: &PathBuf, n: usize) -> Result<Vec<usize>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "label" => {}
        _ => return Err(Error::parse("partition file must start with a `label` header")),
    }
    let labels: Vec<usize> = lines
        .map(|l| l.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::parse(format!("partition file: {e}")))?;
    if labels.len() != n {
        return Err(Error::invalid(format!(
            "partition has {} labels for {n} points",
            labels.len()
        )));
    }
    Ok(labels)
}
