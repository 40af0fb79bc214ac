//! Robust metric comparison operations over noisy comparison oracles.
//!
//! The only access to hidden values or distances is a Yes/No comparison
//! oracle that may answer incorrectly, either adversarially whenever the two
//! compared quantities are within a (1+mu) ratio, or persistently at random
//! with a fixed per-query flip probability. On top of that oracle this crate
//! provides maximum/minimum selection, farthest and nearest neighbor search,
//! greedy k-center clustering and agglomerative hierarchical clustering,
//! together with the baselines, evaluators and sweep harness used to check
//! their approximation and query-complexity behavior on simulated instances.
//!
//! ```
//! use noisy_compare::{dataset, maxfind, Direction, NoiseParams, Oracle, SimOracle};
//! use rand::SeedableRng;
//!
//! let g = dataset::gen_uniform_values(500, 42)?;
//! let mut oracle = SimOracle::new(&g, NoiseParams::probabilistic(0.3, 7));
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let winner = maxfind::elimination_max_values(
//!     &g.ids(), 0.1, 1.0, &mut oracle, Direction::Max, &mut rng)?;
//! assert!(noisy_compare::eval::value_rank(&g, winner, Direction::Max) < 50);
//! println!("{} oracle queries", oracle.queries());
//! # Ok::<(), noisy_compare::Error>(())
//! ```

pub mod dataset;
pub mod error;
pub mod eval;
pub mod harness;
pub mod hierarchical;
pub mod kcenter;
pub mod maxfind;
pub mod neighbor;
pub mod oracle;

pub use dataset::{GroundTruth, InputFormat, ItemId};
pub use error::{Error, Result};
pub use harness::{run_trial, Algo, Task, TrialReport};
pub use hierarchical::{Dendrogram, Linkage};
pub use kcenter::{Clustering, KCenterParams};
pub use maxfind::{Direction, SelectionParams};
pub use neighbor::CoreSet;
pub use oracle::{
    AdversaryStrategy, Answer, CanonicalKey, NoiseKind, NoiseParams, Oracle, QuadQuery, SimOracle,
};

/// Derive independent sub-seeds from one master seed, so oracle noise and
/// algorithm randomness never share a stream.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
