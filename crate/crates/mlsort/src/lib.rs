//! Learned-CDF sorting.
//!
//! Instead of comparing keys, the sorter learns the key distribution: a
//! small monotone model is fitted to the empirical CDF of a random sample,
//! each key's rank is predicted in Θ(M) (M = hidden-layer size), keys are
//! placed into rank buckets, and a local repair pass finishes the job. The
//! distance between bucket occupancy and the binomial balls-into-bins law
//! is itself a quality metric, checked by the [`analysis`] module.
//!
//! The crate is generic over the key scalar (`f32` or `f64`, via
//! [`Scalar`]); the aliases below fix the default `f64` precision used by
//! the CLI and the file formats.
//!
//! ```
//! use mlsort::{ml_sort, SortConfig};
//!
//! let spec = mlsort::dist::Preset::Bimodal.spec::<f64>(7);
//! let keys = spec.generate(50_000).unwrap();
//! let cfg = SortConfig { n0: 1_000, ..SortConfig::default() };
//! let sorted = ml_sort(&keys, &cfg).unwrap();
//! assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
//! ```

pub mod analysis;
pub mod dist;
pub mod error;
pub mod model;
pub mod rank_index;
pub mod scalar;
pub mod sorter;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use dist::{DistributionSpec, Preset};
pub use model::{CdfModel, FittedModel, ModelKind, TrainConfig};
pub use sorter::{ml_sort, ml_sort_with_report, Order, SortConfig, SortOutcome, SortReport};

/// Default key precision used by the CLI and the on-disk formats.
pub type Key = f64;

/// A raw key sequence at default precision.
pub type KeyVector = Vec<Key>;

/// Default-precision instantiations of the core types.
pub type DistributionSpec64 = dist::DistributionSpec<Key>;
pub type Gvm64 = model::Gvm<Key>;
pub type PiecewiseLinear64 = model::PiecewiseLinear<Key>;
pub type FittedModel64 = model::FittedModel<Key>;
pub type RankIndex64 = rank_index::RankIndex<Key>;

/// Single-precision variants.
pub type Gvm32 = model::Gvm<f32>;
pub type PiecewiseLinear32 = model::PiecewiseLinear<f32>;
