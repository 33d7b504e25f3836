//! Bumped ribbon retrieval: a static-function data structure storing
//! `f: S -> {0,1}^r` close to the `r * |S|`-bit lower bound.
//!
//! Keys hash to short windows of a nearly diagonal GF(2) system; solving
//! it yields a table whose masked XOR reproduces each key's value.
//! Buckets that would make the system unsolvable *bump* their key suffix
//! to the next layer, and the same mechanism detaches construction
//! partitions at thread boundaries, so parallel construction leaves no
//! trace in the finished structure: queries are identical no matter how
//! many threads built it.
//!
//! The main entry points are [`RetrievalStructure`] for general `r`-bit
//! retrieval and [`RibbonFilter`] for approximate membership.

pub mod filter;
pub mod hash;
pub mod layer;
pub mod parallel;
pub mod solver;
pub mod threshold;

pub use filter::RibbonFilter;
pub use hash::{fingerprint, master_hash, MasterHash};
pub use layer::{
    BaseLayer, BuildConfig, BuildError, BuildStats, Layer, LayerReport, RetrievalStructure,
};
pub use parallel::CutStrategy;
pub use threshold::ThresholdMode;
