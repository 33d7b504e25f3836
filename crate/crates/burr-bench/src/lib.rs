//! Structure file serialization, space metrics, and benchmark harnesses
//! for the `burr` retrieval structure.

pub mod bench;
pub mod format;
pub mod metrics;
