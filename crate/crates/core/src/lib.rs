//! Majority depth of a query point with respect to a planar point set,
//! estimated by sampling point pairs and deciding for each sampled pair
//! whether its closed halfplane holds at least half of the set.
//!
//! The side test is backed by a chain of successively halved subsets, each
//! stored in a [`partition_tree::PartitionTree`], so that far-from-median
//! pairs are resolved on tiny subsets and only near-median pairs pay for an
//! exact count. Exact oracles in [`depth`] cross-check the estimator.

pub mod approx_counting;
pub mod datasets;
pub mod depth;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod low_crossing;
pub mod median_side;
pub mod partition_tree;
pub mod verify;

pub use error::{Error, Result};
