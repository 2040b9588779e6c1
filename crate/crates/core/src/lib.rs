//! Edge-flip differentially private community detection.
//!
//! The crate samples stochastic block models, applies the randomized-response
//! edge flip, recovers communities with spectral clustering on the downshifted
//! observed adjacency, and scores the result against ground truth.

pub mod block_model;
pub mod cluster;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod mechanism;
pub mod metrics;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{community_stats, CommunityStats, Graph, LabelVector};
pub use mechanism::PrivacyBudget;
