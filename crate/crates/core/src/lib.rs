//! Author name disambiguation engine.
//!
//! The pipeline partitions signatures into blocks by first initial and last
//! name ([`blocking`]), scores every within-block pair with a boosted-tree
//! classifier over the features in [`featurizer`] ([`pairwise_model`]), and
//! clusters each block with agglomerative clustering over the resulting
//! distance matrix ([`clusterer`]). [`evaluation`] provides B³, pairwise F1,
//! AUROC and average precision along with facet breakdowns.

pub mod blocking;
pub mod clusterer;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod featurizer;
pub mod pairwise_model;

pub use error::{Error, Result};
