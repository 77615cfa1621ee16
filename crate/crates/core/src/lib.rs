//! Geometric graphs from sample features for semi-supervised classification.
//!
//! The pipeline: load or generate a dataset, build geometric graphs (kNN,
//! MkNN, CkNN, RMST over an MST backbone) from the pairwise Euclidean
//! distances of the L1-normalized features, train a two-layer GCN per graph,
//! diagnose graph quality (subspace alignment, ratio of class separation),
//! and compress the validation-optimal graph with spectral sparsification.
//!
//! Modules follow the workflow order:
//! - [`data`]: datasets, feature normalization, splits, the constructive
//!   stochastic-block-model generator.
//! - [`geometry`]: dense pairwise distance matrices and neighbor orderings.
//! - [`graphs`]: MST backbone and the four graph builders, density grids.
//! - [`gcn`]: normalized adjacency, two-layer GCN, training loop, baselines.
//! - [`diagnostics`]: PCA subspace alignment, exact t-SNE, class separation.
//! - [`sparsify`]: effective resistances and Spielman-Srivastava sampling.
//! - [`harness`]: densification/sparsification sweeps, reports, configs.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod gcn;
pub mod geometry;
pub mod graphs;
pub mod harness;
pub mod linalg;
pub mod sparsify;

pub use error::{Error, Result};
