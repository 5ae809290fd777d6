//! Hyperbolic continuous structural entropy hierarchical clustering.
//!
//! The crate builds a similarity graph over feature vectors, embeds the
//! vertices in the Lorentz model of hyperbolic space by minimizing a
//! differentiable relaxation of structural entropy (plus contrastive and
//! centroid regularizers, with bootstrapped graph structure learning), and
//! decodes the embedding into a binary partitioning tree. A discrete
//! structural-entropy subsystem scores trees, provides brute-force minima on
//! small graphs, and backs the verification oracles exposed by the CLI.
//!
//! Module map:
//! - [`geometry`]: Lorentz/Poincare kernels and the geodesic-origin distance.
//! - [`graph`]: weighted graphs, kNN construction, volume/cut/conductance,
//!   subgraph sampling.
//! - [`entropy`]: partitioning trees, structural entropy, brute-force minima,
//!   dendrogram purity, Dasgupta cost.
//! - [`cse`]: the continuous structural-entropy objective and companions.
//! - [`model`]: scalar autodiff tape, Lorentz layers, graph learner,
//!   optimizers.
//! - [`gsl`]: anchor bootstrapping, augmentation, contrastive loss.
//! - [`decode`]: embedding-to-tree decoding and tree serialization.
//! - [`pipeline`]: datasets, configuration, the training loop, exports.
//! - [`checks`]: oracle-backed property suites for the CLI.

pub mod checks;
pub mod cse;
pub mod decode;
pub mod entropy;
pub mod geometry;
pub mod graph;
pub mod gsl;
pub mod model;
pub mod pipeline;
