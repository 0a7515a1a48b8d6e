//! Fuzzy topic modeling over document embeddings.
//!
//! The engine projects document embeddings to two dimensions with exact
//! t-SNE, clusters the projection with HDBSCAN, and turns the condensed
//! cluster hierarchy into per-document fuzzy membership vectors. A
//! two-phase driver re-projects and re-clusters every phase-one topic to
//! surface finer sub-topics and ranks representative documents by
//! membership.
//!
//! Module map:
//!
//! * [`embedding`]: document metadata, embedding files, sentence pooling.
//! * [`metric`]: pairwise, core, and mutual-reachability distances.
//! * [`tsne`]: affinity calibration, KL objective, gradient, optimizer.
//! * [`hierarchy`]: MST, single linkage, condensed tree, cluster selection,
//!   GLOSH outlier scores.
//! * [`membership`]: soft cluster membership and representative ranking.
//! * [`pipeline`]: grid search and the two-phase workflow.
//! * [`report`] and [`render`]: CSV/JSON-lines output and SVG scatter plots.

pub mod embedding;
pub mod hierarchy;
pub mod matrix;
pub mod membership;
pub mod metric;
pub mod pipeline;
mod quadtree;
pub mod render;
pub mod report;
pub mod rng;
pub mod tsne;

pub use embedding::{DocId, Document, EmbeddingFormat, EmbeddingSet};
pub use hierarchy::{ClusterSelection, CondensedTree, MstEdge, OutlierScores, NOISE};
pub use matrix::Matrix;
pub use membership::{ExemplarSet, GloshSign, MembershipMatrix};
pub use metric::{DistanceMatrix, Metric, MetricConfig, MutualReachabilityMatrix};
pub use pipeline::{PhaseResult, Phase2Scope, PipelineConfig, TopicReport};
pub use tsne::{AffinityMatrix, Projection, TsneConfig};
