//! Spatio-temporal superpixel graph, affinities, and spectral clustering into
//! supervoxels.

mod affinity;
mod graph;
mod spectral;

pub use affinity::{build_affinity, combine_affinities, feature_affinity, AffinityMatrix, AffinityParams, GammaMode};
pub use graph::{build_st_graph, overlap_pairs, EdgeKind, SpatioTemporalGraph, StEdge};
pub use spectral::{
    kmeans, labels_to_volume, normalized_laplacian, spectral_cluster, spectral_embedding, SegmentationLabeling,
    KMEANS_MAX_ITERATIONS,
};
