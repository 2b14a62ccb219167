//! Geodesic distance histogram features for video segmentation.
//!
//! The crate is organised bottom-up:
//!
//! - [`image`] and [`pnm`]: dense planes, labeled volumes and the PGM/PPM formats.
//! - [`spgraph`]: per-frame superpixel graphs weighted by boundary strength.
//! - [`geodesic`]: shortest-path distance fields over frame graphs.
//! - [`histfeat`]: intensity-geodesic histograms, spatial voting weights and the
//!   two-level spatial pyramid.
//! - [`histdist`]: chi-square and Earth Mover's distances between features.
//! - [`stcluster`]: spatio-temporal graph, affinities and spectral clustering.
//! - [`supereval`]: 3D supervoxel benchmark metrics.
//! - [`synth`]: synthetic scenes, grid superpixels and boundary estimators.
//! - [`pipeline`]: end-to-end orchestration used by the `geohist` binary.

pub mod error;
pub mod geodesic;
pub mod histdist;
pub mod histfeat;
pub mod image;
pub mod pipeline;
pub mod pnm;
pub mod spgraph;
pub mod stcluster;
pub mod supereval;
pub mod synth;

pub use error::{Error, Result};
pub use geodesic::{all_source_geodesics, geodesic_from, GeodesicField, GeodesicFields};
pub use histdist::{chi_square_2d, emd_1d, emd_2d, pyramid_distance, Metric, PyramidWeights};
pub use histfeat::{
    build_1d_histogram, build_2d_histogram, build_pyramid_feature, spatial_weight, BinningConfig,
    GeodesicRange, Histogram1D, Histogram2D, PyramidFeature,
};
pub use image::{BoundaryMap, IntensityFrame, LabelFrame, LabeledVolume, Plane};
pub use spgraph::{build_frame_graph, combine_boundary_maps, BoundaryCombination, FrameGraph, Superpixel};
pub use supereval::MetricsReport;
