//! End-to-end orchestration: loading, feature extraction, clustering,
//! evaluation and overlay rendering.

mod config;
mod render;
mod run;

pub use config::{PipelineConfig, SegmentParams};
pub use render::{blend, label_color, overlay_frame, render_overlays};
pub use run::{
    analyze_frames, boundary_maps, count_segments, list_pgm, load_input, read_label_volume, resolve_k, run_pipeline,
    segment_video, write_features, FrameAnalysis, PipelineOutput, ResolvedRun, RunManifest, Segmentation, VideoInput,
    AFFINITY_FILE, FEATURES_DIR, LABELS_DIR, METRICS_FILE, RUN_MANIFEST_FILE,
};
