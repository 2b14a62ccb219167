use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{PipelineConfig, SegmentParams};
use crate::error::{Error, Result};
use crate::geodesic::all_source_geodesics;
use crate::histfeat::{frame_features, write_features_csv, PyramidFeature};
use crate::image::{BoundaryMap, IntensityFrame, LabeledVolume};
use crate::pnm;
use crate::spgraph::{build_frame_graph, combine_boundary_maps, FrameGraph, BOUNDARY_STRENGTH_ESTIMATOR};
use crate::stcluster::{
    build_affinity, build_st_graph, labels_to_volume, spectral_cluster, AffinityMatrix, AffinityParams, EdgeKind,
    SegmentationLabeling, KMEANS_MAX_ITERATIONS,
};
use crate::supereval::MetricsReport;
use crate::synth::{motion_boundary_maps, sobel_boundary_map, write_label_volume, RNG_ALGORITHM};

pub const LABELS_DIR: &str = "labels";
pub const METRICS_FILE: &str = "metrics.json";
pub const RUN_MANIFEST_FILE: &str = "manifest.json";
pub const AFFINITY_FILE: &str = "affinity.mtx";
pub const FEATURES_DIR: &str = "features";

/// A video held in memory.
#[derive(Debug, Clone)]
pub struct VideoInput {
    pub frames: Vec<IntensityFrame>,
    pub superpixels: LabeledVolume,
    pub ground_truth: Option<LabeledVolume>,
    /// Spatial boundary maps; estimated from the frames when absent.
    pub spatial_boundaries: Option<Vec<BoundaryMap>>,
}

impl VideoInput {
    pub fn validate(&self) -> Result<()> {
        let sp = &self.superpixels;
        if self.frames.len() != sp.num_frames() {
            return Err(Error::FrameCountMismatch {
                expected: sp.num_frames(),
                actual: self.frames.len(),
            });
        }
        let check = |w: usize, h: usize| {
            if (w, h) != (sp.width(), sp.height()) {
                Err(Error::DimensionMismatch {
                    expected_width: sp.width(),
                    expected_height: sp.height(),
                    width: w,
                    height: h,
                })
            } else {
                Ok(())
            }
        };
        for f in &self.frames {
            check(f.width(), f.height())?;
        }
        if let Some(gt) = &self.ground_truth {
            sp.check_same_shape(gt)?;
        }
        if let Some(b) = &self.spatial_boundaries {
            if b.len() != sp.num_frames() {
                return Err(Error::FrameCountMismatch {
                    expected: sp.num_frames(),
                    actual: b.len(),
                });
            }
            for m in b {
                check(m.width(), m.height())?;
            }
        }
        Ok(())
    }
}

/// Combined boundary map per frame.
pub fn boundary_maps(input: &VideoInput, params: &SegmentParams) -> Result<Vec<BoundaryMap>> {
    let spatial = match &input.spatial_boundaries {
        Some(maps) => maps.clone(),
        None => input
            .frames
            .par_iter()
            .map(|f| sobel_boundary_map(f, params.boundary_sigma))
            .collect::<Result<Vec<_>>>()?,
    };
    if params.boundary_mode == crate::spgraph::BoundaryCombination::SpatialOnly {
        return Ok(spatial);
    }
    let motion = motion_boundary_maps(&input.frames, params.boundary_sigma)?;
    spatial
        .iter()
        .zip(&motion)
        .map(|(s, m)| combine_boundary_maps(s, Some(m), params.boundary_mode))
        .collect()
}

#[derive(Debug, Clone)]
pub struct FrameAnalysis {
    pub graph: FrameGraph,
    pub geodesic_upper: f64,
    pub features: Vec<PyramidFeature>,
}

/// Frame graphs, and geodesic histogram features when `with_features`.
pub fn analyze_frames(input: &VideoInput, params: &SegmentParams, with_features: bool) -> Result<Vec<FrameAnalysis>> {
    params.validate()?;
    input.validate()?;
    let boundaries = boundary_maps(input, params)?;
    (0..input.frames.len())
        .into_par_iter()
        .map(|t| {
            let graph = build_frame_graph(t, input.superpixels.frame(t), &input.frames[t], &boundaries[t])?;
            if !with_features {
                return Ok(FrameAnalysis {
                    graph,
                    geodesic_upper: 0.0,
                    features: Vec::new(),
                });
            }
            let fields = all_source_geodesics(&graph);
            let features = frame_features(&graph, &fields, &params.binning)?;
            Ok(FrameAnalysis {
                geodesic_upper: params.binning.geodesic_upper(fields.max_finite),
                graph,
                features,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub labeling: SegmentationLabeling,
    pub volume: LabeledVolume,
    pub affinity: AffinityMatrix,
    pub affinity_params: AffinityParams,
    pub k: usize,
    pub num_spatial_edges: usize,
    pub num_temporal_edges: usize,
    pub geodesic_upper: Vec<f64>,
}

/// Number of distinct ground-truth labels across the volume.
pub fn count_segments(gt: &LabeledVolume) -> usize {
    gt.frames()
        .iter()
        .flat_map(|f| f.data().iter().copied())
        .collect::<BTreeSet<u32>>()
        .len()
}

pub fn resolve_k(params: &SegmentParams, gt: Option<&LabeledVolume>) -> Result<usize> {
    match (params.k, gt) {
        (Some(k), _) => Ok(k),
        (None, Some(gt)) => Ok(count_segments(gt)),
        (None, None) => Err(Error::param("k not given and no ground truth to derive it from")),
    }
}

/// Features, affinities and spectral clustering for an in-memory video.
pub fn segment_video(input: &VideoInput, params: &SegmentParams) -> Result<Segmentation> {
    let k = resolve_k(params, input.ground_truth.as_ref())?;
    let use_features = params.alpha > 0.0;
    let frames = analyze_frames(input, params, use_features)?;
    let graphs: Vec<FrameGraph> = frames.iter().map(|f| f.graph.clone()).collect();
    let mut st = build_st_graph(&graphs, &input.superpixels)?;
    if use_features {
        let features: Vec<Vec<PyramidFeature>> = frames.iter().map(|f| f.features.clone()).collect();
        st.attach_feature_distances(&features, params.metric, params.pyramid, &params.pyramid_weights)?;
    }
    let (affinity, affinity_params) = build_affinity(&st, params.alpha, params.gamma, params.gamma)?;
    let labeling = spectral_cluster(&affinity, k, params.seed)?;
    let volume = labels_to_volume(&labeling, &input.superpixels)?;
    let temporal = st.edges().iter().filter(|e| e.kind == EdgeKind::Temporal).count();
    Ok(Segmentation {
        labeling,
        volume,
        affinity,
        affinity_params,
        k,
        num_spatial_edges: st.edges().len() - temporal,
        num_temporal_edges: temporal,
        geodesic_upper: frames.iter().map(|f| f.geodesic_upper).collect(),
    })
}

/// Sorted `.pgm` files of a directory.
pub fn list_pgm(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "pgm") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::format(dir, None, "no .pgm files found"));
    }
    Ok(files)
}

fn check_dims(path: &Path, frame: usize, got: (usize, usize), expected: (usize, usize)) -> Result<()> {
    if got != expected {
        return Err(Error::Inconsistent {
            path: path.to_path_buf(),
            frame,
            message: format!("size {}x{} differs from {}x{}", got.0, got.1, expected.0, expected.1),
        });
    }
    Ok(())
}

fn check_count(dir: &Path, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Inconsistent {
            path: dir.to_path_buf(),
            frame: got.min(expected),
            message: format!("{got} files, expected {expected}"),
        });
    }
    Ok(())
}

pub fn read_label_volume(dir: &Path) -> Result<LabeledVolume> {
    let files = list_pgm(dir)?;
    let mut frames = Vec::with_capacity(files.len());
    for (t, path) in files.iter().enumerate() {
        let f = pnm::read_label_frame(path, Some(t))?;
        if let Some(first) = frames.first() {
            let first: &crate::image::LabelFrame = first;
            check_dims(path, t, (f.width(), f.height()), (first.width(), first.height()))?;
        }
        frames.push(f);
    }
    LabeledVolume::new(frames)
}

/// Loads the input layout described by the config, checking that every file
/// agrees in size and count before any computation starts.
pub fn load_input(cfg: &PipelineConfig) -> Result<VideoInput> {
    let frames_dir = cfg.frames_path();
    let frame_files = list_pgm(&frames_dir)?;
    let frames = frame_files
        .iter()
        .enumerate()
        .map(|(t, p)| pnm::read_intensity_frame(p, Some(t)))
        .collect::<Result<Vec<_>>>()?;
    let dims = (frames[0].width(), frames[0].height());
    for (t, (f, p)) in frames.iter().zip(&frame_files).enumerate() {
        check_dims(p, t, (f.width(), f.height()), dims)?;
    }

    let sp_dir = cfg.superpixels_path();
    let superpixels = read_label_volume(&sp_dir)?;
    check_count(&sp_dir, superpixels.num_frames(), frames.len())?;
    check_dims(&sp_dir, 0, (superpixels.width(), superpixels.height()), dims)?;

    let ground_truth = match cfg.ground_truth_path() {
        Some(dir) if dir.is_dir() => {
            let gt = read_label_volume(&dir)?;
            check_count(&dir, gt.num_frames(), frames.len())?;
            check_dims(&dir, 0, (gt.width(), gt.height()), dims)?;
            Some(gt)
        }
        _ => None,
    };

    let spatial_boundaries = match cfg.boundary_path() {
        Some(dir) => {
            let files = list_pgm(&dir)?;
            check_count(&dir, files.len(), frames.len())?;
            let maps = files
                .iter()
                .enumerate()
                .map(|(t, p)| {
                    let m = pnm::read_boundary_map(p, Some(t))?;
                    check_dims(p, t, (m.width(), m.height()), dims)?;
                    Ok(m)
                })
                .collect::<Result<Vec<_>>>()?;
            Some(maps)
        }
        None => None,
    };

    Ok(VideoInput {
        frames,
        superpixels,
        ground_truth,
        spatial_boundaries,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedRun {
    pub k: usize,
    pub k_source: &'static str,
    pub gamma_baseline: f64,
    pub gamma_feature: f64,
    pub width: usize,
    pub height: usize,
    pub num_frames: usize,
    pub num_superpixels: usize,
    pub num_spatial_edges: usize,
    pub num_temporal_edges: usize,
    pub geodesic_upper: Vec<f64>,
    pub boundary_source: &'static str,
    pub boundary_strength_estimator: &'static str,
    pub laplacian: &'static str,
    pub kmeans_init: &'static str,
    pub kmeans_max_iterations: usize,
    pub rng_algorithm: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: PipelineConfig,
    pub resolved: ResolvedRun,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: Option<MetricsReport>,
    pub volume: LabeledVolume,
    pub manifest: RunManifest,
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes per-frame feature CSVs for an analysed video.
pub fn write_features(dir: &Path, frames: &[FrameAnalysis]) -> Result<()> {
    create_dir(dir)?;
    for (t, f) in frames.iter().enumerate() {
        let path = dir.join(format!("features_{t:04}.csv"));
        let mut buf = Vec::new();
        {
            use std::io::Write;
            writeln!(buf, "{}", crate::histfeat::FEATURE_CSV_HEADER).expect("in-memory write");
        }
        write_features_csv(&mut buf, &f.graph, &f.features).expect("in-memory write");
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Segment, evaluate when ground truth is present, and write label maps,
/// metrics and the run manifest into the output directory.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let input = load_input(cfg)?;
    input.validate()?;
    let seg = segment_video(&input, &cfg.params)?;
    let report = match &input.ground_truth {
        Some(gt) if cfg.evaluate => Some(MetricsReport::evaluate(&seg.volume, gt, cfg.params.boundary_tolerance)?),
        _ => None,
    };

    create_dir(&cfg.output)?;
    let mut outputs = vec![format!("{LABELS_DIR}/seg_NNNN.pgm")];
    write_label_volume(&cfg.output.join(LABELS_DIR), "seg", &seg.volume)?;
    if let Some(r) = &report {
        write_text(&cfg.output.join(METRICS_FILE), &r.to_json())?;
        outputs.push(METRICS_FILE.into());
    }
    if cfg.write_affinity {
        let path = cfg.output.join(AFFINITY_FILE);
        let mut buf = Vec::new();
        seg.affinity.write_matrix_market(&mut buf).expect("in-memory write");
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        outputs.push(AFFINITY_FILE.into());
    }
    if cfg.write_features {
        let frames = analyze_frames(&input, &cfg.params, true)?;
        write_features(&cfg.output.join(FEATURES_DIR), &frames)?;
        outputs.push(format!("{FEATURES_DIR}/features_NNNN.csv"));
    }

    let sp = &input.superpixels;
    let manifest = RunManifest {
        tool: "geohist",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        resolved: ResolvedRun {
            k: seg.k,
            k_source: if cfg.params.k.is_some() { "config" } else { "ground-truth" },
            gamma_baseline: seg.affinity_params.gamma_baseline,
            gamma_feature: seg.affinity_params.gamma_feature,
            width: sp.width(),
            height: sp.height(),
            num_frames: sp.num_frames(),
            num_superpixels: seg.affinity.len(),
            num_spatial_edges: seg.num_spatial_edges,
            num_temporal_edges: seg.num_temporal_edges,
            geodesic_upper: seg.geodesic_upper.clone(),
            boundary_source: if input.spatial_boundaries.is_some() { "files" } else { "sobel" },
            boundary_strength_estimator: BOUNDARY_STRENGTH_ESTIMATOR,
            laplacian: "symmetric-normalized",
            kmeans_init: "k-means++",
            kmeans_max_iterations: KMEANS_MAX_ITERATIONS,
            rng_algorithm: RNG_ALGORITHM,
        },
        outputs,
    };
    let path = cfg.output.join(RUN_MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    write_text(&path, &(text + "\n"))?;
    Ok(PipelineOutput {
        report,
        volume: seg.volume,
        manifest,
    })
}
