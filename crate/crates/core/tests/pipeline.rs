mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use common::*;
use geohist::error::Error;
use geohist::image::Plane;
use geohist::pipeline::{run_pipeline, PipelineConfig, AFFINITY_FILE, FEATURES_DIR, METRICS_FILE, RUN_MANIFEST_FILE};
use geohist::pnm::write_label_frame;
use geohist::synth::{frame_file_name, generate_scene, grid_superpixels, label_file_name, write_scene, SUPERPIXELS_DIR};
use tempfile::TempDir;

const FRAMES: usize = 4;

fn dataset() -> (TempDir, PathBuf) {
    let spec = moving_scene(1, 32, FRAMES);
    let scene = generate_scene(&spec).unwrap();
    let sp = grid_superpixels(&scene.ground_truth, 8, false).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("scene");
    write_scene(&data, &spec, &scene, Some((&sp, 8, false))).unwrap();
    (dir, data)
}

fn config(dir: &TempDir, data: &Path, out: &str) -> PipelineConfig {
    PipelineConfig {
        input: data.to_path_buf(),
        output: dir.path().join(out),
        ..PipelineConfig::default()
    }
}

fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    files
}

#[test]
fn single_cluster_spans_every_frame() {
    let (dir, data) = dataset();
    let mut cfg = config(&dir, &data, "out");
    cfg.params.k = Some(1);
    let out = run_pipeline(&cfg).unwrap();
    let report = out.report.unwrap();
    assert_eq!(report.mean_temporal_length, FRAMES as f64);
    assert!(out.volume.frames().iter().all(|f| f.data().iter().all(|&l| l == f.data()[0])));
}

#[test]
fn rerunning_into_the_same_directory_is_idempotent() {
    let (dir, data) = dataset();
    let mut cfg = config(&dir, &data, "out");
    cfg.write_affinity = true;
    cfg.write_features = true;
    run_pipeline(&cfg).unwrap();
    let first = read_tree(&cfg.output);
    run_pipeline(&cfg).unwrap();
    let second = read_tree(&cfg.output);
    assert_eq!(first, second);
    for name in [METRICS_FILE, RUN_MANIFEST_FILE, AFFINITY_FILE] {
        assert!(first.contains_key(Path::new(name)), "missing {name}");
    }
    let features = first.keys().filter(|p| p.starts_with(FEATURES_DIR)).count();
    assert_eq!(features, FRAMES);
}

#[test]
fn manifest_echoes_config() {
    let (dir, data) = dataset();
    let mut cfg = config(&dir, &data, "out");
    cfg.params.alpha = 0.3;
    cfg.params.seed = 17;
    let out = run_pipeline(&cfg).unwrap();
    let text = fs::read_to_string(cfg.output.join(RUN_MANIFEST_FILE)).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let echoed: PipelineConfig = serde_json::from_value(json["config"].clone()).unwrap();
    assert_eq!(echoed, cfg);
    assert_eq!(json["resolved"]["num_frames"], FRAMES);
    assert_eq!(json["resolved"]["k"], out.manifest.resolved.k);
    assert_eq!(json["resolved"]["k_source"], "ground-truth");
}

#[test]
fn evaluation_can_be_disabled() {
    let (dir, data) = dataset();
    let mut cfg = config(&dir, &data, "out");
    cfg.evaluate = false;
    let out = run_pipeline(&cfg).unwrap();
    assert!(out.report.is_none());
    assert!(!cfg.output.join(METRICS_FILE).exists());
}

#[test]
fn corrupt_frame_reports_path_and_frame() {
    let (dir, data) = dataset();
    let bad = data.join("frames").join(frame_file_name(2));
    fs::write(&bad, b"P5\n32 32\n255\ntruncated").unwrap();
    let cfg = config(&dir, &data, "out");
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, Error::Format { frame: Some(2), .. }), "{err:?}");
    let msg = err.to_string();
    assert!(msg.contains(bad.to_str().unwrap()) && msg.contains("frame 2"), "{msg}");
    assert!(err.is_io());
    assert!(!cfg.output.exists());
}

#[test]
fn missing_superpixel_frame_is_inconsistent() {
    let (dir, data) = dataset();
    fs::remove_file(data.join(SUPERPIXELS_DIR).join(label_file_name("sp", FRAMES - 1))).unwrap();
    let cfg = config(&dir, &data, "out");
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, Error::Inconsistent { .. }), "{err:?}");
    assert!(err.to_string().contains(SUPERPIXELS_DIR));
    assert!(!cfg.output.exists());
}

#[test]
fn size_mismatch_fails_before_any_output() {
    let (dir, data) = dataset();
    let path = data.join(SUPERPIXELS_DIR).join(label_file_name("sp", 1));
    write_label_frame(&path, &Plane::filled(30, 32, 0u32).unwrap()).unwrap();
    let cfg = config(&dir, &data, "out");
    let err = run_pipeline(&cfg).unwrap_err();
    match &err {
        Error::Inconsistent { path: p, frame, .. } => {
            assert_eq!(p, &path);
            assert_eq!(*frame, 1);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(!err.is_io());
    assert!(!cfg.output.exists());
}

#[test]
fn missing_input_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, &dir.path().join("nowhere"), "out");
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err:?}");
    assert!(err.to_string().contains("nowhere"));
}

#[test]
fn invalid_parameters_are_rejected_up_front() {
    let (dir, data) = dataset();
    let mut cfg = config(&dir, &data, "out");
    cfg.params.alpha = 1.5;
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, Error::InvalidParameter(_)), "{err:?}");
    assert!(!cfg.output.exists());
}
