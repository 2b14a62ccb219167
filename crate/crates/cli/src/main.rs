use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geohist::geodesic::all_source_geodesics;
use geohist::histdist::Metric;
use geohist::histfeat::GeodesicRange;
use geohist::pipeline::{
    analyze_frames, list_pgm, load_input, read_label_volume, render_overlays, run_pipeline, write_features,
    PipelineConfig, LABELS_DIR,
};
use geohist::pnm;
use geohist::spgraph::BoundaryCombination;
use geohist::stcluster::GammaMode;
use geohist::synth::{generate_scene, grid_superpixels, write_scene, SceneObject, SceneSpec, Shape};
use geohist::{Error, MetricsReport, Result};

#[derive(Parser)]
#[command(name = "geohist", version, about = "Geodesic histogram features for video segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene with ground truth and grid superpixels.
    Synth(SynthArgs),
    /// Write per-frame intensity-geodesic histogram features as CSV.
    Features(FeaturesArgs),
    /// Cluster superpixels into supervoxels and write label maps.
    Segment(RunArgs),
    /// Score a segmentation against ground truth.
    Eval(EvalArgs),
    /// Segment, evaluate and optionally render overlays.
    Pipeline(PipelineArgs),
    /// Blend label maps over frames into PPM overlays.
    Render(RenderArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Scene description in JSON; replaces the built-in two-object scene.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 8)]
    frames: usize,
    /// Object speed in pixels per frame.
    #[arg(long, default_value_t = 2.0)]
    speed: f64,
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    /// Overrides the seed of a scene file too.
    #[arg(long)]
    seed: Option<u64>,
    /// Grid superpixel cell size; 0 skips superpixels.
    #[arg(long, default_value_t = 8)]
    cell: usize,
    /// Split grid cells along ground-truth boundaries.
    #[arg(long)]
    respect_gt: bool,
}

#[derive(Args)]
struct Layout {
    /// JSON config; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    frames_dir: Option<String>,
    #[arg(long)]
    superpixels_dir: Option<String>,
    #[arg(long)]
    ground_truth_dir: Option<String>,
    /// Skip ground truth even if the directory exists.
    #[arg(long, conflicts_with = "ground_truth_dir")]
    no_ground_truth: bool,
    #[arg(long)]
    boundary_dir: Option<String>,
}

#[derive(Args)]
struct Params {
    #[arg(long)]
    intensity_bins: Option<usize>,
    #[arg(long)]
    geodesic_bins: Option<usize>,
    /// `per-frame-max` or `fixed:<upper>`.
    #[arg(long, value_parser = parse_from_str::<GeodesicRange>)]
    geodesic_range: Option<GeodesicRange>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    include_self: Option<bool>,
    /// `spatial-only`, `average` or `max`.
    #[arg(long, value_parser = parse_from_str::<BoundaryCombination>)]
    boundary_mode: Option<BoundaryCombination>,
    #[arg(long)]
    boundary_sigma: Option<f64>,
    /// `chi2` or `emd`.
    #[arg(long, value_parser = parse_from_str::<Metric>)]
    metric: Option<Metric>,
    #[arg(long)]
    pyramid: Option<bool>,
    #[arg(long)]
    pyramid_level0_weight: Option<f64>,
    #[arg(long)]
    pyramid_level1_weight: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// `median` or `fixed:<gamma>`.
    #[arg(long, value_parser = parse_from_str::<GammaMode>)]
    gamma: Option<GammaMode>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    boundary_tolerance: Option<usize>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    layout: Layout,
    #[command(flatten)]
    params: Params,
    #[arg(long)]
    out: PathBuf,
    /// Also write all-source geodesic distances per frame.
    #[arg(long)]
    geodesics: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    layout: Layout,
    #[command(flatten)]
    params: Params,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the affinity matrix in Matrix Market format.
    #[arg(long)]
    write_affinity: bool,
    /// Write per-frame feature CSVs.
    #[arg(long)]
    write_features: bool,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also write PPM overlays of the segmentation.
    #[arg(long)]
    render: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of segmentation label maps.
    #[arg(long)]
    seg: PathBuf,
    /// Directory of ground-truth label maps.
    #[arg(long)]
    gt: PathBuf,
    /// Metrics JSON path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = geohist::supereval::DEFAULT_BOUNDARY_TOLERANCE)]
    boundary_tolerance: usize,
}

#[derive(Args)]
struct RenderArgs {
    /// Directory of label maps.
    #[arg(long)]
    labels: PathBuf,
    /// Directory of intensity frames.
    #[arg(long)]
    frames: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn parse_from_str<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn build_config(layout: &Layout, params: &Params) -> Result<PipelineConfig> {
    let mut cfg = match &layout.config {
        Some(path) => PipelineConfig::from_json_file(path)?,
        None => PipelineConfig::default(),
    };
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
    }
    set!(cfg.input, layout.input);
    set!(cfg.frames_dir, layout.frames_dir);
    set!(cfg.superpixels_dir, layout.superpixels_dir);
    if layout.ground_truth_dir.is_some() {
        cfg.ground_truth_dir = layout.ground_truth_dir.clone();
    }
    if layout.no_ground_truth {
        cfg.ground_truth_dir = None;
    }
    if layout.boundary_dir.is_some() {
        cfg.boundary_dir = layout.boundary_dir.clone();
    }
    let p = &mut cfg.params;
    set!(p.binning.intensity_bins, params.intensity_bins);
    set!(p.binning.geodesic_bins, params.geodesic_bins);
    set!(p.binning.geodesic_range, params.geodesic_range);
    set!(p.binning.mu, params.mu);
    set!(p.binning.include_self, params.include_self);
    set!(p.boundary_mode, params.boundary_mode);
    set!(p.boundary_sigma, params.boundary_sigma);
    set!(p.metric, params.metric);
    set!(p.pyramid, params.pyramid);
    set!(p.pyramid_weights.level0, params.pyramid_level0_weight);
    set!(p.pyramid_weights.level1, params.pyramid_level1_weight);
    set!(p.alpha, params.alpha);
    set!(p.gamma, params.gamma);
    set!(p.seed, params.seed);
    set!(p.boundary_tolerance, params.boundary_tolerance);
    if params.k.is_some() {
        p.k = params.k;
    }
    Ok(cfg)
}

fn run_config(args: &RunArgs) -> Result<PipelineConfig> {
    let mut cfg = build_config(&args.layout, &args.params)?;
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    cfg.write_affinity |= args.write_affinity;
    cfg.write_features |= args.write_features;
    Ok(cfg)
}

fn builtin_scene(a: &SynthArgs) -> SceneSpec {
    let (w, h) = (a.width as f64, a.height as f64);
    let radius = 0.18 * w.min(h);
    SceneSpec {
        width: a.width,
        height: a.height,
        num_frames: a.frames,
        background: 0.25,
        texture_amplitude: 0.0,
        texture_period: 16.0,
        objects: vec![
            SceneObject {
                shape: Shape::Rectangle {
                    width: 0.35 * w,
                    height: 0.35 * h,
                },
                intensity: 0.8,
                start: (0.2 * w + 1.0, 0.25 * h),
                velocity: (a.speed, 0.0),
            },
            SceneObject {
                shape: Shape::Disc { radius },
                intensity: 0.55,
                start: (radius + 1.0, 0.72 * h),
                velocity: (a.speed, 0.0),
            },
        ],
        noise_sigma: a.noise,
        seed: a.seed.unwrap_or(0),
    }
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<SceneSpec>(&text).map_err(|e| Error::Json {
                path: path.clone(),
                source: e,
            })?
        }
        None => builtin_scene(a),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let scene = generate_scene(&spec)?;
    let sp = if a.cell > 0 {
        Some(grid_superpixels(&scene.ground_truth, a.cell, a.respect_gt)?)
    } else {
        None
    };
    write_scene(&a.out, &spec, &scene, sp.as_ref().map(|v| (v, a.cell, a.respect_gt)))?;
    eprintln!("wrote {} frames to {}", spec.num_frames, a.out.display());
    Ok(())
}

fn features(a: &FeaturesArgs) -> Result<()> {
    let mut cfg = build_config(&a.layout, &a.params)?;
    cfg.ground_truth_dir = None;
    cfg.validate()?;
    let input = load_input(&cfg)?;
    let frames = analyze_frames(&input, &cfg.params, true)?;
    write_features(&a.out, &frames)?;
    if a.geodesics {
        for (t, f) in frames.iter().enumerate() {
            let path = a.out.join(format!("geodesic_{t:04}.csv"));
            let mut buf = Vec::new();
            all_source_geodesics(&f.graph)
                .write_csv(&mut buf)
                .expect("in-memory write");
            std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        }
    }
    eprintln!("wrote features for {} frames to {}", frames.len(), a.out.display());
    Ok(())
}

fn segment(args: &RunArgs, evaluate: bool) -> Result<PipelineConfig> {
    let mut cfg = run_config(args)?;
    cfg.evaluate = evaluate;
    let out = run_pipeline(&cfg)?;
    if let Some(r) = &out.report {
        println!("{}", r.to_json());
    }
    eprintln!(
        "k={} supervoxels over {} superpixels written to {}",
        out.manifest.resolved.k,
        out.manifest.resolved.num_superpixels,
        cfg.output.display()
    );
    Ok(cfg)
}

fn read_frames(dir: &Path) -> Result<Vec<geohist::IntensityFrame>> {
    list_pgm(dir)?
        .iter()
        .enumerate()
        .map(|(t, p)| pnm::read_intensity_frame(p, Some(t)))
        .collect()
}

fn render(labels: &Path, frames: &Path, out: &Path) -> Result<usize> {
    let volume = read_label_volume(labels)?;
    let frames = read_frames(frames)?;
    Ok(render_overlays(&volume, &frames, out)?.len())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let seg = read_label_volume(&a.seg)?;
    let gt = read_label_volume(&a.gt)?;
    let report = MetricsReport::evaluate(&seg, &gt, a.boundary_tolerance)?;
    let json = report.to_json();
    match &a.out {
        Some(path) => std::fs::write(path, &json).map_err(|e| Error::io(path, e))?,
        None => print!("{json}"),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(&a),
        Command::Features(a) => features(&a),
        Command::Segment(a) => segment(&a, false).map(drop),
        Command::Eval(a) => eval(&a),
        Command::Pipeline(a) => {
            let cfg = segment(&a.run, true)?;
            if a.render {
                let dir = cfg.output.join("overlays");
                let n = render(&cfg.output.join(LABELS_DIR), &cfg.frames_path(), &dir)?;
                eprintln!("wrote {n} overlays to {}", dir.display());
            }
            Ok(())
        }
        Command::Render(a) => {
            let n = render(&a.labels, &a.frames, &a.out)?;
            eprintln!("wrote {n} overlays to {}", a.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 3 } else { 2 })
        }
    }
}
