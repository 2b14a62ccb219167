//! Synthetic scenes with known ground truth, grid superpixels, and the
//! gradient / temporal-difference boundary estimators.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BoundaryMap, IntensityFrame, LabelFrame, LabeledVolume, Plane};
use crate::pnm;

/// Identifier of the generator behind every seeded draw.
pub const RNG_ALGORITHM: &str = "chacha8";
pub const SCENE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Shape {
    Rectangle { width: f64, height: f64 },
    Disc { radius: f64 },
}

impl Shape {
    fn half_extent(&self) -> (f64, f64) {
        match *self {
            Shape::Rectangle { width, height } => (width / 2.0, height / 2.0),
            Shape::Disc { radius } => (radius, radius),
        }
    }

    /// Whether the pixel centre `(px + 0.5, py + 0.5)` is covered by the shape
    /// centred at `c`.
    fn covers(&self, c: (f64, f64), px: usize, py: usize) -> bool {
        let x = px as f64 + 0.5 - c.0;
        let y = py as f64 + 0.5 - c.1;
        match *self {
            Shape::Rectangle { width, height } => {
                x >= -width / 2.0 && x < width / 2.0 && y >= -height / 2.0 && y < height / 2.0
            }
            Shape::Disc { radius } => x * x + y * y <= radius * radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub shape: Shape,
    pub intensity: f64,
    /// Centre at frame 0, in pixels.
    pub start: (f64, f64),
    /// Displacement of the centre per frame, in pixels.
    #[serde(default)]
    pub velocity: (f64, f64),
}

impl SceneObject {
    pub fn center(&self, t: usize) -> (f64, f64) {
        (
            self.start.0 + self.velocity.0 * t as f64,
            self.start.1 + self.velocity.1 * t as f64,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub num_frames: usize,
    pub background: f64,
    /// Amplitude of a separable sinusoidal background texture.
    #[serde(default)]
    pub texture_amplitude: f64,
    #[serde(default = "default_texture_period")]
    pub texture_period: f64,
    /// Later objects occlude earlier ones.
    #[serde(default)]
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_texture_period() -> f64 {
    16.0
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.num_frames == 0 {
            return Err(Error::param("scene dimensions and frame count must be positive"));
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.background) {
            return Err(Error::param(format!("background {} outside [0,1]", self.background)));
        }
        if !(self.noise_sigma >= 0.0 && self.texture_amplitude >= 0.0 && self.texture_period > 0.0) {
            return Err(Error::param("noise sigma and texture amplitude must be >= 0, period > 0"));
        }
        for (k, obj) in self.objects.iter().enumerate() {
            if !unit(obj.intensity) {
                return Err(Error::param(format!("object {k} intensity {} outside [0,1]", obj.intensity)));
            }
            let (hx, hy) = obj.shape.half_extent();
            if !(hx > 0.0 && hy > 0.0) {
                return Err(Error::param(format!("object {k} has non-positive size")));
            }
            for t in 0..self.num_frames {
                let (cx, cy) = obj.center(t);
                if cx - hx < 0.0 || cy - hy < 0.0 || cx + hx > self.width as f64 || cy + hy > self.height as f64 {
                    return Err(Error::param(format!(
                        "object {k} leaves the {}x{} frame at frame {t} (centre ({cx}, {cy}))",
                        self.width, self.height
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub frames: Vec<IntensityFrame>,
    pub ground_truth: LabeledVolume,
}

/// Renders the scene: label 0 is background, object `k` (0-based in the list)
/// gets label `k + 1`.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::param(e.to_string()))?;
    let (w, h) = (spec.width, spec.height);
    let period = spec.texture_period;
    let tau = std::f64::consts::TAU;
    let mut frames = Vec::with_capacity(spec.num_frames);
    let mut labels = Vec::with_capacity(spec.num_frames);
    for t in 0..spec.num_frames {
        let mut gt = vec![0u32; w * h];
        let mut values = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut v = spec.background
                    + spec.texture_amplitude
                        * ((tau * (x as f64 + 0.5) / period).sin() * (tau * (y as f64 + 0.5) / period).sin());
                for (k, obj) in spec.objects.iter().enumerate() {
                    if obj.shape.covers(obj.center(t), x, y) {
                        gt[y * w + x] = k as u32 + 1;
                        v = obj.intensity;
                    }
                }
                values[y * w + x] = v;
            }
        }
        if spec.noise_sigma > 0.0 {
            for v in values.iter_mut() {
                *v += noise.sample(&mut rng);
            }
        }
        for v in values.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        frames.push(IntensityFrame::new(w, h, values)?);
        labels.push(Plane::new(w, h, gt)?);
    }
    Ok(Scene {
        frames,
        ground_truth: LabeledVolume::new(labels)?,
    })
}

/// Regular `cell x cell` tiling of every frame. With `respect_gt`, the pixels
/// of one tile that carry different ground-truth labels become distinct
/// superpixels. Ids are assigned per frame in (tile, gt label) order.
pub fn grid_superpixels(gt: &LabeledVolume, cell: usize, respect_gt: bool) -> Result<LabeledVolume> {
    if cell == 0 {
        return Err(Error::param("grid cell size must be >= 1"));
    }
    let (w, h) = (gt.width(), gt.height());
    let tiles_x = w.div_ceil(cell);
    let tile_of = |x: usize, y: usize| ((y / cell) * tiles_x + x / cell) as u32;
    let frames = gt
        .frames()
        .iter()
        .map(|g| {
            if !respect_gt {
                return Plane::from_fn(w, h, tile_of);
            }
            let mut keys = BTreeMap::new();
            for y in 0..h {
                for x in 0..w {
                    keys.insert((tile_of(x, y), g.get(x, y)), 0u32);
                }
            }
            for (id, v) in keys.values_mut().enumerate() {
                *v = id as u32;
            }
            Plane::from_fn(w, h, |x, y| keys[&(tile_of(x, y), g.get(x, y))])
        })
        .collect::<Result<Vec<LabelFrame>>>()?;
    LabeledVolume::new(frames)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(plane: &Plane<f64>, sigma: f64) -> Plane<f64> {
    let k = gaussian_kernel(sigma);
    if k.len() == 1 {
        return plane.clone();
    }
    let r = (k.len() / 2) as isize;
    let (w, h) = (plane.width(), plane.height());
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * plane.get(clamp_index(x as isize + i as isize - r, w), y))
                .sum();
        }
    }
    Plane::from_fn(w, h, |x, y| {
        k.iter()
            .enumerate()
            .map(|(i, kv)| kv * tmp[clamp_index(y as isize + i as isize - r, h) * w + x])
            .sum()
    })
    .expect("same shape as input")
}

/// Sobel gradient magnitude with replicated borders.
pub fn sobel_magnitude(plane: &Plane<f64>) -> Plane<f64> {
    let (w, h) = (plane.width(), plane.height());
    let at = |x: isize, y: isize| plane.get(clamp_index(x, w), clamp_index(y, h));
    Plane::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
            - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
        let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
            - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        (gx * gx + gy * gy).sqrt()
    })
    .expect("same shape as input")
}

fn normalize_by_max(plane: Plane<f64>) -> Result<BoundaryMap> {
    let max = plane.data().iter().fold(0.0f64, |m, &v| m.max(v));
    if max <= 0.0 {
        return BoundaryMap::constant(plane.width(), plane.height(), 0.0);
    }
    BoundaryMap::from_plane(plane.map(|&v| (v / max).clamp(0.0, 1.0)))
}

/// Gaussian-smoothed Sobel magnitude normalized by its frame maximum.
pub fn sobel_boundary_map(frame: &IntensityFrame, sigma: f64) -> Result<BoundaryMap> {
    normalize_by_max(sobel_magnitude(&gaussian_blur(frame.plane(), sigma)))
}

/// Absolute temporal difference, smoothed and normalized by its maximum.
pub fn motion_boundary_map(current: &IntensityFrame, next: &IntensityFrame, sigma: f64) -> Result<BoundaryMap> {
    current.plane().check_shape(next.plane())?;
    let diff = Plane::new(
        current.width(),
        current.height(),
        current
            .values()
            .iter()
            .zip(next.values())
            .map(|(a, b)| (b - a).abs())
            .collect(),
    )?;
    normalize_by_max(gaussian_blur(&diff, sigma))
}

/// Motion map for every frame: frame `t` pairs with `t + 1`, the last frame
/// with its predecessor, and a single frame gets a zero map.
pub fn motion_boundary_maps(frames: &[IntensityFrame], sigma: f64) -> Result<Vec<BoundaryMap>> {
    let n = frames.len();
    (0..n)
        .map(|t| match n {
            1 => BoundaryMap::constant(frames[0].width(), frames[0].height(), 0.0),
            _ if t + 1 < n => motion_boundary_map(&frames[t], &frames[t + 1], sigma),
            _ => motion_boundary_map(&frames[t - 1], &frames[t], sigma),
        })
        .collect()
}

pub fn frame_file_name(t: usize) -> String {
    format!("frame_{t:04}.pgm")
}

pub fn label_file_name(prefix: &str, t: usize) -> String {
    format!("{prefix}_{t:04}.pgm")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneManifest {
    pub format_version: u32,
    pub rng_algorithm: String,
    pub seed: u64,
    pub spec: SceneSpec,
    pub frames_dir: String,
    pub ground_truth_dir: String,
    pub superpixels: Option<SuperpixelManifest>,
    pub pgm: PgmFormats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuperpixelManifest {
    pub dir: String,
    pub cell: usize,
    pub respect_gt: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PgmFormats {
    pub frames: String,
    pub labels: String,
}

impl Default for PgmFormats {
    fn default() -> Self {
        PgmFormats {
            frames: "P5 8-bit".into(),
            labels: "P5 16-bit".into(),
        }
    }
}

pub const FRAMES_DIR: &str = "frames";
pub const GT_DIR: &str = "gt";
pub const SUPERPIXELS_DIR: &str = "superpixels";
pub const BOUNDARY_DIR: &str = "boundary";
pub const MANIFEST_FILE: &str = "manifest.json";

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn write_label_volume(dir: &Path, prefix: &str, vol: &LabeledVolume) -> Result<()> {
    create_dir(dir)?;
    for (t, f) in vol.frames().iter().enumerate() {
        pnm::write_label_frame(&dir.join(label_file_name(prefix, t)), f)?;
    }
    Ok(())
}

/// Writes frames, ground truth, optional superpixels and the manifest into
/// `out`, using the directory layout the pipeline reads.
pub fn write_scene(
    out: &Path,
    spec: &SceneSpec,
    scene: &Scene,
    superpixels: Option<(&LabeledVolume, usize, bool)>,
) -> Result<SceneManifest> {
    let frames_dir = out.join(FRAMES_DIR);
    create_dir(&frames_dir)?;
    for (t, f) in scene.frames.iter().enumerate() {
        pnm::write_intensity_frame(&frames_dir.join(frame_file_name(t)), f)?;
    }
    write_label_volume(&out.join(GT_DIR), "gt", &scene.ground_truth)?;
    let sp_manifest = match superpixels {
        Some((vol, cell, respect_gt)) => {
            write_label_volume(&out.join(SUPERPIXELS_DIR), "sp", vol)?;
            Some(SuperpixelManifest {
                dir: SUPERPIXELS_DIR.into(),
                cell,
                respect_gt,
            })
        }
        None => None,
    };
    let manifest = SceneManifest {
        format_version: SCENE_FORMAT_VERSION,
        rng_algorithm: RNG_ALGORITHM.into(),
        seed: spec.seed,
        spec: spec.clone(),
        frames_dir: FRAMES_DIR.into(),
        ground_truth_dir: GT_DIR.into(),
        superpixels: sp_manifest,
        pgm: PgmFormats::default(),
    };
    let path = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json { path: path.clone(), source: e })?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
