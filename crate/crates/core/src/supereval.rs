//! 3D supervoxel benchmark metrics.
//!
//! Accuracy and under-segmentation error are computed from the voxel overlap
//! table between supervoxels and ground-truth segments. Boundary recall and
//! precision match boundary voxels within a Chebyshev window of the same frame.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::LabeledVolume;

/// Default boundary matching tolerance in pixels.
pub const DEFAULT_BOUNDARY_TOLERANCE: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub ac3d: f64,
    pub ue3d: f64,
    pub br3d: f64,
    pub bp3d: f64,
    pub mean_temporal_length: f64,
    pub num_supervoxels: usize,
}

impl MetricsReport {
    pub fn evaluate(seg: &LabeledVolume, gt: &LabeledVolume, tolerance: usize) -> Result<Self> {
        let overlap = Overlap::new(seg, gt)?;
        Ok(MetricsReport {
            ac3d: overlap.accuracy(),
            ue3d: overlap.undersegmentation_error(),
            br3d: boundary_recall_3d(seg, gt, tolerance)?,
            bp3d: boundary_precision_3d(seg, gt, tolerance)?,
            mean_temporal_length: mean_temporal_length(seg)?,
            num_supervoxels: overlap.seg_size.len(),
        })
    }

    /// Fixed key order, six decimal places.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"ac3d\": {:.6}, \"ue3d\": {:.6}, \"br3d\": {:.6}, \"bp3d\": {:.6}, \"mean_temporal_length\": {:.6}, \"num_supervoxels\": {}}}\n",
            self.ac3d, self.ue3d, self.br3d, self.bp3d, self.mean_temporal_length, self.num_supervoxels
        )
    }
}

struct Overlap {
    seg_size: HashMap<u32, u64>,
    gt_size: HashMap<u32, u64>,
    // gt label -> list of (seg label, overlap count)
    by_gt: HashMap<u32, Vec<(u32, u64)>>,
}

impl Overlap {
    fn new(seg: &LabeledVolume, gt: &LabeledVolume) -> Result<Self> {
        gt.check_same_shape(seg)?;
        if gt.num_voxels() == 0 {
            return Err(Error::Empty("ground truth volume"));
        }
        let mut seg_size: HashMap<u32, u64> = HashMap::new();
        let mut gt_size: HashMap<u32, u64> = HashMap::new();
        let mut joint: HashMap<(u32, u32), u64> = HashMap::new();
        for (sf, gf) in seg.frames().iter().zip(gt.frames()) {
            for (&s, &g) in sf.data().iter().zip(gf.data()) {
                *seg_size.entry(s).or_default() += 1;
                *gt_size.entry(g).or_default() += 1;
                *joint.entry((s, g)).or_default() += 1;
            }
        }
        let mut by_gt: HashMap<u32, Vec<(u32, u64)>> = HashMap::new();
        for ((s, g), n) in joint {
            by_gt.entry(g).or_default().push((s, n));
        }
        Ok(Overlap {
            seg_size,
            gt_size,
            by_gt,
        })
    }

    fn mean_over_gt(&self, per_gt: impl Fn(u64, &[(u32, u64)]) -> f64) -> f64 {
        // sort for a summation order independent of hashing
        let mut labels: Vec<u32> = self.gt_size.keys().copied().collect();
        labels.sort_unstable();
        let sum: f64 = labels
            .iter()
            .map(|g| per_gt(self.gt_size[g], &self.by_gt[g]))
            .sum();
        sum / labels.len() as f64
    }

    fn accuracy(&self) -> f64 {
        self.mean_over_gt(|g_size, overlaps| {
            let covered: u64 = overlaps
                .iter()
                .filter(|&&(s, n)| 2 * n > self.seg_size[&s])
                .map(|&(_, n)| n)
                .sum();
            covered as f64 / g_size as f64
        })
    }

    fn undersegmentation_error(&self) -> f64 {
        self.mean_over_gt(|g_size, overlaps| {
            let touching: u64 = overlaps.iter().map(|&(s, _)| self.seg_size[&s]).sum();
            (touching - g_size) as f64 / g_size as f64
        })
    }
}

/// Mean, over ground-truth segments, of the fraction of each segment covered
/// by supervoxels lying strictly more than half inside it.
pub fn accuracy_3d(seg: &LabeledVolume, gt: &LabeledVolume) -> Result<f64> {
    Ok(Overlap::new(seg, gt)?.accuracy())
}

/// Mean, over ground-truth segments, of the normalized excess volume of the
/// supervoxels touching each segment.
pub fn undersegmentation_error_3d(seg: &LabeledVolume, gt: &LabeledVolume) -> Result<f64> {
    Ok(Overlap::new(seg, gt)?.undersegmentation_error())
}

/// Voxels whose label differs from one of their 6-neighbours in `(x, y, t)`.
pub fn boundary_voxels(vol: &LabeledVolume) -> Vec<Vec<bool>> {
    let (w, h, t_len) = (vol.width(), vol.height(), vol.num_frames());
    (0..t_len)
        .map(|t| {
            let f = vol.frame(t);
            let mut mask = vec![false; w * h];
            for y in 0..h {
                for x in 0..w {
                    let l = f.get(x, y);
                    let differs = (x > 0 && f.get(x - 1, y) != l)
                        || (x + 1 < w && f.get(x + 1, y) != l)
                        || (y > 0 && f.get(x, y - 1) != l)
                        || (y + 1 < h && f.get(x, y + 1) != l)
                        || (t > 0 && vol.get(x, y, t - 1) != l)
                        || (t + 1 < t_len && vol.get(x, y, t + 1) != l);
                    mask[y * w + x] = differs;
                }
            }
            mask
        })
        .collect()
}

/// Summed-area table over a boolean mask, `(w + 1) x (h + 1)`.
struct Integral {
    w: usize,
    h: usize,
    sums: Vec<u32>,
}

impl Integral {
    fn new(mask: &[bool], w: usize, h: usize) -> Self {
        let mut sums = vec![0u32; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0u32;
            for x in 0..w {
                row += mask[y * w + x] as u32;
                sums[(y + 1) * (w + 1) + x + 1] = sums[y * (w + 1) + x + 1] + row;
            }
        }
        Integral { w, h, sums }
    }

    fn any_within(&self, x: usize, y: usize, tol: usize) -> bool {
        let x0 = x.saturating_sub(tol);
        let y0 = y.saturating_sub(tol);
        let x1 = x.saturating_add(tol).min(self.w - 1) + 1;
        let y1 = y.saturating_add(tol).min(self.h - 1) + 1;
        let s = |xx: usize, yy: usize| self.sums[yy * (self.w + 1) + xx] as i64;
        s(x1, y1) - s(x0, y1) - s(x1, y0) + s(x0, y0) > 0
    }
}

/// Fraction of `reference` boundary voxels with a `candidate` boundary voxel
/// within Chebyshev distance `tol` in the same frame. With no reference
/// boundary voxels the fraction is 1.
fn boundary_match(candidate: &LabeledVolume, reference: &LabeledVolume, tol: usize) -> Result<f64> {
    reference.check_same_shape(candidate)?;
    let (w, h) = (reference.width(), reference.height());
    let cand = boundary_voxels(candidate);
    let refb = boundary_voxels(reference);
    let mut total = 0u64;
    let mut hit = 0u64;
    for (c, r) in cand.iter().zip(&refb) {
        let integral = Integral::new(c, w, h);
        for y in 0..h {
            for x in 0..w {
                if r[y * w + x] {
                    total += 1;
                    hit += integral.any_within(x, y, tol) as u64;
                }
            }
        }
    }
    Ok(if total == 0 { 1.0 } else { hit as f64 / total as f64 })
}

pub fn boundary_recall_3d(seg: &LabeledVolume, gt: &LabeledVolume, tol: usize) -> Result<f64> {
    boundary_match(seg, gt, tol)
}

pub fn boundary_precision_3d(seg: &LabeledVolume, gt: &LabeledVolume, tol: usize) -> Result<f64> {
    boundary_match(gt, seg, tol)
}

/// Mean number of distinct frames spanned by each supervoxel.
pub fn mean_temporal_length(seg: &LabeledVolume) -> Result<f64> {
    if seg.num_voxels() == 0 {
        return Err(Error::Empty("segmentation volume"));
    }
    let mut frames_of: HashMap<u32, usize> = HashMap::new();
    for f in seg.frames() {
        let present: HashSet<u32> = f.data().iter().copied().collect();
        for l in present {
            *frames_of.entry(l).or_default() += 1;
        }
    }
    let total: usize = frames_of.values().sum();
    Ok(total as f64 / frames_of.len() as f64)
}
