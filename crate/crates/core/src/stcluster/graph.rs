use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::histdist::{histogram_distance, pyramid_distance, Metric, PyramidWeights};
use crate::histfeat::PyramidFeature;
use crate::image::LabeledVolume;
use crate::spgraph::FrameGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Spatial,
    Temporal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StEdge {
    /// Global node indices, `a < b`.
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
    /// Histogram feature distance, once attached.
    pub feature_distance: Option<f64>,
    /// Absolute mean-intensity difference.
    pub baseline_distance: f64,
}

/// Superpixels of all frames with spatial (within-frame adjacency) and
/// temporal (pixel overlap between consecutive frames) edges.
#[derive(Debug, Clone)]
pub struct SpatioTemporalGraph {
    frame_offsets: Vec<usize>,
    edges: Vec<StEdge>,
}

impl SpatioTemporalGraph {
    pub fn num_nodes(&self) -> usize {
        *self.frame_offsets.last().expect("at least one frame")
    }

    pub fn num_frames(&self) -> usize {
        self.frame_offsets.len() - 1
    }

    pub fn edges(&self) -> &[StEdge] {
        &self.edges
    }

    pub fn global_index(&self, frame: usize, local: usize) -> usize {
        self.frame_offsets[frame] + local
    }

    /// `(frame, local)` of a global index.
    pub fn locate(&self, global: usize) -> (usize, usize) {
        let frame = self.frame_offsets.partition_point(|&o| o <= global) - 1;
        (frame, global - self.frame_offsets[frame])
    }

    pub fn frame_offsets(&self) -> &[usize] {
        &self.frame_offsets
    }

    /// Fills `feature_distance` on every edge. With `pyramid` off only the
    /// level-0 histograms are compared.
    pub fn attach_feature_distances(
        &mut self,
        features: &[Vec<PyramidFeature>],
        metric: Metric,
        pyramid: bool,
        weights: &PyramidWeights,
    ) -> Result<()> {
        if features.len() != self.num_frames() {
            return Err(Error::FrameCountMismatch {
                expected: self.num_frames(),
                actual: features.len(),
            });
        }
        for (t, f) in features.iter().enumerate() {
            let expected = self.frame_offsets[t + 1] - self.frame_offsets[t];
            if f.len() != expected {
                return Err(Error::param(format!(
                    "frame {t} has {} features for {expected} superpixels",
                    f.len()
                )));
            }
        }
        let offsets = self.frame_offsets.clone();
        let lookup = |g: usize| {
            let frame = offsets.partition_point(|&o| o <= g) - 1;
            &features[frame][g - offsets[frame]]
        };
        for e in self.edges.iter_mut() {
            let (fa, fb) = (lookup(e.a), lookup(e.b));
            let d = if pyramid {
                pyramid_distance(fa, fb, metric, weights)?
            } else {
                histogram_distance(&fa.level0, &fb.level0, metric)?
            };
            e.feature_distance = Some(d);
        }
        Ok(())
    }
}

/// Temporal edge set between two label frames: every pair of superpixels
/// sharing at least one pixel position. Pairs are `(local in t, local in t+1)`.
pub fn overlap_pairs(
    current: &FrameGraph,
    next: &FrameGraph,
    labels_t: &[u32],
    labels_next: &[u32],
) -> Result<BTreeSet<(usize, usize)>> {
    let node = |g: &FrameGraph, l: u32| {
        g.node_of_label(l)
            .ok_or_else(|| Error::param(format!("label {l} missing from frame graph {}", g.frame())))
    };
    let mut pairs = BTreeSet::new();
    let mut last = None;
    for (&a, &b) in labels_t.iter().zip(labels_next) {
        if last == Some((a, b)) {
            continue;
        }
        last = Some((a, b));
        pairs.insert((node(current, a)?, node(next, b)?));
    }
    Ok(pairs)
}

pub fn build_st_graph(graphs: &[FrameGraph], superpixels: &LabeledVolume) -> Result<SpatioTemporalGraph> {
    if graphs.len() != superpixels.num_frames() {
        return Err(Error::FrameCountMismatch {
            expected: superpixels.num_frames(),
            actual: graphs.len(),
        });
    }
    if graphs.is_empty() {
        return Err(Error::Empty("spatio-temporal graph without frames"));
    }
    let mut frame_offsets = vec![0usize];
    let mut mean_intensity = Vec::new();
    for (t, g) in graphs.iter().enumerate() {
        if g.frame() != t || g.width() != superpixels.width() || g.height() != superpixels.height() {
            return Err(Error::param(format!("frame graph {t} does not match superpixel frame {t}")));
        }
        if g.len() != superpixels.frame_labels(t).len() {
            return Err(Error::param(format!("frame graph {t} node count differs from its label map")));
        }
        frame_offsets.push(frame_offsets[t] + g.len());
        mean_intensity.extend(g.nodes().iter().map(|n| n.mean_intensity));
    }

    let baseline = |a: usize, b: usize| (mean_intensity[a] - mean_intensity[b]).abs();
    let mut edges = Vec::new();
    for (t, g) in graphs.iter().enumerate() {
        let off = frame_offsets[t];
        for e in g.edges() {
            let (a, b) = (off + e.a, off + e.b);
            edges.push(StEdge {
                a,
                b,
                kind: EdgeKind::Spatial,
                feature_distance: None,
                baseline_distance: baseline(a, b),
            });
        }
        if t + 1 < graphs.len() {
            let next_off = frame_offsets[t + 1];
            let pairs = overlap_pairs(
                g,
                &graphs[t + 1],
                superpixels.frame(t).data(),
                superpixels.frame(t + 1).data(),
            )?;
            for (i, j) in pairs {
                let (a, b) = (off + i, next_off + j);
                edges.push(StEdge {
                    a,
                    b,
                    kind: EdgeKind::Temporal,
                    feature_distance: None,
                    baseline_distance: baseline(a, b),
                });
            }
        }
    }
    Ok(SpatioTemporalGraph { frame_offsets, edges })
}
