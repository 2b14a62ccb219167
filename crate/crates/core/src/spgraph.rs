//! Per-frame superpixel graphs.
//!
//! Nodes are the distinct labels of one frame, in ascending label order. Two
//! nodes are joined when their regions touch under 4-connectivity, and the edge
//! weight is the boundary strength along the shared border: the mean, over all
//! cross-label pixel pairs, of the two pixels' averaged boundary values.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{sorted_labels, BoundaryMap, IntensityFrame, LabelFrame, Plane};

/// Estimator used to reduce per-pair boundary values along a shared border.
pub const BOUNDARY_STRENGTH_ESTIMATOR: &str = "mean";

#[derive(Debug, Clone, PartialEq)]
pub struct Superpixel {
    /// Node index within the frame graph.
    pub id: usize,
    /// Region id in the source label map.
    pub label: u32,
    pub frame: usize,
    pub area: usize,
    /// Mean pixel coordinates `(x, y)`.
    pub centroid: (f64, f64),
    pub mean_intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct FrameGraph {
    frame: usize,
    width: usize,
    height: usize,
    nodes: Vec<Superpixel>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl FrameGraph {
    /// Assembles a graph from parts, checking the structural invariants.
    /// Edges are normalized to `a < b` and sorted.
    pub fn new(
        frame: usize,
        width: usize,
        height: usize,
        nodes: Vec<Superpixel>,
        mut edges: Vec<Edge>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Empty("frame graph without nodes"));
        }
        let total: usize = nodes.iter().map(|n| n.area).sum();
        if total != width * height {
            return Err(Error::param(format!(
                "node areas sum to {total}, frame has {} pixels",
                width * height
            )));
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.id != i || n.area == 0 {
                return Err(Error::param(format!("node {i} has id {} and area {}", n.id, n.area)));
            }
        }
        let n = nodes.len();
        for e in edges.iter_mut() {
            if e.a >= n || e.b >= n {
                return Err(Error::InvalidNode {
                    index: e.a.max(e.b),
                    len: n,
                });
            }
            if e.a == e.b {
                return Err(Error::param(format!("self edge on node {}", e.a)));
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(Error::param(format!("edge weight {} is not finite and non-negative", e.weight)));
            }
            if e.a > e.b {
                std::mem::swap(&mut e.a, &mut e.b);
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        if edges.windows(2).any(|w| (w[0].a, w[0].b) == (w[1].a, w[1].b)) {
            return Err(Error::param("duplicate edge"));
        }
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.a].push((e.b, e.weight));
            adjacency[e.b].push((e.a, e.weight));
        }
        Ok(FrameGraph {
            frame,
            width,
            height,
            nodes,
            edges,
            adjacency,
        })
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// |f|, the number of pixels in the frame.
    pub fn frame_area(&self) -> usize {
        self.width * self.height
    }

    pub fn nodes(&self) -> &[Superpixel] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Superpixel {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Node index of a region id, if present in this frame.
    pub fn node_of_label(&self, label: u32) -> Option<usize> {
        self.nodes.binary_search_by_key(&label, |n| n.label).ok()
    }

    /// Sum of incident edge weights per node.
    pub fn weighted_degrees(&self) -> Vec<f64> {
        self.adjacency
            .iter()
            .map(|adj| adj.iter().map(|&(_, w)| w).sum())
            .collect()
    }
}

/// Builds the superpixel graph of one frame.
pub fn build_frame_graph(
    frame: usize,
    labels: &LabelFrame,
    intensity: &IntensityFrame,
    boundary: &BoundaryMap,
) -> Result<FrameGraph> {
    labels.check_shape(intensity.plane())?;
    labels.check_shape(boundary.plane())?;
    let (width, height) = (labels.width(), labels.height());
    if labels.is_empty() {
        return Err(Error::Empty("frame without pixels"));
    }

    let distinct = sorted_labels(labels);
    let index: HashMap<u32, usize> = distinct.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let node_of: Vec<usize> = labels.data().iter().map(|l| index[l]).collect();

    let n = distinct.len();
    let mut area = vec![0usize; n];
    let mut sum_x = vec![0.0f64; n];
    let mut sum_y = vec![0.0f64; n];
    let mut sum_i = vec![0.0f64; n];
    // (sum of pair boundary values, pair count) per adjacent node pair
    let mut border: HashMap<(usize, usize), (f64, usize)> = HashMap::new();
    let mut add_pair = |a: usize, b: usize, strength: f64| {
        let key = if a < b { (a, b) } else { (b, a) };
        let acc = border.entry(key).or_insert((0.0, 0));
        acc.0 += strength;
        acc.1 += 1;
    };

    for y in 0..height {
        for x in 0..width {
            let p = y * width + x;
            let node = node_of[p];
            area[node] += 1;
            sum_x[node] += x as f64;
            sum_y[node] += y as f64;
            sum_i[node] += intensity.values()[p];
            let bp = boundary.values()[p];
            if x + 1 < width && node_of[p + 1] != node {
                add_pair(node, node_of[p + 1], 0.5 * (bp + boundary.values()[p + 1]));
            }
            if y + 1 < height && node_of[p + width] != node {
                add_pair(node, node_of[p + width], 0.5 * (bp + boundary.values()[p + width]));
            }
        }
    }

    let nodes = (0..n)
        .map(|i| {
            let a = area[i] as f64;
            Superpixel {
                id: i,
                label: distinct[i],
                frame,
                area: area[i],
                centroid: (sum_x[i] / a, sum_y[i] / a),
                mean_intensity: (sum_i[i] / a).clamp(0.0, 1.0),
            }
        })
        .collect();
    let edges = border
        .into_iter()
        .map(|((a, b), (sum, count))| Edge {
            a,
            b,
            weight: sum / count as f64,
        })
        .collect();
    FrameGraph::new(frame, width, height, nodes, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCombination {
    #[default]
    SpatialOnly,
    Average,
    Max,
}

impl std::str::FromStr for BoundaryCombination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spatial-only" => Ok(Self::SpatialOnly),
            "average" => Ok(Self::Average),
            "max" => Ok(Self::Max),
            other => Err(Error::param(format!(
                "unknown boundary mode {other:?} (expected spatial-only, average or max)"
            ))),
        }
    }
}

impl std::fmt::Display for BoundaryCombination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::SpatialOnly => "spatial-only",
            Self::Average => "average",
            Self::Max => "max",
        })
    }
}

pub fn combine_boundary_maps(
    spatial: &BoundaryMap,
    motion: Option<&BoundaryMap>,
    mode: BoundaryCombination,
) -> Result<BoundaryMap> {
    let motion = match (mode, motion) {
        (BoundaryCombination::SpatialOnly, _) | (_, None) => return Ok(spatial.clone()),
        (_, Some(m)) => m,
    };
    spatial.plane().check_shape(motion.plane())?;
    let values = spatial
        .values()
        .iter()
        .zip(motion.values())
        .map(|(&s, &m)| match mode {
            BoundaryCombination::Average => 0.5 * (s + m),
            _ => s.max(m),
        })
        .collect();
    BoundaryMap::from_plane(Plane::new(spatial.width(), spatial.height(), values)?)
}
