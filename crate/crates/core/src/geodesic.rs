//! Geodesic distance fields: shortest accumulated boundary cost between
//! superpixels of one frame, computed by Dijkstra from every source.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spgraph::FrameGraph;

/// Shortest-path distances from one source. `None` marks nodes in a
/// different connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicField {
    source: usize,
    distances: Vec<Option<f64>>,
}

impl GeodesicField {
    pub fn source(&self) -> usize {
        self.source
    }

    pub fn distance(&self, node: usize) -> Option<f64> {
        self.distances[node]
    }

    pub fn distances(&self) -> &[Option<f64>] {
        &self.distances
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    pub fn max_finite(&self) -> f64 {
        self.distances.iter().flatten().fold(0.0, |m, &d| m.max(d))
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then node for a deterministic pop order
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn geodesic_from(graph: &FrameGraph, source: usize) -> Result<GeodesicField> {
    let n = graph.len();
    if source >= n {
        return Err(Error::InvalidNode { index: source, len: n });
    }
    let mut dist: Vec<Option<f64>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::with_capacity(n);
    dist[source] = Some(0.0);
    heap.push(Frontier { cost: 0.0, node: source });
    while let Some(Frontier { cost, node }) = heap.pop() {
        if settled[node] {
            continue;
        }
        settled[node] = true;
        for &(next, w) in graph.neighbors(node) {
            if settled[next] {
                continue;
            }
            let candidate = cost + w;
            if dist[next].is_none_or(|d| candidate < d) {
                dist[next] = Some(candidate);
                heap.push(Frontier { cost: candidate, node: next });
            }
        }
    }
    Ok(GeodesicField {
        source,
        distances: dist,
    })
}

/// Fields from every source of a frame, plus the frame-global maximum finite
/// distance used for per-frame histogram binning.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicFields {
    pub fields: Vec<GeodesicField>,
    pub max_finite: f64,
}

impl GeodesicFields {
    pub fn get(&self, source: usize) -> &GeodesicField {
        &self.fields[source]
    }

    /// Writes the distance matrix as CSV, one row per source; unreachable
    /// entries are written as `inf`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.fields.len();
        let header: Vec<String> = (0..n).map(|j| j.to_string()).collect();
        writeln!(out, "source,{}", header.join(","))?;
        for f in &self.fields {
            write!(out, "{}", f.source)?;
            for d in &f.distances {
                match d {
                    Some(d) => write!(out, ",{d}")?,
                    None => write!(out, ",inf")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub fn all_source_geodesics(graph: &FrameGraph) -> GeodesicFields {
    let fields: Vec<GeodesicField> = (0..graph.len())
        .into_par_iter()
        .map(|s| geodesic_from(graph, s).expect("source index in range"))
        .collect();
    let max_finite = fields.iter().map(GeodesicField::max_finite).fold(0.0, f64::max);
    GeodesicFields { fields, max_finite }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spgraph::{Edge, Superpixel};

    fn path_graph(weights: &[(usize, usize, f64)], n: usize) -> FrameGraph {
        let nodes = (0..n)
            .map(|i| Superpixel {
                id: i,
                label: i as u32,
                frame: 0,
                area: 1,
                centroid: (i as f64, 0.0),
                mean_intensity: 0.0,
            })
            .collect();
        let edges = weights.iter().map(|&(a, b, weight)| Edge { a, b, weight }).collect();
        FrameGraph::new(0, n, 1, nodes, edges).unwrap()
    }

    #[test]
    fn chain_distance() {
        let g = path_graph(&[(0, 1, 0.3), (1, 2, 0.4)], 3);
        let f = geodesic_from(&g, 0).unwrap();
        assert_eq!(f.distance(0), Some(0.0));
        assert!((f.distance(2).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn unreachable_is_none() {
        let g = path_graph(&[(0, 1, 0.3), (2, 3, 0.1)], 4);
        let f = geodesic_from(&g, 0).unwrap();
        assert_eq!(f.distance(2), None);
        assert_eq!(f.distance(3), None);
        let all = all_source_geodesics(&g);
        assert!((all.max_finite - 0.3).abs() < 1e-15);
    }

    #[test]
    fn invalid_source() {
        let g = path_graph(&[], 2);
        assert!(matches!(geodesic_from(&g, 2), Err(Error::InvalidNode { index: 2, len: 2 })));
    }

    #[test]
    fn single_node() {
        let g = path_graph(&[], 1);
        let all = all_source_geodesics(&g);
        assert_eq!(all.fields.len(), 1);
        assert_eq!(all.fields[0].distances(), &[Some(0.0)]);
        assert_eq!(all.max_finite, 0.0);
    }

    #[test]
    fn csv_dump() {
        let g = path_graph(&[(0, 1, 0.5)], 3);
        let mut buf = Vec::new();
        all_source_geodesics(&g).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "source,0,1,2\n0,0,0.5,inf\n1,0.5,0,inf\n2,inf,inf,0\n");
    }
}
