use std::io::Write;

use serde::{Deserialize, Serialize};

use super::graph::SpatioTemporalGraph;
use crate::error::{Error, Result};

pub fn feature_affinity(distance: f64, gamma: f64) -> Result<f64> {
    if distance.is_nan() || distance < 0.0 {
        return Err(Error::param(format!("distance must be >= 0, got {distance}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param(format!("gamma must be finite and > 0, got {gamma}")));
    }
    Ok((-gamma * distance).exp())
}

/// Weighted geometric mean `base^(1 - alpha) * geo^alpha`.
pub fn combine_affinities(base: f64, geo: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("alpha must lie in [0,1], got {alpha}")));
    }
    if !(0.0..=1.0).contains(&base) || !(0.0..=1.0).contains(&geo) {
        return Err(Error::param(format!("affinities must lie in [0,1], got {base} and {geo}")));
    }
    Ok(if alpha == 0.0 {
        base
    } else if alpha == 1.0 {
        geo
    } else {
        base.powf(1.0 - alpha) * geo.powf(alpha)
    })
}

/// Kernel scale selection for one family of distances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMode {
    /// `1 / median` of the non-zero distances (1 when all are zero).
    #[default]
    Median,
    Fixed(f64),
}

impl std::str::FromStr for GammaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "median" {
            return Ok(GammaMode::Median);
        }
        s.strip_prefix("fixed:")
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|g| *g > 0.0 && g.is_finite())
            .map(GammaMode::Fixed)
            .ok_or_else(|| Error::param(format!("gamma mode {s:?} is neither median nor fixed:<gamma>")))
    }
}

impl GammaMode {
    pub fn resolve(&self, distances: impl Iterator<Item = f64>) -> f64 {
        match *self {
            GammaMode::Fixed(g) => g,
            GammaMode::Median => {
                let mut nonzero: Vec<f64> = distances.filter(|&d| d > 0.0).collect();
                if nonzero.is_empty() {
                    return 1.0;
                }
                nonzero.sort_by(f64::total_cmp);
                let n = nonzero.len();
                let median = if n % 2 == 1 {
                    nonzero[n / 2]
                } else {
                    0.5 * (nonzero[n / 2 - 1] + nonzero[n / 2])
                };
                1.0 / median
            }
        }
    }
}

/// Sparse symmetric affinities; each stored entry `(i, j, w)` has `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl AffinityMatrix {
    pub fn new(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut out: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, w) in entries {
            if i >= n || j >= n {
                return Err(Error::InvalidNode { index: i.max(j), len: n });
            }
            if i == j {
                return Err(Error::param(format!("diagonal affinity at node {i}")));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::param(format!("affinity {w} outside [0,1]")));
            }
            out.push((i.min(j), i.max(j), w));
        }
        out.sort_by_key(|&(i, j, _)| (i, j));
        if out.windows(2).any(|p| (p[0].0, p[0].1) == (p[1].0, p[1].1)) {
            return Err(Error::param("duplicate affinity entry"));
        }
        Ok(AffinityMatrix { n, entries: out })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.entries
            .binary_search_by_key(&key, |&(a, b, _)| (a, b))
            .map_or(0.0, |k| self.entries[k].2)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for &(i, j, w) in &self.entries {
            m[i][j] = w;
            m[j][i] = w;
        }
        m
    }

    /// Matrix Market coordinate format, symmetric, lower triangle, 1-based.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(out, "{} {} {}", self.n, self.n, self.entries.len())?;
        for &(i, j, w) in &self.entries {
            writeln!(out, "{} {} {w:e}", j + 1, i + 1)?;
        }
        Ok(())
    }
}

/// Resolved kernel parameters of an affinity build.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffinityParams {
    pub gamma_baseline: f64,
    pub gamma_feature: f64,
    pub alpha: f64,
}

/// Combines the baseline (intensity) and feature affinities on every graph
/// edge. Feature distances are only required when `alpha > 0`.
pub fn build_affinity(
    graph: &SpatioTemporalGraph,
    alpha: f64,
    gamma_baseline: GammaMode,
    gamma_feature: GammaMode,
) -> Result<(AffinityMatrix, AffinityParams)> {
    let gb = gamma_baseline.resolve(graph.edges().iter().map(|e| e.baseline_distance));
    let use_feature = alpha > 0.0;
    let feature = |e: &super::graph::StEdge| {
        e.feature_distance
            .ok_or_else(|| Error::param("feature distances not attached to the spatio-temporal graph"))
    };
    let gf = if use_feature {
        let ds = graph.edges().iter().map(feature).collect::<Result<Vec<f64>>>()?;
        gamma_feature.resolve(ds.into_iter())
    } else {
        gamma_feature.resolve(std::iter::empty())
    };
    let entries = graph
        .edges()
        .iter()
        .map(|e| {
            let base = feature_affinity(e.baseline_distance, gb)?;
            let geo = if use_feature { feature_affinity(feature(e)?, gf)? } else { 1.0 };
            Ok((e.a, e.b, combine_affinities(base, geo, alpha)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let matrix = AffinityMatrix::new(graph.num_nodes(), entries)?;
    Ok((
        matrix,
        AffinityParams {
            gamma_baseline: gb,
            gamma_feature: gf,
            alpha,
        },
    ))
}
