//! Geodesic distance histograms.
//!
//! For a superpixel `x`, every other superpixel `y` of the frame casts a vote
//! of weight `(|y| / |f|) * exp(-mu * |c_x - c_y|)` into the cell indexed by
//! its mean intensity and its geodesic distance from `x`. The 1D histogram
//! keeps only the geodesic axis; the pyramid adds one histogram per 2x2 frame
//! quadrant, each collecting the contributors whose centroid lies in it.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{GeodesicField, GeodesicFields};
use crate::spgraph::{FrameGraph, Superpixel};

pub const DEFAULT_INTENSITY_BINS: usize = 13;
pub const DEFAULT_GEODESIC_BINS: usize = 9;
pub const DEFAULT_MU: f64 = 0.02;

/// Upper end of the geodesic binning range.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeodesicRange {
    /// Maximum finite distance over all sources of the frame.
    #[default]
    PerFrameMax,
    Fixed(f64),
}

impl std::str::FromStr for GeodesicRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "per-frame-max" {
            return Ok(GeodesicRange::PerFrameMax);
        }
        let upper = s
            .strip_prefix("fixed:")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::param(format!("geodesic range {s:?} is neither per-frame-max nor fixed:<upper>")))?;
        Ok(GeodesicRange::Fixed(upper))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinningConfig {
    pub intensity_bins: usize,
    pub geodesic_bins: usize,
    pub geodesic_range: GeodesicRange,
    /// Spatial decay of the voting weight, in 1/pixels.
    pub mu: f64,
    pub include_self: bool,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig {
            intensity_bins: DEFAULT_INTENSITY_BINS,
            geodesic_bins: DEFAULT_GEODESIC_BINS,
            geodesic_range: GeodesicRange::PerFrameMax,
            mu: DEFAULT_MU,
            include_self: false,
        }
    }
}

impl BinningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.intensity_bins == 0 || self.geodesic_bins == 0 {
            return Err(Error::param("histogram bin counts must be at least 1"));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::param(format!("mu must be finite and >= 0, got {}", self.mu)));
        }
        if let GeodesicRange::Fixed(upper) = self.geodesic_range {
            if !(upper > 0.0 && upper.is_finite()) {
                return Err(Error::param(format!("fixed geodesic range must be > 0, got {upper}")));
            }
        }
        Ok(())
    }

    /// Resolves the geodesic upper bound for a frame. A frame whose distances
    /// are all zero gets an upper bound of 1 so every vote lands in bin 0.
    pub fn geodesic_upper(&self, frame_max_finite: f64) -> f64 {
        match self.geodesic_range {
            GeodesicRange::Fixed(upper) => upper,
            GeodesicRange::PerFrameMax if frame_max_finite > 0.0 => frame_max_finite,
            GeodesicRange::PerFrameMax => 1.0,
        }
    }

    pub fn intensity_bin(&self, intensity: f64) -> usize {
        bin_index(intensity, self.intensity_bins)
    }

    /// Unreachable nodes clamp to the last bin.
    pub fn geodesic_bin(&self, distance: Option<f64>, upper: f64) -> usize {
        match distance {
            Some(d) => bin_index(d / upper, self.geodesic_bins),
            None => self.geodesic_bins - 1,
        }
    }
}

#[inline]
fn bin_index(unit: f64, bins: usize) -> usize {
    let b = (unit * bins as f64).floor();
    if b <= 0.0 {
        0
    } else {
        (b as usize).min(bins - 1)
    }
}

/// Voting weight of `y` in the histogram of `x`.
pub fn spatial_weight(x: &Superpixel, y: &Superpixel, frame_area: usize, mu: f64) -> Result<f64> {
    if frame_area == 0 {
        return Err(Error::param("frame area must be positive"));
    }
    let dx = x.centroid.0 - y.centroid.0;
    let dy = x.centroid.1 - y.centroid.1;
    let l2 = (dx * dx + dy * dy).sqrt();
    Ok(y.area as f64 / frame_area as f64 * (-mu * l2).exp())
}

/// Intensity rows by geodesic columns, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D {
    intensity_bins: usize,
    geodesic_bins: usize,
    mass: Vec<f64>,
}

impl Histogram2D {
    pub fn zeros(intensity_bins: usize, geodesic_bins: usize) -> Self {
        Histogram2D {
            intensity_bins,
            geodesic_bins,
            mass: vec![0.0; intensity_bins * geodesic_bins],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let geodesic_bins = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || geodesic_bins == 0 {
            return Err(Error::Empty("histogram rows"));
        }
        if rows.iter().any(|r| r.len() != geodesic_bins) {
            return Err(Error::param("ragged histogram rows"));
        }
        if rows.iter().flatten().any(|&m| !(m >= 0.0 && m.is_finite())) {
            return Err(Error::param("histogram mass must be finite and non-negative"));
        }
        Ok(Histogram2D {
            intensity_bins: rows.len(),
            geodesic_bins,
            mass: rows.concat(),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.intensity_bins, self.geodesic_bins)
    }

    #[inline]
    pub fn get(&self, i_bin: usize, g_bin: usize) -> f64 {
        self.mass[i_bin * self.geodesic_bins + g_bin]
    }

    #[inline]
    fn add(&mut self, i_bin: usize, g_bin: usize, w: f64) {
        self.mass[i_bin * self.geodesic_bins + g_bin] += w;
    }

    pub fn row(&self, i_bin: usize) -> &[f64] {
        &self.mass[i_bin * self.geodesic_bins..(i_bin + 1) * self.geodesic_bins]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.mass.chunks_exact(self.geodesic_bins)
    }

    pub fn cells(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Sum over the intensity axis.
    pub fn geodesic_marginal(&self) -> Histogram1D {
        let mut out = vec![0.0; self.geodesic_bins];
        for row in self.rows() {
            for (o, &m) in out.iter_mut().zip(row) {
                *o += m;
            }
        }
        Histogram1D { mass: out }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram1D {
    pub mass: Vec<f64>,
}

impl Histogram1D {
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// Level-0 histogram plus four level-1 quadrant histograms in row-major
/// order (top-left, top-right, bottom-left, bottom-right).
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidFeature {
    pub level0: Histogram2D,
    pub level1: [Histogram2D; 4],
}

/// Quadrant of a point; coordinates exactly on the midline go right/bottom.
pub fn quadrant(centroid: (f64, f64), width: usize, height: usize) -> usize {
    let right = centroid.0 >= width as f64 / 2.0;
    let bottom = centroid.1 >= height as f64 / 2.0;
    (bottom as usize) * 2 + right as usize
}

struct Vote {
    i_bin: usize,
    g_bin: usize,
    weight: f64,
    quadrant: usize,
}

fn votes<'a>(
    x: usize,
    graph: &'a FrameGraph,
    field: &'a GeodesicField,
    cfg: &'a BinningConfig,
    geodesic_upper: f64,
) -> Result<impl Iterator<Item = Vote> + 'a> {
    cfg.validate()?;
    if x >= graph.len() {
        return Err(Error::InvalidNode { index: x, len: graph.len() });
    }
    if field.len() != graph.len() {
        return Err(Error::param(format!(
            "geodesic field covers {} nodes, graph has {}",
            field.len(),
            graph.len()
        )));
    }
    if field.source() != x {
        return Err(Error::param(format!("geodesic field source {} differs from x={x}", field.source())));
    }
    if !(geodesic_upper > 0.0 && geodesic_upper.is_finite()) {
        return Err(Error::param(format!("geodesic upper bound must be > 0, got {geodesic_upper}")));
    }
    let source = graph.node(x);
    let area = graph.frame_area();
    let (w, h) = (graph.width(), graph.height());
    Ok(graph
        .nodes()
        .iter()
        .filter(move |y| cfg.include_self || y.id != x)
        .map(move |y| Vote {
            i_bin: cfg.intensity_bin(y.mean_intensity),
            g_bin: cfg.geodesic_bin(field.distance(y.id), geodesic_upper),
            weight: spatial_weight(source, y, area, cfg.mu).expect("frame area is positive"),
            quadrant: quadrant(y.centroid, w, h),
        }))
}

pub fn build_2d_histogram(
    x: usize,
    graph: &FrameGraph,
    field: &GeodesicField,
    cfg: &BinningConfig,
    geodesic_upper: f64,
) -> Result<Histogram2D> {
    let mut hist = Histogram2D::zeros(cfg.intensity_bins, cfg.geodesic_bins);
    for v in votes(x, graph, field, cfg, geodesic_upper)? {
        hist.add(v.i_bin, v.g_bin, v.weight);
    }
    Ok(hist)
}

/// Geodesic-only histogram: the 2D histogram with the intensity axis summed
/// out.
pub fn build_1d_histogram(
    x: usize,
    graph: &FrameGraph,
    field: &GeodesicField,
    cfg: &BinningConfig,
    geodesic_upper: f64,
) -> Result<Histogram1D> {
    Ok(build_2d_histogram(x, graph, field, cfg, geodesic_upper)?.geodesic_marginal())
}

pub fn build_pyramid_feature(
    x: usize,
    graph: &FrameGraph,
    field: &GeodesicField,
    cfg: &BinningConfig,
    geodesic_upper: f64,
) -> Result<PyramidFeature> {
    let zeros = Histogram2D::zeros(cfg.intensity_bins, cfg.geodesic_bins);
    let mut level0 = zeros.clone();
    let mut level1 = [zeros.clone(), zeros.clone(), zeros.clone(), zeros];
    for v in votes(x, graph, field, cfg, geodesic_upper)? {
        level0.add(v.i_bin, v.g_bin, v.weight);
        level1[v.quadrant].add(v.i_bin, v.g_bin, v.weight);
    }
    Ok(PyramidFeature { level0, level1 })
}

/// Pyramid features of every superpixel in a frame.
pub fn frame_features(graph: &FrameGraph, fields: &GeodesicFields, cfg: &BinningConfig) -> Result<Vec<PyramidFeature>> {
    let upper = cfg.geodesic_upper(fields.max_finite);
    (0..graph.len())
        .into_par_iter()
        .map(|x| build_pyramid_feature(x, graph, fields.get(x), cfg, upper))
        .collect()
}

/// Formats like C's `%.{digits}g`.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return if value == 0.0 { "0".into() } else { value.to_string() };
    }
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{value:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const FEATURE_CSV_HEADER: &str = "frame,superpixel_id,level,cell,i_bin,g_bin,mass";

/// Writes the non-zero cells of each feature. `superpixel_id` is the region id
/// from the label map.
pub fn write_features_csv<W: Write>(mut out: W, graph: &FrameGraph, features: &[PyramidFeature]) -> std::io::Result<()> {
    let mut emit = |sp: &Superpixel, level: usize, cell: usize, h: &Histogram2D| -> std::io::Result<()> {
        let (ib, gb) = h.shape();
        for i in 0..ib {
            for g in 0..gb {
                let m = h.get(i, g);
                if m != 0.0 {
                    writeln!(
                        out,
                        "{},{},{level},{cell},{i},{g},{}",
                        sp.frame,
                        sp.label,
                        format_significant(m, 9)
                    )?;
                }
            }
        }
        Ok(())
    };
    for (sp, f) in graph.nodes().iter().zip(features) {
        emit(sp, 0, 0, &f.level0)?;
        for (c, h) in f.level1.iter().enumerate() {
            emit(sp, 1, c, h)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::{all_source_geodesics, geodesic_from};
    use crate::spgraph::Edge;

    fn sp(id: usize, area: usize, centroid: (f64, f64), intensity: f64) -> Superpixel {
        Superpixel {
            id,
            label: id as u32,
            frame: 0,
            area,
            centroid,
            mean_intensity: intensity,
        }
    }

    #[test]
    fn spatial_weight_values() {
        let x = sp(0, 1, (0.0, 0.0), 0.0);
        let y = sp(1, 400, (60.0, 80.0), 0.0);
        assert!((spatial_weight(&x, &y, 40000, 0.0).unwrap() - 0.01).abs() < 1e-15);
        let w = spatial_weight(&x, &y, 40000, 0.02).unwrap();
        assert!((w - 0.01 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((w - 1.3534e-3).abs() < 1e-7);
        let same = sp(2, 400, (0.0, 0.0), 0.0);
        assert_eq!(spatial_weight(&x, &same, 40000, 5.0).unwrap(), 0.01);
        assert!(spatial_weight(&x, &y, 0, 0.0).is_err());
    }

    fn two_node_graph() -> FrameGraph {
        // 10x10 frame split into two 50-pixel halves
        let nodes = vec![sp(0, 50, (2.0, 4.5), 0.7), sp(1, 50, (7.0, 4.5), 0.0)];
        FrameGraph::new(0, 10, 10, nodes, vec![Edge { a: 0, b: 1, weight: 0.5 }]).unwrap()
    }

    #[test]
    fn two_node_histograms() {
        let g = two_node_graph();
        let field = geodesic_from(&g, 0).unwrap();
        let cfg = BinningConfig { mu: 0.0, ..Default::default() };
        let h = build_2d_histogram(0, &g, &field, &cfg, 0.5).unwrap();
        assert_eq!(h.get(0, 8), 0.5);
        assert!((h.total() - 0.5).abs() < 1e-15);
        let h1 = build_1d_histogram(0, &g, &field, &cfg, 0.5).unwrap();
        assert_eq!(h1.mass[8], 0.5);
        assert_eq!(h1.total(), 0.5);
    }

    #[test]
    fn include_self_adds_own_cell() {
        let g = two_node_graph();
        let field = geodesic_from(&g, 0).unwrap();
        let cfg = BinningConfig { mu: 0.0, include_self: true, ..Default::default() };
        let h = build_2d_histogram(0, &g, &field, &cfg, 0.5).unwrap();
        // intensity 0.7 -> floor(9.1) = 9
        assert_eq!(h.get(9, 0), 0.5);
        assert!((h.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_node_is_empty() {
        let g = FrameGraph::new(0, 2, 2, vec![sp(0, 4, (0.5, 0.5), 0.3)], vec![]).unwrap();
        let fields = all_source_geodesics(&g);
        let cfg = BinningConfig::default();
        let h = build_2d_histogram(0, &g, fields.get(0), &cfg, cfg.geodesic_upper(fields.max_finite)).unwrap();
        assert_eq!(h.total(), 0.0);
    }

    #[test]
    fn unreachable_clamps_to_last_bin() {
        let nodes = vec![sp(0, 1, (0.0, 0.0), 0.0), sp(1, 1, (1.0, 0.0), 1.0)];
        let g = FrameGraph::new(0, 2, 1, nodes, vec![]).unwrap();
        let field = geodesic_from(&g, 0).unwrap();
        let cfg = BinningConfig { mu: 0.0, ..Default::default() };
        let h = build_2d_histogram(0, &g, &field, &cfg, 1.0).unwrap();
        assert_eq!(h.get(12, 8), 0.5);
    }

    #[test]
    fn bin_edges() {
        let cfg = BinningConfig::default();
        assert_eq!(cfg.intensity_bin(0.0), 0);
        assert_eq!(cfg.intensity_bin(1.0), 12);
        assert_eq!(cfg.intensity_bin(1.0 / 13.0 + 1e-12), 1);
        assert_eq!(cfg.geodesic_bin(Some(0.0), 2.0), 0);
        assert_eq!(cfg.geodesic_bin(Some(2.0), 2.0), 8);
        assert_eq!(cfg.geodesic_bin(Some(5.0), 2.0), 8);
        assert_eq!(cfg.geodesic_bin(None, 2.0), 8);
        assert_eq!(cfg.geodesic_upper(0.0), 1.0);
        let fixed = BinningConfig { geodesic_range: GeodesicRange::Fixed(3.0), ..cfg };
        assert_eq!(fixed.geodesic_upper(0.7), 3.0);
    }

    #[test]
    fn errors() {
        let g = two_node_graph();
        let field = geodesic_from(&g, 0).unwrap();
        let cfg = BinningConfig::default();
        assert!(build_2d_histogram(0, &g, &field, &cfg, 0.0).is_err());
        assert!(build_2d_histogram(1, &g, &field, &cfg, 1.0).is_err());
        let other = FrameGraph::new(0, 3, 1, (0..3).map(|i| sp(i, 1, (i as f64, 0.0), 0.0)).collect(), vec![]).unwrap();
        let wrong = geodesic_from(&other, 0).unwrap();
        assert!(build_2d_histogram(0, &g, &wrong, &cfg, 1.0).is_err());
        let bad = BinningConfig { geodesic_bins: 0, ..cfg };
        assert!(build_2d_histogram(0, &g, &field, &bad, 1.0).is_err());
    }

    #[test]
    fn pyramid_one_contributor_per_quadrant() {
        // 4x4 frame, four 2x2 blocks plus nothing else; source is block 0
        let nodes = vec![
            sp(0, 4, (0.5, 0.5), 0.1),
            sp(1, 4, (2.5, 0.5), 0.1),
            sp(2, 4, (0.5, 2.5), 0.1),
            sp(3, 4, (2.5, 2.5), 0.1),
        ];
        let edges = vec![
            Edge { a: 0, b: 1, weight: 0.2 },
            Edge { a: 0, b: 2, weight: 0.2 },
            Edge { a: 1, b: 3, weight: 0.2 },
            Edge { a: 2, b: 3, weight: 0.2 },
        ];
        let g = FrameGraph::new(0, 4, 4, nodes, edges).unwrap();
        let fields = all_source_geodesics(&g);
        let cfg = BinningConfig { mu: 0.0, include_self: true, ..Default::default() };
        let f = build_pyramid_feature(0, &g, fields.get(0), &cfg, 0.4).unwrap();
        assert!((f.level0.total() - 1.0).abs() < 1e-15);
        for cell in &f.level1 {
            assert!((cell.total() - f.level0.total() / 4.0).abs() < 1e-15);
        }
        assert_eq!(f.level1[3].get(1, 8), 0.25);
    }

    #[test]
    fn quadrant_midline_goes_right_bottom() {
        assert_eq!(quadrant((1.9, 1.9), 4, 4), 0);
        assert_eq!(quadrant((2.0, 0.0), 4, 4), 1);
        assert_eq!(quadrant((0.0, 2.0), 4, 4), 2);
        assert_eq!(quadrant((2.0, 2.0), 4, 4), 3);
    }

    #[test]
    fn significant_digit_format() {
        assert_eq!(format_significant(0.5, 9), "0.5");
        assert_eq!(format_significant(0.01 * (-2.0f64).exp(), 9), "0.00135335283");
        assert_eq!(format_significant(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(format_significant(1.234e-7, 9), "1.234e-07");
        assert_eq!(format_significant(0.0, 9), "0");
        assert_eq!(format_significant(123456789.4, 9), "123456789");
    }

    #[test]
    fn features_csv_lists_nonzero_cells() {
        let g = two_node_graph();
        let fields = all_source_geodesics(&g);
        let cfg = BinningConfig { mu: 0.0, ..Default::default() };
        let feats = frame_features(&g, &fields, &cfg).unwrap();
        let mut buf = Vec::new();
        write_features_csv(&mut buf, &g, &feats).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        // node 0: level0 + its right-half contributor; node 1: level0 + left-half contributor
        assert_eq!(lines, vec!["0,0,0,0,0,8,0.5", "0,0,1,1,0,8,0.5", "0,1,0,0,9,8,0.5", "0,1,1,0,9,8,0.5"]);
    }

    #[test]
    fn geodesic_range_parse() {
        assert_eq!("per-frame-max".parse::<GeodesicRange>().unwrap(), GeodesicRange::PerFrameMax);
        assert_eq!("fixed:2.5".parse::<GeodesicRange>().unwrap(), GeodesicRange::Fixed(2.5));
        assert!("fixed".parse::<GeodesicRange>().is_err());
    }
}
