//! Distances between histogram features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histfeat::{Histogram2D, PyramidFeature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    Chi2,
    Emd,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chi2" => Ok(Metric::Chi2),
            "emd" => Ok(Metric::Emd),
            other => Err(Error::param(format!("unknown metric {other:?} (expected chi2 or emd)"))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Chi2 => "chi2",
            Metric::Emd => "emd",
        })
    }
}

/// Weights applied when summing per-cell distances of two pyramids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PyramidWeights {
    pub level0: f64,
    /// Applied to each of the four level-1 cells.
    pub level1: f64,
}

impl Default for PyramidWeights {
    fn default() -> Self {
        PyramidWeights {
            level0: 1.0,
            level1: 0.25,
        }
    }
}

fn check_shapes(p: &Histogram2D, q: &Histogram2D) -> Result<()> {
    if p.shape() == q.shape() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            left: p.shape(),
            right: q.shape(),
        })
    }
}

/// Half the sum of squared cell differences over cell sums; empty cells on
/// both sides contribute nothing.
pub fn chi_square_2d(p: &Histogram2D, q: &Histogram2D) -> Result<f64> {
    check_shapes(p, q)?;
    let sum: f64 = p
        .cells()
        .iter()
        .zip(q.cells())
        .map(|(&a, &b)| {
            let s = a + b;
            if s > 0.0 {
                (a - b) * (a - b) / s
            } else {
                0.0
            }
        })
        .sum();
    Ok(0.5 * sum)
}

/// EMD along one axis with unit spacing: the L1 norm of the difference of
/// cumulative sums. When totals differ the final cumulative gap is charged
/// once more at the last step.
pub fn emd_1d(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch {
            left: (1, p.len()),
            right: (1, q.len()),
        });
    }
    let mut gap = 0.0;
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        gap += a - b;
        total += gap.abs();
    }
    Ok(total)
}

/// Sum of per-intensity-row 1D EMDs.
pub fn emd_2d(p: &Histogram2D, q: &Histogram2D) -> Result<f64> {
    check_shapes(p, q)?;
    p.rows().zip(q.rows()).map(|(a, b)| emd_1d(a, b)).sum()
}

pub fn histogram_distance(p: &Histogram2D, q: &Histogram2D, metric: Metric) -> Result<f64> {
    match metric {
        Metric::Chi2 => chi_square_2d(p, q),
        Metric::Emd => emd_2d(p, q),
    }
}

pub fn pyramid_distance(a: &PyramidFeature, b: &PyramidFeature, metric: Metric, w: &PyramidWeights) -> Result<f64> {
    let mut d = w.level0 * histogram_distance(&a.level0, &b.level0, metric)?;
    for (ca, cb) in a.level1.iter().zip(&b.level1) {
        d += w.level1 * histogram_distance(ca, cb, metric)?;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(rows: &[&[f64]]) -> Histogram2D {
        Histogram2D::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn chi_square_fixtures() {
        let p = h(&[&[0.5, 0.0], &[0.0, 0.5]]);
        let q = h(&[&[0.0, 0.5], &[0.5, 0.0]]);
        assert!((chi_square_2d(&p, &q).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(chi_square_2d(&p, &p).unwrap(), 0.0);
        let a = h(&[&[1.0, 0.0]]);
        let b = h(&[&[0.5, 0.5]]);
        let expected = 0.5 * (0.25 / 1.5 + 0.25 / 0.5);
        assert!((chi_square_2d(&a, &b).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.33333).abs() < 1e-5);
    }

    #[test]
    fn chi_square_shape_mismatch() {
        let a = h(&[&[1.0, 0.0]]);
        let b = h(&[&[1.0], &[0.0]]);
        assert!(matches!(chi_square_2d(&a, &b), Err(Error::ShapeMismatch { .. })));
        assert!(emd_2d(&a, &b).is_err());
    }

    #[test]
    fn emd_fixtures() {
        assert_eq!(emd_1d(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(emd_1d(&[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(emd_1d(&[0.2, 0.3], &[0.2, 0.3]).unwrap(), 0.0);
        assert!(emd_1d(&[1.0], &[1.0, 0.0]).is_err());
        // unequal mass: cumulative gaps 0.5, 0.5
        assert_eq!(emd_1d(&[0.5, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn emd_2d_sums_rows() {
        let p = h(&[&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        let q = h(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(emd_2d(&p, &q).unwrap(), 4.0);
        let single_p = h(&[&[0.5, 0.5, 0.0]]);
        let single_q = h(&[&[0.0, 0.5, 0.5]]);
        assert_eq!(emd_2d(&single_p, &single_q).unwrap(), 1.0);
    }

    fn pyramid(level0: Histogram2D, cells: [Histogram2D; 4]) -> PyramidFeature {
        PyramidFeature { level0, level1: cells }
    }

    #[test]
    fn pyramid_aggregation() {
        let zero = h(&[&[0.0, 0.0]]);
        let a = pyramid(h(&[&[1.0, 0.0]]), std::array::from_fn(|_| zero.clone()));
        let b = pyramid(h(&[&[0.5, 0.5]]), std::array::from_fn(|_| zero.clone()));
        let w = PyramidWeights::default();
        assert_eq!(pyramid_distance(&a, &a, Metric::Chi2, &w).unwrap(), 0.0);
        assert_eq!(
            pyramid_distance(&a, &b, Metric::Chi2, &w).unwrap(),
            chi_square_2d(&a.level0, &b.level0).unwrap()
        );
        // [x, 0] vs [0, x] has chi2 = x: level 0 at 0.4, each cell at 0.1
        let cell_a = h(&[&[0.1, 0.0]]);
        let cell_b = h(&[&[0.0, 0.1]]);
        let l0a = h(&[&[0.4, 0.0]]);
        let l0b = h(&[&[0.0, 0.4]]);
        let pa = pyramid(l0a, std::array::from_fn(|_| cell_a.clone()));
        let pb = pyramid(l0b, std::array::from_fn(|_| cell_b.clone()));
        assert!((chi_square_2d(&cell_a, &cell_b).unwrap() - 0.1).abs() < 1e-15);
        assert!((pyramid_distance(&pa, &pb, Metric::Chi2, &w).unwrap() - 0.5).abs() < 1e-15);
    }
}
