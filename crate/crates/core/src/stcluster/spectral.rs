use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::affinity::AffinityMatrix;
use crate::error::{Error, Result};
use crate::image::{LabeledVolume, Plane};

pub const KMEANS_MAX_ITERATIONS: usize = 300;

/// Cluster id per global node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationLabeling {
    pub labels: Vec<usize>,
    pub k: usize,
}

/// `I - D^{-1/2} A D^{-1/2}`, with isolated nodes given degree 1.
pub fn normalized_laplacian(a: &AffinityMatrix) -> DMatrix<f64> {
    let n = a.len();
    let mut degree = vec![0.0; n];
    for &(i, j, w) in a.entries() {
        degree[i] += w;
        degree[j] += w;
    }
    let inv_sqrt: Vec<f64> = degree
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 })
        .collect();
    let mut l = DMatrix::<f64>::identity(n, n);
    for &(i, j, w) in a.entries() {
        let v = -w * inv_sqrt[i] * inv_sqrt[j];
        l[(i, j)] = v;
        l[(j, i)] = v;
    }
    l
}

/// Row-normalized eigenvectors of the `k` smallest Laplacian eigenvalues, one
/// row per node. Zero rows stay zero.
pub fn spectral_embedding(a: &AffinityMatrix, k: usize) -> Vec<Vec<f64>> {
    let n = a.len();
    let eig = SymmetricEigen::new(normalized_laplacian(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]).then(x.cmp(&y)));
    (0..n)
        .map(|i| {
            let mut row: Vec<f64> = order[..k].iter().map(|&c| eig.eigenvectors[(i, c)]).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
            row
        })
        .collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = dist2(p, center);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations until assignments stop
/// changing or the iteration cap is reached.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight")
        } else {
            // fewer distinct points than clusters
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &points[next]));
        }
    }
    let mut centers: Vec<Vec<f64>> = chosen.iter().map(|&i| points[i].clone()).collect();
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
    let dim = points.first().map_or(0, Vec::len);
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    assign
}

pub fn spectral_cluster(a: &AffinityMatrix, k: usize, seed: u64) -> Result<SegmentationLabeling> {
    let n = a.len();
    if k == 0 {
        return Err(Error::param("cluster count must be >= 1"));
    }
    if k > n {
        return Err(Error::param(format!("cluster count {k} exceeds node count {n}")));
    }
    let labels = if k == 1 {
        vec![0; n]
    } else {
        kmeans(&spectral_embedding(a, k), k, seed)
    };
    Ok(SegmentationLabeling { labels, k })
}

/// Paints every pixel with the cluster of its superpixel. Global node order is
/// frame-major, ascending region id within a frame.
pub fn labels_to_volume(labeling: &SegmentationLabeling, superpixels: &LabeledVolume) -> Result<LabeledVolume> {
    let mut offset = 0usize;
    let mut frames = Vec::with_capacity(superpixels.num_frames());
    for t in 0..superpixels.num_frames() {
        let labels = superpixels.frame_labels(t);
        if offset + labels.len() > labeling.labels.len() {
            return Err(Error::param(format!(
                "labeling covers {} nodes, superpixel frame {t} needs nodes up to {}",
                labeling.labels.len(),
                offset + labels.len()
            )));
        }
        let frame = superpixels.frame(t);
        let data = frame
            .data()
            .iter()
            .map(|l| {
                let local = labels.binary_search(l).expect("label from this frame");
                labeling.labels[offset + local] as u32
            })
            .collect();
        frames.push(Plane::new(frame.width(), frame.height(), data)?);
        offset += labels.len();
    }
    if offset != labeling.labels.len() {
        return Err(Error::param(format!(
            "labeling covers {} nodes, superpixel volume has {offset}",
            labeling.labels.len()
        )));
    }
    LabeledVolume::new(frames)
}
