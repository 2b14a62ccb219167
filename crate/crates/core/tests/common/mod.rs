#![allow(dead_code)]

use geohist::image::{BoundaryMap, IntensityFrame, LabeledVolume, Plane};
use geohist::spgraph::{build_frame_graph, Edge, FrameGraph, Superpixel};
use geohist::stcluster::AffinityMatrix;
use geohist::synth::{generate_scene, grid_superpixels, SceneObject, SceneSpec, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Graph on `n` unit-area nodes laid out as a 1-pixel-high strip, with each
/// pair connected with probability `density`.
pub fn random_graph(rng: &mut impl Rng, n: usize, density: f64) -> FrameGraph {
    let nodes = (0..n)
        .map(|i| Superpixel {
            id: i,
            label: i as u32,
            frame: 0,
            area: 1,
            centroid: (i as f64, 0.0),
            mean_intensity: rng.random(),
        })
        .collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < density {
                let weight = if rng.random::<f64>() < 0.05 { 0.0 } else { rng.random() };
                edges.push(Edge { a, b, weight });
            }
        }
    }
    FrameGraph::new(0, n, 1, nodes, edges).unwrap()
}

/// All-pairs shortest paths by Floyd-Warshall; `None` where unreachable.
pub fn floyd_warshall(g: &FrameGraph) -> Vec<Vec<Option<f64>>> {
    let n = g.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in g.edges() {
        d[e.a][e.b] = d[e.a][e.b].min(e.weight);
        d[e.b][e.a] = d[e.b][e.a].min(e.weight);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d.into_iter()
        .map(|r| r.into_iter().map(|v| v.is_finite().then_some(v)).collect())
        .collect()
}

/// Minimum cost of moving `p` onto `q` (equal totals) with ground cost
/// `|i - j|`, by successive shortest augmenting paths on the transport network.
pub fn transport_lp(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len();
    // nodes: 0 source, 1..=n supplies, n+1..=2n demands, 2n+1 sink
    let (src, sink) = (0, 2 * n + 1);
    let mut arcs: Vec<(usize, usize, f64, f64)> = Vec::new(); // (from, to, cap, cost)
    let add = |arcs: &mut Vec<(usize, usize, f64, f64)>, u: usize, v: usize, cap: f64, cost: f64| {
        arcs.push((u, v, cap, cost));
        arcs.push((v, u, 0.0, -cost));
    };
    for i in 0..n {
        add(&mut arcs, src, 1 + i, p[i], 0.0);
        add(&mut arcs, 1 + n + i, sink, q[i], 0.0);
        for j in 0..n {
            add(&mut arcs, 1 + i, 1 + n + j, f64::INFINITY, (i as f64 - j as f64).abs());
        }
    }
    let nodes = 2 * n + 2;
    let eps = 1e-15;
    let mut total = 0.0;
    loop {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev = vec![usize::MAX; nodes];
        dist[src] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for (k, &(u, v, cap, cost)) in arcs.iter().enumerate() {
                if cap > eps && dist[u] + cost < dist[v] - 1e-15 {
                    dist[v] = dist[u] + cost;
                    prev[v] = k;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        let mut flow = f64::INFINITY;
        let mut v = sink;
        while v != src {
            let k = prev[v];
            flow = flow.min(arcs[k].2);
            v = arcs[k].0;
        }
        let mut v = sink;
        while v != src {
            let k = prev[v];
            arcs[k].2 -= flow;
            arcs[k ^ 1].2 += flow;
            total += flow * arcs[k].3;
            v = arcs[k].0;
        }
    }
    total
}

/// Two-way normalized cut value of a node subset.
pub fn ncut_value(a: &AffinityMatrix, side: &[bool]) -> f64 {
    let n = a.len();
    let mut cut = 0.0;
    let mut vol = [0.0; 2];
    for i in 0..n {
        for j in 0..n {
            let w = a.get(i, j);
            vol[side[i] as usize] += w;
            if side[i] != side[j] {
                cut += w;
            }
        }
    }
    // `cut` counted both directions
    let cut = cut / 2.0;
    cut / vol[0] + cut / vol[1]
}

/// Exhaustive minimum two-way normalized cut; node 0 is fixed on side false.
pub fn brute_force_ncut(a: &AffinityMatrix) -> Vec<bool> {
    let n = a.len();
    let mut best = (f64::INFINITY, vec![false; n]);
    for mask in 1u64..(1 << (n - 1)) {
        let side: Vec<bool> = (0..n).map(|i| i > 0 && mask >> (i - 1) & 1 == 1).collect();
        let v = ncut_value(a, &side);
        if v < best.0 {
            best = (v, side);
        }
    }
    best.1
}

/// Random label map from `regions` Voronoi sites under the L1 distance.
pub fn voronoi_labels(rng: &mut impl Rng, w: usize, h: usize, regions: usize) -> Plane<u32> {
    let sites: Vec<(i64, i64)> = (0..regions)
        .map(|_| (rng.random_range(0..w as i64), rng.random_range(0..h as i64)))
        .collect();
    Plane::from_fn(w, h, |x, y| {
        let (x, y) = (x as i64, y as i64);
        sites
            .iter()
            .enumerate()
            .min_by_key(|(_, &(sx, sy))| (sx - x).abs() + (sy - y).abs())
            .map(|(i, _)| i as u32)
            .unwrap()
    })
    .unwrap()
}

pub fn random_unit_plane(rng: &mut impl Rng, w: usize, h: usize) -> Vec<f64> {
    (0..w * h).map(|_| rng.random::<f64>()).collect()
}

/// Frame graph over a random Voronoi partition with random intensities and
/// boundary strengths.
pub fn random_frame(rng: &mut impl Rng, w: usize, h: usize, regions: usize) -> (FrameGraph, Plane<u32>) {
    let labels = voronoi_labels(rng, w, h, regions);
    let intensity = IntensityFrame::new(w, h, random_unit_plane(rng, w, h)).unwrap();
    let boundary = BoundaryMap::new(w, h, random_unit_plane(rng, w, h)).unwrap();
    (build_frame_graph(0, &labels, &intensity, &boundary).unwrap(), labels)
}

pub fn volume(frames: Vec<Vec<u32>>, w: usize, h: usize) -> LabeledVolume {
    LabeledVolume::new(frames.into_iter().map(|f| Plane::new(w, h, f).unwrap()).collect()).unwrap()
}

pub fn rect(w: f64, h: f64, start: (f64, f64), velocity: (f64, f64), intensity: f64) -> SceneObject {
    SceneObject {
        shape: Shape::Rectangle { width: w, height: h },
        intensity,
        start,
        velocity,
    }
}

/// Static 128x128 scene with two rectangles, used for the exactness check.
pub fn static_scene(num_frames: usize) -> SceneSpec {
    SceneSpec {
        width: 128,
        height: 128,
        num_frames,
        background: 0.2,
        texture_amplitude: 0.0,
        texture_period: 16.0,
        objects: vec![
            rect(48.0, 40.0, (36.0, 40.0), (0.0, 0.0), 0.8),
            rect(40.0, 48.0, (88.0, 84.0), (0.0, 0.0), 0.55),
        ],
        noise_sigma: 0.0,
        seed: 1,
    }
}

/// Scene `index` of the moving-shapes suite: 2 or 3 large objects moving
/// 2 px/frame along an axis, Gaussian noise 0.02.
pub fn moving_scene(index: u64, size: usize, num_frames: usize) -> SceneSpec {
    let mut rng = rng(100 + index);
    let n_obj = 2 + (index % 2) as usize;
    let sz = size as f64;
    let travel = 2.0 * (num_frames - 1) as f64;
    let mut objects = Vec::new();
    for k in 0..n_obj {
        let disc = k == 1;
        let w = rng.random_range(0.35 * sz..0.45 * sz);
        let h = if disc { w } else { rng.random_range(0.35 * sz..0.45 * sz) };
        let (vx, vy) = [(2.0, 0.0), (-2.0, 0.0), (0.0, 2.0), (0.0, -2.0)][rng.random_range(0..4)];
        let span = |len: f64, v: f64| {
            let lo = len / 2.0 + if v < 0.0 { travel } else { 0.0 } + 1.0;
            let hi = sz - len / 2.0 - if v > 0.0 { travel } else { 0.0 } - 1.0;
            (lo, hi.max(lo + 0.01))
        };
        let (xl, xh) = span(w, vx);
        let (yl, yh) = span(h, vy);
        let start = (rng.random_range(xl..xh), rng.random_range(yl..yh));
        let shape = if disc {
            Shape::Disc { radius: w / 2.0 }
        } else {
            Shape::Rectangle { width: w, height: h }
        };
        objects.push(SceneObject {
            shape,
            intensity: [0.75, 0.5, 0.9][k],
            start,
            velocity: (vx, vy),
        });
    }
    SceneSpec {
        width: size,
        height: size,
        num_frames,
        background: 0.25,
        texture_amplitude: 0.0,
        texture_period: 16.0,
        objects,
        noise_sigma: 0.02,
        seed: index,
    }
}

/// Static 72x72 canvas for the shifted-view test; two of the three objects
/// share an intensity.
pub fn stability_canvas() -> SceneSpec {
    SceneSpec {
        width: 72,
        height: 72,
        num_frames: 1,
        background: 0.25,
        texture_amplitude: 0.0,
        texture_period: 16.0,
        objects: vec![
            rect(20.0, 16.0, (16.0, 14.0), (0.0, 0.0), 0.7),
            SceneObject {
                shape: Shape::Disc { radius: 9.0 },
                intensity: 0.7,
                start: (46.0, 42.0),
                velocity: (0.0, 0.0),
            },
            rect(14.0, 18.0, (18.0, 48.0), (0.0, 0.0), 0.45),
        ],
        noise_sigma: 0.01,
        seed: 5,
    }
}

/// Two views of one static canvas, the second shifted by `shift`: frames,
/// ground truth and superpixels are all cropped from the same source, so each
/// superpixel has a translated counterpart.
pub struct ShiftedPair {
    pub frames: [IntensityFrame; 2],
    pub gt: [Plane<u32>; 2],
    pub superpixels: [Plane<u32>; 2],
}

pub fn shifted_pair(spec: &SceneSpec, size: usize, shift: (usize, usize), cell: usize) -> ShiftedPair {
    let scene = generate_scene(spec).unwrap();
    let sp = grid_superpixels(&scene.ground_truth, cell, true).unwrap();
    let offsets = [(0, 0), shift];
    let crop_u32 = |p: &Plane<u32>, (dx, dy): (usize, usize)| Plane::from_fn(size, size, |x, y| p.get(x + dx, y + dy)).unwrap();
    let crop_f = |f: &IntensityFrame, (dx, dy): (usize, usize)| {
        IntensityFrame::new(size, size, (0..size * size).map(|i| f.get(i % size + dx, i / size + dy)).collect()).unwrap()
    };
    ShiftedPair {
        frames: offsets.map(|o| crop_f(&scene.frames[0], o)),
        gt: offsets.map(|o| crop_u32(scene.ground_truth.frame(0), o)),
        superpixels: offsets.map(|o| crop_u32(sp.frame(0), o)),
    }
}
