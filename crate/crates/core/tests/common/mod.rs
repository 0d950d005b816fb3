//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sngraph::grapher::GraphParams;
use sngraph::sampler::{SamplerMethod, SphereNode};
use sngraph::sdf::SdfGrid;
use sngraph::voxel::{solidify, VoxelGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
enum Prim {
    Ball([f64; 3], f64),
    Block([f64; 3], [f64; 3]),
}

impl Prim {
    fn contains(&self, p: [f64; 3]) -> bool {
        match *self {
            Prim::Ball(c, r) => (0..3).map(|a| (p[a] - c[a]).powi(2)).sum::<f64>() <= r * r,
            Prim::Block(lo, hi) => (0..3).all(|a| p[a] >= lo[a] && p[a] <= hi[a]),
        }
    }
}

/// Union of 1..=4 random balls, blocks and thin rods (voxel coordinates),
/// filled. Never empty.
pub fn random_solid(rng: &mut impl Rng, r: usize) -> VoxelGrid {
    let rf = r as f64;
    let k = rng.gen_range(1..=4);
    let mut prims = Vec::new();
    for _ in 0..k {
        let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.2 * rf..0.8 * rf));
        prims.push(match rng.gen_range(0..3) {
            0 => Prim::Ball(c, rng.gen_range(1.0..(rf / 3.0).max(1.5))),
            1 => {
                let h: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.5..(rf / 4.0).max(1.0)));
                Prim::Block(
                    std::array::from_fn(|a| c[a] - h[a]),
                    std::array::from_fn(|a| c[a] + h[a]),
                )
            }
            _ => {
                let axis = rng.gen_range(0..3);
                let w = rng.gen_range(0.0..1.5);
                let len = rng.gen_range(2.0..(rf / 2.0).max(2.5));
                let h: [f64; 3] = std::array::from_fn(|a| if a == axis { len } else { w });
                Prim::Block(
                    std::array::from_fn(|a| c[a] - h[a]),
                    std::array::from_fn(|a| c[a] + h[a]),
                )
            }
        });
    }
    let mut g = VoxelGrid::from_fn(r, |x, y, z| {
        let p = [x as f64, y as f64, z as f64];
        prims.iter().any(|pr| pr.contains(p))
    });
    if g.is_empty() {
        g.set(r / 2, r / 2, r / 2, true);
    }
    solidify(&g)
}

/// Independent voxels with occupancy probability `density`.
pub fn random_noise(rng: &mut impl Rng, r: usize, density: f64) -> VoxelGrid {
    VoxelGrid::from_fn(r, |_, _, _| rng.gen_bool(density))
}

fn coords(r: usize, i: usize) -> [i64; 3] {
    [(i % r) as i64, ((i / r) % r) as i64, (i / (r * r)) as i64]
}

/// Signed squared distances by exhaustive pairwise search. Occupied voxels
/// are positive, empty ones negative. `None` for an empty grid.
pub fn brute_signed_sq(g: &VoxelGrid) -> Option<Vec<i64>> {
    let r = g.resolution();
    let occ = g.occupancy();
    let full: Vec<[i64; 3]> = (0..occ.len()).filter(|&i| occ[i]).map(|i| coords(r, i)).collect();
    let free: Vec<[i64; 3]> = (0..occ.len()).filter(|&i| !occ[i]).map(|i| coords(r, i)).collect();
    if full.is_empty() {
        return None;
    }
    let nearest = |p: [i64; 3], set: &[[i64; 3]]| -> i64 {
        let mut best = i64::MAX;
        for q in set {
            let d = (p[0] - q[0]).pow(2) + (p[1] - q[1]).pow(2) + (p[2] - q[2]).pow(2);
            if d < best {
                best = d;
            }
        }
        best
    };
    let ri = r as i64;
    Some(
        (0..occ.len())
            .map(|i| {
                let p = coords(r, i);
                if occ[i] {
                    if free.is_empty() {
                        // the layer just outside the lattice
                        let d = p.iter().map(|&c| (c + 1).min(ri - c)).min().unwrap();
                        d * d
                    } else {
                        nearest(p, &free)
                    }
                } else {
                    -nearest(p, &full)
                }
            })
            .collect(),
    )
}

pub fn signed_sq_of(s: &SdfGrid) -> Vec<i64> {
    let r = s.resolution() as f64;
    s.values()
        .iter()
        .map(|&v| {
            let sq = (v * r * v * r).round() as i64;
            if v < 0.0 {
                -sq
            } else {
                sq
            }
        })
        .collect()
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]))
        .sqrt()
}

/// Max-min selection recomputed from scratch every iteration.
pub fn oracle_select(cands: &[SphereNode], n: usize, method: SamplerMethod) -> Vec<usize> {
    if cands.is_empty() || n == 0 {
        return Vec::new();
    }
    let max_r = cands.iter().map(|c| c.radius).fold(f64::MIN, f64::max);
    let mut sum = [0.0; 3];
    for c in cands {
        for a in 0..3 {
            sum[a] += c.center[a];
        }
    }
    let centroid = sum.map(|v| v / cands.len() as f64);
    let mut first = usize::MAX;
    let mut first_d = f64::INFINITY;
    for (i, c) in cands.iter().enumerate() {
        if c.radius == max_r {
            let d = dist(c.center, centroid);
            if d < first_d {
                first = i;
                first_d = d;
            }
        }
    }

    let mut chosen = vec![first];
    while chosen.len() < n {
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in cands.iter().enumerate() {
            if chosen.contains(&j) {
                continue;
            }
            let mut score = f64::INFINITY;
            let mut ok = true;
            for &i in &chosen {
                let s = &cands[i];
                let e = dist(s.center, c.center);
                let d = match method {
                    SamplerMethod::NodeSphere => {
                        if e - s.radius <= 0.0 {
                            ok = false;
                        }
                        e - s.radius + 2.0 * c.radius
                    }
                    SamplerMethod::Fss => e,
                };
                score = score.min(d);
            }
            if ok && best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        match best {
            Some((j, _)) => chosen.push(j),
            None => break,
        }
    }
    chosen
}

#[derive(Debug, PartialEq)]
pub struct OracleGraph {
    pub edges: Vec<[usize; 2]>,
    pub rule4: Vec<[usize; 2]>,
}

fn vsub(a: [usize; 3], b: [usize; 3]) -> [i64; 3] {
    std::array::from_fn(|k| a[k] as i64 - b[k] as i64)
}

fn dot(a: [i64; 3], b: [i64; 3]) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Rule 1 in exact integer arithmetic on voxel coordinates.
pub fn oracle_rule1(a: &SphereNode, b: &SphereNode, s: &SdfGrid, params: &GraphParams) -> bool {
    let p = params.p as i64;
    let mut outside = 0usize;
    for k in 0..p {
        let v: [usize; 3] = std::array::from_fn(|ax| {
            let (x0, x1) = (a.voxel[ax] as i64, b.voxel[ax] as i64);
            let num = 2 * p * x0 + (2 * k + 1) * (x1 - x0) + p;
            num.div_euclid(2 * p) as usize
        });
        if s.get(v) < params.t_d {
            outside += 1;
        }
    }
    (outside as f64 / params.p as f64) < params.t_p
}

/// Squared radius in voxel units (radii are square roots of integers).
pub fn radius_sq(n: &SphereNode, r: usize) -> i64 {
    let x = n.radius * r as f64;
    (x * x).round() as i64
}

/// True when segment `a`-`b` enters the open ball around `c`. Exact: the
/// squared point-segment distance is compared as a rational.
pub fn segment_enters_ball(a: [usize; 3], b: [usize; 3], c: [usize; 3], r2: i64) -> bool {
    let ab = vsub(b, a);
    let ac = vsub(c, a);
    let len2 = dot(ab, ab);
    let t = dot(ac, ab);
    if len2 == 0 || t <= 0 {
        dot(ac, ac) < r2
    } else if t >= len2 {
        let bc = vsub(c, b);
        dot(bc, bc) < r2
    } else {
        dot(ac, ac) * len2 - t * t < r2 * len2
    }
}

/// Full edge construction with integer geometry, for lattice nodes.
pub fn oracle_graph(nodes: &[SphereNode], s: &SdfGrid, params: &GraphParams) -> OracleGraph {
    let r = s.resolution();
    let n = nodes.len();
    let sq = |i: usize, j: usize| {
        let d = vsub(nodes[i].voxel, nodes[j].voxel);
        dot(d, d)
    };
    let mut cands = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !oracle_rule1(&nodes[i], &nodes[j], s, params) {
                continue;
            }
            let blocked = (0..n).any(|k| {
                k != i
                    && k != j
                    && segment_enters_ball(nodes[i].voxel, nodes[j].voxel, nodes[k].voxel, radius_sq(&nodes[k], r))
            });
            if !blocked {
                cands.push((sq(i, j), i, j));
            }
        }
    }
    cands.sort();
    let mut deg = vec![0usize; n];
    let mut edges = Vec::new();
    for (_, i, j) in cands {
        if deg[i] < params.q && deg[j] < params.q {
            deg[i] += 1;
            deg[j] += 1;
            edges.push([i, j]);
        }
    }
    let mut rule4 = Vec::new();
    for i in 0..n {
        if deg[i] > 0 || n < 2 {
            continue;
        }
        let j = (0..n).filter(|&j| j != i).min_by_key(|&j| (sq(i, j), j)).unwrap();
        deg[i] += 1;
        deg[j] += 1;
        let e = [i.min(j), i.max(j)];
        edges.push(e);
        rule4.push(e);
    }
    edges.sort();
    rule4.sort();
    OracleGraph { edges, rule4 }
}

/// Uniform random rotation matrix (quaternion method).
pub fn random_rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin(), b * (tau * u3).cos());
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn rotate(m: &[[f64; 3]; 3], p: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2])
}

/// Same graph with each center moved by at most `amp` per axis, which
/// breaks exact distance ties between lattice nodes.
pub fn jittered(g: &sngraph::SnGraph, rng: &mut impl Rng, amp: f64) -> sngraph::SnGraph {
    let mut out = g.clone();
    for n in &mut out.nodes {
        for a in 0..3 {
            n.center[a] += rng.gen_range(-amp..amp);
        }
    }
    out
}

/// Same topology and radii, centers rotated about the origin.
pub fn rotated(g: &sngraph::SnGraph, m: &[[f64; 3]; 3]) -> sngraph::SnGraph {
    let mut out = g.clone();
    for n in &mut out.nodes {
        n.center = rotate(m, n.center);
    }
    out
}
