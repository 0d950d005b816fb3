//! Connecting selected sphere nodes into a graph.
//!
//! An edge is a candidate when the segment between the two centers stays
//! mostly inside the object (sampled SDF test) and passes clear of every
//! other selected sphere. Candidates are then accepted shortest first while
//! both endpoints are below the degree cap. Any node left isolated is joined
//! to its nearest node regardless of the other rules; those edges are kept
//! in `rule4_edges`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{euclidean, SamplerMethod, Selection, SphereNode};
use crate::sdf::SdfGrid;
use crate::voxel::voxel_center;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    /// Samples per edge.
    pub p: usize,
    /// SDF threshold (normalized units) below which a sample counts as outside.
    pub t_d: f64,
    /// Maximum tolerated outside fraction (exclusive).
    pub t_p: f64,
    /// Degree cap for rule-based edges.
    pub q: usize,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            p: 10,
            t_d: 0.05,
            t_p: 0.7,
            q: 6,
        }
    }
}

impl GraphParams {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidParam(format!("p = {} must be >= 2", self.p)));
        }
        if !(self.t_p > 0.0 && self.t_p <= 1.0) {
            return Err(Error::InvalidParam(format!("t_p = {} must be in (0, 1]", self.t_p)));
        }
        if self.q < 1 {
            return Err(Error::InvalidParam("q must be >= 1".into()));
        }
        if !self.t_d.is_finite() {
            return Err(Error::InvalidParam("t_d must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub source_id: String,
    pub resolution: usize,
    pub sampler: SamplerMethod,
    pub requested_n: usize,
    pub achieved_n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnGraph {
    pub nodes: Vec<SphereNode>,
    /// Undirected edges as `[i, j]` with `i < j`, sorted.
    pub edges: Vec<[usize; 2]>,
    /// Subset of `edges` forced onto isolated nodes.
    pub rule4_edges: Vec<[usize; 2]>,
    pub params: GraphParams,
    pub meta: GraphMeta,
}

impl SnGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Adjacency lists in ascending index order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &[i, j] in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        for &[i, j] in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    /// Degrees counting only edges not forced by the isolation rule.
    pub fn rule_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        for e in &self.edges {
            if self.rule4_edges.binary_search(e).is_err() {
                d[e[0]] += 1;
                d[e[1]] += 1;
            }
        }
        d
    }

    pub fn is_rule4(&self, e: [usize; 2]) -> bool {
        self.rule4_edges.binary_search(&e).is_ok()
    }
}

/// Sample parameters `(k + 0.5) / p`, endpoints excluded.
pub fn sample_points(a: [f64; 3], b: [f64; 3], p: usize) -> impl Iterator<Item = [f64; 3]> {
    (0..p).map(move |k| {
        let t = (k as f64 + 0.5) / p as f64;
        [
            a[0] + t * (b[0] - a[0]),
            a[1] + t * (b[1] - a[1]),
            a[2] + t * (b[2] - a[2]),
        ]
    })
}

/// Number of samples on the segment whose SDF is below `t_d` (or that fall
/// outside the grid).
fn on_lattice(n: &SphereNode, r: usize) -> bool {
    n.voxel.iter().all(|&v| v < r) && voxel_center(r, n.voxel) == n.center
}

/// Distance between two node centers. For nodes sitting on voxel centers
/// of a grid of resolution `r` it is computed from the integer voxel
/// offsets, so equal lattice distances compare equal.
pub fn separation(a: &SphereNode, b: &SphereNode, r: usize) -> f64 {
    if on_lattice(a, r) && on_lattice(b, r) {
        let sq: i64 = (0..3)
            .map(|k| (a.voxel[k] as i64 - b.voxel[k] as i64).pow(2))
            .sum();
        (sq as f64).sqrt() / r as f64
    } else {
        euclidean(a.center, b.center)
    }
}

/// Voxel of sample `k` on the segment between two voxel centers, exact.
fn lattice_sample(va: [usize; 3], vb: [usize; 3], k: usize, p: usize) -> [usize; 3] {
    let (p, k) = (p as i64, k as i64);
    let mut out = [0usize; 3];
    for a in 0..3 {
        let (x0, x1) = (va[a] as i64, vb[a] as i64);
        let num = 2 * p * x0 + (2 * k + 1) * (x1 - x0) + p;
        out[a] = num.div_euclid(2 * p) as usize;
    }
    out
}

pub fn outside_count(a: &SphereNode, b: &SphereNode, s: &SdfGrid, params: &GraphParams) -> usize {
    let r = s.resolution();
    if on_lattice(a, r) && on_lattice(b, r) {
        return (0..params.p)
            .filter(|&k| s.get(lattice_sample(a.voxel, b.voxel, k, params.p)) < params.t_d)
            .count();
    }
    sample_points(a.center, b.center, params.p)
        .filter(|&pt| s.sample(pt).is_none_or(|v| v < params.t_d))
        .count()
}

pub fn edge_interior_test(a: &SphereNode, b: &SphereNode, s: &SdfGrid, params: &GraphParams) -> bool {
    let frac = outside_count(a, b, s, params) as f64 / params.p as f64;
    frac < params.t_p
}

/// Distance from `c` to the closed segment `[a, b]`.
pub fn point_segment_distance(c: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ac = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let t = if len2 > 0.0 {
        ((ac[0] * ab[0] + ac[1] * ab[1] + ac[2] * ab[2]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let p = [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]];
    euclidean(c, p)
}

/// Squared radius in voxel units when the node is a lattice sphere whose
/// radius is exactly `sqrt(k) / r` for an integer `k`.
fn lattice_radius_sq(n: &SphereNode, r: usize) -> Option<i64> {
    if !on_lattice(n, r) {
        return None;
    }
    let x = n.radius * r as f64;
    let k = (x * x).round();
    (k >= 0.0 && k.sqrt() / r as f64 == n.radius).then_some(k as i64)
}

fn isub(a: [usize; 3], b: [usize; 3]) -> [i64; 3] {
    [a[0] as i64 - b[0] as i64, a[1] as i64 - b[1] as i64, a[2] as i64 - b[2] as i64]
}

fn idot(a: [i64; 3], b: [i64; 3]) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Exact "segment enters the open ball" on voxel coordinates.
fn lattice_blocks(a: [usize; 3], b: [usize; 3], c: [usize; 3], r2: i64) -> bool {
    let ab = isub(b, a);
    let ac = isub(c, a);
    let len2 = idot(ab, ab);
    let t = idot(ac, ab);
    if len2 == 0 || t <= 0 {
        idot(ac, ac) < r2
    } else if t >= len2 {
        let bc = isub(c, b);
        idot(bc, bc) < r2
    } else {
        idot(ac, ac) * len2 - t * t < r2 * len2
    }
}

/// Rule 2: the segment does not pass through any other selected sphere.
/// A sphere merely tangent to the segment does not block it.
pub fn edge_sphere_clearance(a_idx: usize, b_idx: usize, nodes: &[SphereNode]) -> bool {
    clearance_in(a_idx, b_idx, nodes, 0)
}

fn clearance_in(a_idx: usize, b_idx: usize, nodes: &[SphereNode], r: usize) -> bool {
    let (na, nb) = (&nodes[a_idx], &nodes[b_idx]);
    let exact = on_lattice(na, r) && on_lattice(nb, r);
    nodes.iter().enumerate().all(|(k, c)| {
        if k == a_idx || k == b_idx {
            return true;
        }
        match lattice_radius_sq(c, r).filter(|_| exact) {
            Some(r2) => !lattice_blocks(na.voxel, nb.voxel, c.voxel, r2),
            None => point_segment_distance(c.center, na.center, nb.center) >= c.radius,
        }
    })
}

/// Rule 3 on an already filtered candidate list: shortest first, accepted
/// while both endpoints have degree below `q`. Returns accepted pairs in
/// acceptance order.
pub fn greedy_degree_capped(
    nodes: &[SphereNode],
    candidates: &[[usize; 2]],
    q: usize,
) -> Vec<[usize; 2]> {
    greedy_with(nodes, candidates, q, 0)
}

fn greedy_with(nodes: &[SphereNode], candidates: &[[usize; 2]], q: usize, r: usize) -> Vec<[usize; 2]> {
    let mut sorted: Vec<(f64, [usize; 2])> = candidates
        .iter()
        .map(|&[i, j]| (separation(&nodes[i], &nodes[j], r), [i, j]))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut degree = vec![0usize; nodes.len()];
    let mut out = Vec::new();
    for (_, [i, j]) in sorted {
        if degree[i] < q && degree[j] < q {
            degree[i] += 1;
            degree[j] += 1;
            out.push([i, j]);
        }
    }
    out
}

/// Index of the nearest other node, ties to the smaller index.
fn nearest_other(nodes: &[SphereNode], i: usize, r: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, n) in nodes.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = separation(&nodes[i], n, r);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((j, d));
        }
    }
    best.map(|b| b.0)
}

pub fn build_graph(sel: &Selection, s: &SdfGrid, params: &GraphParams) -> Result<SnGraph> {
    params.validate()?;
    if sel.nodes.is_empty() {
        return Err(Error::InvalidParam("empty selection".into()));
    }
    let nodes = &sel.nodes;
    let n = nodes.len();
    let r = s.resolution();

    let candidates: Vec<[usize; 2]> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..n).filter_map(move |j| {
                (edge_interior_test(&nodes[i], &nodes[j], s, params)
                    && clearance_in(i, j, nodes, r))
                .then_some([i, j])
            })
        })
        .collect();

    let mut edges = greedy_with(nodes, &candidates, params.q, r);

    let mut degree = vec![0usize; n];
    for &[i, j] in &edges {
        degree[i] += 1;
        degree[j] += 1;
    }
    let mut rule4_edges = Vec::new();
    for i in 0..n {
        if degree[i] > 0 {
            continue;
        }
        if let Some(j) = nearest_other(nodes, i, r) {
            let e = [i.min(j), i.max(j)];
            degree[i] += 1;
            degree[j] += 1;
            edges.push(e);
            rule4_edges.push(e);
        }
    }
    edges.sort_unstable();
    rule4_edges.sort_unstable();

    Ok(SnGraph {
        nodes: nodes.clone(),
        edges,
        rule4_edges,
        params: *params,
        meta: GraphMeta {
            source_id: String::new(),
            resolution: s.resolution(),
            sampler: sel.method,
            requested_n: sel.requested_n,
            achieved_n: sel.achieved_n,
        },
    })
}
