//! Sphere node selection.
//!
//! Every interior voxel is a candidate sphere centered at the voxel with the
//! voxel's SDF as radius. [`select_spheres`] picks nodes with a max-min rule
//! over the composite distance of [`node_distance`]; [`select_fss`] is the
//! plain farthest-point baseline over the same candidates.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdf::SdfGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereNode {
    pub center: [f64; 3],
    pub radius: f64,
    pub voxel: [usize; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMethod {
    NodeSphere,
    Fss,
}

impl fmt::Display for SamplerMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerMethod::NodeSphere => "nodesphere",
            SamplerMethod::Fss => "fss",
        })
    }
}

impl FromStr for SamplerMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nodesphere" => Ok(SamplerMethod::NodeSphere),
            "fss" => Ok(SamplerMethod::Fss),
            other => Err(Error::InvalidParam(format!("unknown sampler '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub nodes: Vec<SphereNode>,
    pub method: SamplerMethod,
    pub requested_n: usize,
    pub achieved_n: usize,
}

#[inline]
pub fn euclidean(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Global part of the selection distance: how far `candidate`'s center lies
/// outside the sphere of the already selected node. Must stay positive for
/// the candidate to be admissible.
#[inline]
pub fn global_distance(selected: &SphereNode, candidate: &SphereNode) -> f64 {
    euclidean(selected.center, candidate.center) - selected.radius
}

/// Composite distance from an already selected node to a candidate:
/// `(E - r_selected) + 2 * r_candidate`.
#[inline]
pub fn node_distance(selected: &SphereNode, candidate: &SphereNode) -> f64 {
    global_distance(selected, candidate) + 2.0 * candidate.radius
}

/// Interior voxels of `s` as candidate spheres, in increasing linear index.
pub fn candidates(s: &SdfGrid) -> Vec<SphereNode> {
    s.values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| SphereNode {
            center: s.center(i),
            radius: v,
            voxel: s.coords(i),
        })
        .collect()
}

/// Position in `cands` of the first node: largest radius, then nearest to
/// the centroid of all candidate centers, then earliest.
pub fn first_index(cands: &[SphereNode]) -> Result<usize> {
    if cands.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let max_r = cands.iter().map(|c| c.radius).fold(f64::NEG_INFINITY, f64::max);
    let mut centroid = [0.0; 3];
    for c in cands {
        for a in 0..3 {
            centroid[a] += c.center[a];
        }
    }
    let n = cands.len() as f64;
    for v in &mut centroid {
        *v /= n;
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in cands.iter().enumerate() {
        if c.radius != max_r {
            continue;
        }
        let d = euclidean(c.center, centroid);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    Ok(best.unwrap().0)
}

pub fn select_first(s: &SdfGrid) -> Result<SphereNode> {
    let c = candidates(s);
    Ok(c[first_index(&c)?])
}

pub fn select_spheres(s: &SdfGrid, n: usize) -> Result<Selection> {
    select_from_candidates(&candidates(s), n, SamplerMethod::NodeSphere)
}

pub fn select_fss(s: &SdfGrid, n: usize) -> Result<Selection> {
    select_from_candidates(&candidates(s), n, SamplerMethod::Fss)
}

pub fn select(s: &SdfGrid, n: usize, method: SamplerMethod) -> Result<Selection> {
    select_from_candidates(&candidates(s), n, method)
}

#[derive(Clone, Copy)]
struct Slot {
    min_d: f64,
    admissible: bool,
    selected: bool,
}

/// Max-min selection over an explicit candidate list. Ties go to the
/// earlier candidate, so `cands` should be in linear voxel order.
///
/// Keeps, per candidate, the running minimum of the distance to all
/// selected nodes, so each iteration costs one pass over the candidates.
pub fn select_from_candidates(
    cands: &[SphereNode],
    n: usize,
    method: SamplerMethod,
) -> Result<Selection> {
    if n == 0 {
        return Err(Error::InvalidParam("node count must be at least 1".into()));
    }
    let first = first_index(cands)?;
    let mut slots = vec![
        Slot {
            min_d: f64::INFINITY,
            admissible: true,
            selected: false,
        };
        cands.len()
    ];
    let mut order = vec![first];
    let mut newest = first;
    slots[first].selected = true;

    while order.len() < n {
        let s = cands[newest];
        slots
            .par_iter_mut()
            .zip(cands.par_iter())
            .for_each(|(slot, c)| {
                if slot.selected {
                    return;
                }
                let d = match method {
                    SamplerMethod::NodeSphere => {
                        if global_distance(&s, c) <= 0.0 {
                            slot.admissible = false;
                        }
                        node_distance(&s, c)
                    }
                    SamplerMethod::Fss => euclidean(s.center, c.center),
                };
                if d < slot.min_d {
                    slot.min_d = d;
                }
            });

        let best = slots
            .par_iter()
            .enumerate()
            .filter(|(_, s)| s.admissible && !s.selected)
            .map(|(i, s)| (i, s.min_d))
            .reduce_with(|a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            });
        let Some((next, _)) = best else { break };
        slots[next].selected = true;
        order.push(next);
        newest = next;
    }

    let nodes: Vec<SphereNode> = order.iter().map(|&i| cands[i]).collect();
    Ok(Selection {
        achieved_n: nodes.len(),
        nodes,
        method,
        requested_n: n,
    })
}

/// True when every later node's center lies strictly outside every earlier
/// node's sphere.
pub fn satisfies_positivity(nodes: &[SphereNode]) -> bool {
    nodes
        .iter()
        .enumerate()
        .all(|(j, b)| nodes[..j].iter().all(|a| global_distance(a, b) > 0.0))
}
