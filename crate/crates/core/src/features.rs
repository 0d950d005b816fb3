//! Per-node feature rows.
//!
//! PR rows are `(x, y, z, radius)`. ADR rows are 29 rotation-invariant
//! values built from the node's six nearest graph neighbors:
//!
//! | slots  | content                                                      |
//! |--------|--------------------------------------------------------------|
//! | 0..15  | cosines of the angles between edge pairs `(a, b)`, `a < b`    |
//! | 15..22 | distance to the origin, then distances to neighbors 1..6     |
//! | 22..29 | own radius, then radii of neighbors 1..6                     |
//!
//! Missing neighbors leave their slots at exactly 0.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grapher::{separation, SnGraph};
use crate::sampler::euclidean;

pub const PR_WIDTH: usize = 4;
pub const ADR_WIDTH: usize = 29;
pub const ADR_NEIGHBORS: usize = 6;
const COSINE_SLOTS: usize = ADR_NEIGHBORS * (ADR_NEIGHBORS - 1) / 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Pr,
    Adr,
}

impl FeatureKind {
    pub fn width(self) -> usize {
        match self {
            FeatureKind::Pr => PR_WIDTH,
            FeatureKind::Adr => ADR_WIDTH,
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Pr => "pr",
            FeatureKind::Adr => "adr",
        })
    }
}

/// Which feature matrices to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    None,
    Pr,
    Adr,
    Both,
}

impl FeatureSet {
    pub fn pr(self) -> bool {
        matches!(self, FeatureSet::Pr | FeatureSet::Both)
    }

    pub fn adr(self) -> bool {
        matches!(self, FeatureSet::Adr | FeatureSet::Both)
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(FeatureSet::None),
            "pr" => Ok(FeatureSet::Pr),
            "adr" => Ok(FeatureSet::Adr),
            "both" => Ok(FeatureSet::Both),
            other => Err(Error::InvalidParam(format!("unknown feature set '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub kind: FeatureKind,
    /// Row-major, `node_count * kind.width()` values.
    pub data: Vec<f64>,
    /// Canonical neighbor order used for each ADR row (empty for PR).
    pub neighbor_order: Vec<Vec<usize>>,
    /// Set when some edge had coincident endpoints; its cosines were zeroed.
    pub degenerate_edges: bool,
}

impl FeatureMatrix {
    pub fn width(&self) -> usize {
        self.kind.width()
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.width()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width())
    }
}

/// Neighbors of `i` ordered by distance to `i`, ties to the smaller index.
pub fn neighbor_order(g: &SnGraph, i: usize) -> Vec<usize> {
    order_neighbors(g, i, &g.adjacency()[i])
}

fn order_neighbors(g: &SnGraph, i: usize, adj: &[usize]) -> Vec<usize> {
    let r = g.meta.resolution;
    let mut keyed: Vec<(f64, usize)> = adj
        .iter()
        .map(|&j| (separation(&g.nodes[i], &g.nodes[j], r), j))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, j)| j).collect()
}

pub fn extract_pr(g: &SnGraph) -> FeatureMatrix {
    let data = g
        .nodes
        .iter()
        .flat_map(|n| [n.center[0], n.center[1], n.center[2], n.radius])
        .collect();
    FeatureMatrix {
        kind: FeatureKind::Pr,
        data,
        neighbor_order: Vec::new(),
        degenerate_edges: false,
    }
}

fn adr_row(g: &SnGraph, i: usize, order: &[usize]) -> ([f64; ADR_WIDTH], bool) {
    let mut row = [0.0; ADR_WIDTH];
    let me = &g.nodes[i];
    let nbrs = &order[..order.len().min(ADR_NEIGHBORS)];

    let vecs: Vec<([f64; 3], f64)> = nbrs
        .iter()
        .map(|&j| {
            let c = g.nodes[j].center;
            let v = [c[0] - me.center[0], c[1] - me.center[1], c[2] - me.center[2]];
            (v, euclidean(c, me.center))
        })
        .collect();

    let mut degenerate = false;
    let mut slot = 0;
    for a in 0..ADR_NEIGHBORS {
        for b in a + 1..ADR_NEIGHBORS {
            if b < vecs.len() {
                let (u, lu) = vecs[a];
                let (v, lv) = vecs[b];
                if lu > 0.0 && lv > 0.0 {
                    let cos = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]) / (lu * lv);
                    row[slot] = cos.clamp(-1.0, 1.0);
                } else {
                    degenerate = true;
                }
            }
            slot += 1;
        }
    }
    debug_assert_eq!(slot, COSINE_SLOTS);

    row[COSINE_SLOTS] = euclidean(me.center, [0.0; 3]);
    row[COSINE_SLOTS + 1 + ADR_NEIGHBORS] = me.radius;
    for (k, (&j, &(_, len))) in nbrs.iter().zip(&vecs).enumerate() {
        row[COSINE_SLOTS + 1 + k] = len;
        row[COSINE_SLOTS + 2 + ADR_NEIGHBORS + k] = g.nodes[j].radius;
    }
    (row, degenerate)
}

pub fn extract_adr(g: &SnGraph) -> FeatureMatrix {
    let adj = g.adjacency();
    let orders: Vec<Vec<usize>> = (0..g.nodes.len())
        .into_par_iter()
        .map(|i| order_neighbors(g, i, &adj[i]))
        .collect();
    let rows: Vec<([f64; ADR_WIDTH], bool)> = orders
        .par_iter()
        .enumerate()
        .map(|(i, o)| adr_row(g, i, o))
        .collect();
    let degenerate_edges = rows.iter().any(|r| r.1);
    if degenerate_edges {
        log::warn!("graph '{}' has zero-length edges; their cosines were set to 0", g.meta.source_id);
    }
    FeatureMatrix {
        kind: FeatureKind::Adr,
        data: rows.iter().flat_map(|r| r.0).collect(),
        neighbor_order: orders,
        degenerate_edges,
    }
}

pub fn extract(g: &SnGraph, kind: FeatureKind) -> FeatureMatrix {
    match kind {
        FeatureKind::Pr => extract_pr(g),
        FeatureKind::Adr => extract_adr(g),
    }
}
