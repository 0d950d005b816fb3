//! Graph file formats.
//!
//! Both encodings store floating point values as 32-bit floats. JSON writes
//! each value as the shortest decimal that parses back to the same `f32`,
//! so a decoded [`GraphFile`] re-encodes to identical bytes.
//!
//! JSON:
//! ```text
//! {"meta":{...,"version":1},
//!  "nodes":[{"c":[x,y,z],"r":r},...],
//!  "edges":[[i,j],...], "rule4_edges":[[i,j],...],
//!  "features":{"pr":[[...4],...],"adr":[[...29],...]}}
//! ```
//!
//! Binary (`SNG1`, little-endian): u32 node count N, u32 edge count E,
//! u32 rule-4 edge count E', u8 feature flags (bit 0 PR, bit 1 ADR), then
//! N x (x, y, z, r) f32, E x 2 u32, E' x 2 u32, optional N x 4 f32 PR rows,
//! optional N x 29 f32 ADR rows. The binary form carries no metadata.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMatrix, ADR_WIDTH, PR_WIDTH};
use crate::grapher::{GraphMeta, GraphParams, SnGraph};

pub const FORMAT_VERSION: u64 = 1;
const BINARY_MAGIC: &[u8; 4] = b"SNG1";
const FLAG_PR: u8 = 1;
const FLAG_ADR: u8 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileMeta {
    pub source_id: String,
    pub resolution: usize,
    pub sampler: crate::sampler::SamplerMethod,
    pub requested_n: usize,
    pub achieved_n: usize,
    pub params: GraphParams,
    pub version: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub c: [f32; 3],
    pub r: f32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pr: Option<Vec<[f32; PR_WIDTH]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adr: Option<Vec<[f32; ADR_WIDTH]>>,
}

/// On-disk view of a graph with its feature matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<FileMeta>,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<[u32; 2]>,
    pub rule4_edges: Vec<[u32; 2]>,
    #[serde(default)]
    pub features: FeatureBlock,
}

fn rows_f32<const W: usize>(m: &FeatureMatrix) -> Vec<[f32; W]> {
    m.iter_rows()
        .map(|r| {
            let mut out = [0f32; W];
            for (o, v) in out.iter_mut().zip(r) {
                *o = *v as f32;
            }
            out
        })
        .collect()
}

fn pairs_u32(e: &[[usize; 2]]) -> Vec<[u32; 2]> {
    e.iter().map(|&[i, j]| [i as u32, j as u32]).collect()
}

impl GraphFile {
    pub fn from_graph(
        g: &SnGraph,
        pr: Option<&FeatureMatrix>,
        adr: Option<&FeatureMatrix>,
    ) -> Self {
        debug_assert!(pr.is_none_or(|m| m.kind == FeatureKind::Pr));
        debug_assert!(adr.is_none_or(|m| m.kind == FeatureKind::Adr));
        GraphFile {
            meta: Some(FileMeta {
                source_id: g.meta.source_id.clone(),
                resolution: g.meta.resolution,
                sampler: g.meta.sampler,
                requested_n: g.meta.requested_n,
                achieved_n: g.meta.achieved_n,
                params: g.params,
                version: FORMAT_VERSION,
            }),
            nodes: g
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    c: n.center.map(|v| v as f32),
                    r: n.radius as f32,
                })
                .collect(),
            edges: pairs_u32(&g.edges),
            rule4_edges: pairs_u32(&g.rule4_edges),
            features: FeatureBlock {
                pr: pr.map(rows_f32::<PR_WIDTH>),
                adr: adr.map(rows_f32::<ADR_WIDTH>),
            },
        }
    }

    /// Same content with the metadata dropped, i.e. what the binary form
    /// can represent.
    pub fn without_meta(&self) -> Self {
        GraphFile {
            meta: None,
            ..self.clone()
        }
    }

    /// Rebuilds an in-memory graph. Voxel indices are recovered from the
    /// centers when the resolution is known, and are zero otherwise.
    pub fn to_graph(&self) -> SnGraph {
        let res = self.meta.as_ref().map_or(0, |m| m.resolution);
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let center = n.c.map(|v| v as f64);
                let voxel = if res > 0 {
                    center.map(|v| ((v + 0.5) * res as f64 - 0.5).round().max(0.0) as usize)
                } else {
                    [0; 3]
                };
                crate::sampler::SphereNode {
                    center,
                    radius: n.r as f64,
                    voxel,
                }
            })
            .collect();
        let n = self.nodes.len();
        let (meta, params) = match &self.meta {
            Some(m) => (
                GraphMeta {
                    source_id: m.source_id.clone(),
                    resolution: m.resolution,
                    sampler: m.sampler,
                    requested_n: m.requested_n,
                    achieved_n: m.achieved_n,
                },
                m.params,
            ),
            None => (
                GraphMeta {
                    source_id: String::new(),
                    resolution: 0,
                    sampler: crate::sampler::SamplerMethod::NodeSphere,
                    requested_n: n,
                    achieved_n: n,
                },
                GraphParams::default(),
            ),
        };
        let conv = |e: &[[u32; 2]]| e.iter().map(|&[i, j]| [i as usize, j as usize]).collect();
        SnGraph {
            nodes,
            edges: conv(&self.edges),
            rule4_edges: conv(&self.rule4_edges),
            params,
            meta,
        }
    }

    /// Structural checks shared by both readers.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len() as u32;
        let check_pairs = |name: &str, e: &[[u32; 2]]| -> Result<()> {
            for w in e.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::Format(format!("{name} not sorted / unique")));
                }
            }
            for &[i, j] in e {
                if i >= j || j >= n {
                    return Err(Error::Format(format!("{name} entry [{i},{j}] invalid")));
                }
            }
            Ok(())
        };
        check_pairs("edges", &self.edges)?;
        check_pairs("rule4_edges", &self.rule4_edges)?;
        if let Some(e) = self
            .rule4_edges
            .iter()
            .find(|e| self.edges.binary_search(e).is_err())
        {
            return Err(Error::Format(format!("rule4 edge {e:?} missing from edges")));
        }
        if self.features.pr.as_ref().is_some_and(|m| m.len() != self.nodes.len())
            || self.features.adr.as_ref().is_some_and(|m| m.len() != self.nodes.len())
        {
            return Err(Error::Format("feature row count differs from node count".into()));
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        let version = v
            .get("meta")
            .and_then(|m| m.get("version"))
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Format("missing meta.version".into()))?;
        if version != FORMAT_VERSION {
            return Err(Error::Version(version));
        }
        let f: GraphFile = serde_json::from_value(v).map_err(|e| Error::Format(e.to_string()))?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let n = self.nodes.len();
        let mut out = Vec::with_capacity(17 + n * 16 + (self.edges.len() + self.rule4_edges.len()) * 8);
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&(self.edges.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.rule4_edges.len() as u32).to_le_bytes());
        let mut flags = 0u8;
        if self.features.pr.is_some() {
            flags |= FLAG_PR;
        }
        if self.features.adr.is_some() {
            flags |= FLAG_ADR;
        }
        out.push(flags);
        let put_f = |out: &mut Vec<u8>, v: f32| out.extend_from_slice(&v.to_le_bytes());
        for node in &self.nodes {
            for v in node.c {
                put_f(&mut out, v);
            }
            put_f(&mut out, node.r);
        }
        for e in self.edges.iter().chain(&self.rule4_edges) {
            out.extend_from_slice(&e[0].to_le_bytes());
            out.extend_from_slice(&e[1].to_le_bytes());
        }
        for row in self.features.pr.iter().flatten() {
            row.iter().for_each(|&v| put_f(&mut out, v));
        }
        for row in self.features.adr.iter().flatten() {
            row.iter().for_each(|&v| put_f(&mut out, v));
        }
        out
    }

    pub fn from_binary(data: &[u8]) -> Result<Self> {
        let mut rd = Reader { data, pos: 0 };
        if rd.take(4)? != BINARY_MAGIC {
            return Err(Error::Format("bad SNG1 magic".into()));
        }
        let n = rd.u32()? as usize;
        let e = rd.u32()? as usize;
        let e4 = rd.u32()? as usize;
        let flags = rd.take(1)?[0];
        if flags & !(FLAG_PR | FLAG_ADR) != 0 {
            return Err(Error::Format(format!("unknown feature flags {flags:#x}")));
        }
        let mut nodes = Vec::with_capacity(n.min(data.len() / 16));
        for _ in 0..n {
            nodes.push(NodeRecord {
                c: [rd.f32()?, rd.f32()?, rd.f32()?],
                r: rd.f32()?,
            });
        }
        let mut pairs = |count: usize| -> Result<Vec<[u32; 2]>> {
            (0..count).map(|_| Ok([rd.u32()?, rd.u32()?])).collect()
        };
        let edges = pairs(e)?;
        let rule4_edges = pairs(e4)?;
        let pr = if flags & FLAG_PR != 0 {
            Some(rd.rows::<PR_WIDTH>(n)?)
        } else {
            None
        };
        let adr = if flags & FLAG_ADR != 0 {
            Some(rd.rows::<ADR_WIDTH>(n)?)
        } else {
            None
        };
        if rd.pos != data.len() {
            return Err(Error::Format("trailing bytes after SNG1 payload".into()));
        }
        let f = GraphFile {
            meta: None,
            nodes,
            edges,
            rule4_edges,
            features: FeatureBlock { pr, adr },
        };
        f.validate()?;
        Ok(f)
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(k)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| Error::Format("truncated SNG1 payload".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn rows<const W: usize>(&mut self, n: usize) -> Result<Vec<[f32; W]>> {
        (0..n)
            .map(|_| {
                let mut row = [0f32; W];
                for v in &mut row {
                    *v = self.f32()?;
                }
                Ok(row)
            })
            .collect()
    }
}

pub fn write_graph_json(
    g: &SnGraph,
    pr: Option<&FeatureMatrix>,
    adr: Option<&FeatureMatrix>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let s = GraphFile::from_graph(g, pr, adr).to_json_string()?;
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_graph_json(path: impl AsRef<Path>) -> Result<GraphFile> {
    let path = path.as_ref();
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GraphFile::from_json_str(&s)
}

pub fn write_graph_binary(
    g: &SnGraph,
    pr: Option<&FeatureMatrix>,
    adr: Option<&FeatureMatrix>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = GraphFile::from_graph(g, pr, adr).to_binary();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_graph_binary(path: impl AsRef<Path>) -> Result<GraphFile> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    GraphFile::from_binary(&data)
}

/// Reads either encoding, sniffing the binary magic.
pub fn read_graph(path: impl AsRef<Path>) -> Result<GraphFile> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    if data.starts_with(BINARY_MAGIC) {
        GraphFile::from_binary(&data)
    } else {
        let s = std::str::from_utf8(&data).map_err(|e| Error::Format(e.to_string()))?;
        GraphFile::from_json_str(s)
    }
}

/// ASCII PLY: node centers as vertices with a `radius` property, graph
/// edges as `edge` elements.
pub fn ply_string(f: &GraphFile) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "ply");
    let _ = writeln!(s, "format ascii 1.0");
    if let Some(m) = &f.meta {
        let id = m.source_id.replace(['\n', '\r'], " ");
        let _ = writeln!(s, "comment sn-graph {id}");
    }
    let _ = writeln!(s, "element vertex {}", f.nodes.len());
    for p in ["x", "y", "z", "radius"] {
        let _ = writeln!(s, "property float {p}");
    }
    let _ = writeln!(s, "element edge {}", f.edges.len());
    let _ = writeln!(s, "property int vertex1");
    let _ = writeln!(s, "property int vertex2");
    let _ = writeln!(s, "end_header");
    for n in &f.nodes {
        let _ = writeln!(s, "{} {} {} {}", n.c[0], n.c[1], n.c[2], n.r);
    }
    for e in &f.edges {
        let _ = writeln!(s, "{} {}", e[0], e[1]);
    }
    s
}

pub fn export_ply(g: &SnGraph, path: impl AsRef<Path>) -> Result<()> {
    write_ply(&GraphFile::from_graph(g, None, None), path)
}

pub fn write_ply(f: &GraphFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, ply_string(f)).map_err(|e| Error::io(path, e))
}
