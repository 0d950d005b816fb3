//! Surface voxelization and solid fill over a cubic lattice covering the
//! normalized box `[-0.5, 0.5]^3`.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

pub const DEFAULT_RESOLUTION: usize = 128;

/// Allowed overshoot of normalized coordinates past the unit box.
const BOUNDS_TOL: f64 = 1e-6;

/// Dense occupancy grid. Linear index is x-fastest: `x + R*(y + R*z)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelGrid {
    resolution: usize,
    occupancy: Vec<bool>,
}

impl VoxelGrid {
    pub fn empty(resolution: usize) -> Self {
        Self {
            resolution,
            occupancy: vec![false; resolution * resolution * resolution],
        }
    }

    pub fn from_occupancy(resolution: usize, occupancy: Vec<bool>) -> Result<Self> {
        if occupancy.len() != resolution * resolution * resolution {
            return Err(Error::InvalidParam(format!(
                "occupancy has {} cells, expected {}^3",
                occupancy.len(),
                resolution
            )));
        }
        Ok(Self {
            resolution,
            occupancy,
        })
    }

    /// Builds a grid by evaluating `f` at every lattice coordinate.
    pub fn from_fn(resolution: usize, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut g = Self::empty(resolution);
        for z in 0..resolution {
            for y in 0..resolution {
                for x in 0..resolution {
                    let i = g.index(x, y, z);
                    g.occupancy[i] = f(x, y, z);
                }
            }
        }
        g
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn voxel_size(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    /// World coordinate of the center of voxel (0, 0, 0) on each axis.
    pub fn origin(&self) -> f64 {
        lattice_origin(self.resolution)
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.resolution * (y + self.resolution * z)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let r = self.resolution;
        [i % r, (i / r) % r, i / (r * r)]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.occupancy[self.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = self.index(x, y, z);
        self.occupancy[i] = v;
    }

    pub fn center(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        voxel_center(self.resolution, [x, y, z])
    }

    pub fn count_occupied(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.occupancy.iter().any(|&b| b)
    }

    /// Writes the `SNV1` debug dump: magic, u32 resolution, then the
    /// occupancy bit-packed LSB-first in x-fastest order.
    pub fn write_dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::with_capacity(8 + self.occupancy.len().div_ceil(8));
        out.extend_from_slice(b"SNV1");
        out.extend_from_slice(&(self.resolution as u32).to_le_bytes());
        let mut bytes = vec![0u8; self.occupancy.len().div_ceil(8)];
        for (i, _) in self.occupancy.iter().enumerate().filter(|(_, &b)| b) {
            bytes[i / 8] |= 1 << (i % 8);
        }
        out.extend_from_slice(&bytes);
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_dump(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        if data.len() < 8 || &data[..4] != b"SNV1" {
            return Err(Error::Format("bad SNV1 magic".into()));
        }
        let r = u32::from_le_bytes(data[4..8].try_into().unwrap()) as usize;
        let n = r * r * r;
        let body = &data[8..];
        if body.len() != n.div_ceil(8) {
            return Err(Error::Format("truncated SNV1 payload".into()));
        }
        let occupancy = (0..n).map(|i| body[i / 8] >> (i % 8) & 1 == 1).collect();
        Ok(Self {
            resolution: r,
            occupancy,
        })
    }
}

#[inline]
pub fn lattice_origin(resolution: usize) -> f64 {
    -0.5 + 0.5 / resolution as f64
}

#[inline]
pub fn voxel_center(resolution: usize, v: [usize; 3]) -> [f64; 3] {
    let o = lattice_origin(resolution);
    let s = 1.0 / resolution as f64;
    [
        o + v[0] as f64 * s,
        o + v[1] as f64 * s,
        o + v[2] as f64 * s,
    ]
}

/// Marks every cell whose closed cube intersects a triangle of `m`.
pub fn voxelize_surface(m: &TriangleMesh, resolution: usize) -> Result<VoxelGrid> {
    if resolution < 4 {
        return Err(Error::ResolutionTooSmall(resolution));
    }
    if let Some(c) = m
        .vertices
        .iter()
        .flatten()
        .find(|c| !(c.abs() <= 0.5 + BOUNDS_TOL))
    {
        return Err(Error::NotNormalized(*c));
    }
    let r = resolution;
    let rf = r as f64;
    let half = 0.5 / rf;

    let hits: Vec<usize> = (0..m.triangles.len())
        .into_par_iter()
        .fold(Vec::new, |mut acc, t| {
            let tri = m.triangle(t);
            let mut lo = [0usize; 3];
            let mut hi = [0usize; 3];
            for a in 0..3 {
                let mn = tri[0][a].min(tri[1][a]).min(tri[2][a]);
                let mx = tri[0][a].max(tri[1][a]).max(tri[2][a]);
                // one cell of slack on each side; the exact test decides
                lo[a] = (((mn + 0.5) * rf).floor() as i64 - 1).clamp(0, r as i64 - 1) as usize;
                hi[a] = (((mx + 0.5) * rf).floor() as i64 + 1).clamp(0, r as i64 - 1) as usize;
            }
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        let c = voxel_center(r, [x, y, z]);
                        if triangle_box_overlap(&tri, c, half) {
                            acc.push(x + r * (y + r * z));
                        }
                    }
                }
            }
            acc
        })
        .reduce(Vec::new, |mut a, mut b| {
            a.append(&mut b);
            a
        });

    let mut grid = VoxelGrid::empty(r);
    for i in hits {
        grid.occupancy[i] = true;
    }
    Ok(grid)
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Separating-axis test between a triangle and the closed cube of
/// half-width `half` centered at `center`. Touching counts as overlap.
pub fn triangle_box_overlap(tri: &[[f64; 3]; 3], center: [f64; 3], half: f64) -> bool {
    let v = [
        sub(tri[0], center),
        sub(tri[1], center),
        sub(tri[2], center),
    ];
    let h = [half; 3];

    // box face normals
    for a in 0..3 {
        let mn = v[0][a].min(v[1][a]).min(v[2][a]);
        let mx = v[0][a].max(v[1][a]).max(v[2][a]);
        if mn > h[a] || mx < -h[a] {
            return false;
        }
    }

    let e = [sub(v[1], v[0]), sub(v[2], v[1]), sub(v[0], v[2])];

    // triangle normal
    let n = cross(e[0], e[1]);
    let d = dot(n, v[0]);
    let rad = h[0] * n[0].abs() + h[1] * n[1].abs() + h[2] * n[2].abs();
    if d.abs() > rad {
        return false;
    }

    // edge x box-axis cross products
    for edge in &e {
        for a in 0..3 {
            let mut axis = [0.0; 3];
            axis[a] = 1.0;
            let ax = cross(axis, *edge);
            if ax == [0.0; 3] {
                continue;
            }
            let p = [dot(ax, v[0]), dot(ax, v[1]), dot(ax, v[2])];
            let mn = p[0].min(p[1]).min(p[2]);
            let mx = p[0].max(p[1]).max(p[2]);
            let rad = h[0] * ax[0].abs() + h[1] * ax[1].abs() + h[2] * ax[2].abs();
            if mn > rad || mx < -rad {
                return false;
            }
        }
    }
    true
}

/// Fills everything not reachable from the grid boundary through empty
/// voxels (6-connectivity).
pub fn solidify(g: &VoxelGrid) -> VoxelGrid {
    let r = g.resolution;
    let n = g.occupancy.len();
    let mut exterior = vec![false; n];
    let mut queue = VecDeque::new();

    let seed = |i: usize, exterior: &mut Vec<bool>, queue: &mut VecDeque<usize>| {
        if !g.occupancy[i] && !exterior[i] {
            exterior[i] = true;
            queue.push_back(i);
        }
    };
    for z in 0..r {
        for y in 0..r {
            for x in 0..r {
                let on_boundary =
                    x == 0 || y == 0 || z == 0 || x == r - 1 || y == r - 1 || z == r - 1;
                if on_boundary {
                    seed(g.index(x, y, z), &mut exterior, &mut queue);
                }
            }
        }
    }

    while let Some(i) = queue.pop_front() {
        let [x, y, z] = g.coords(i);
        let mut visit = |j: usize| {
            if !g.occupancy[j] && !exterior[j] {
                exterior[j] = true;
                queue.push_back(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < r {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - r);
        }
        if y + 1 < r {
            visit(i + r);
        }
        if z > 0 {
            visit(i - r * r);
        }
        if z + 1 < r {
            visit(i + r * r);
        }
    }

    VoxelGrid {
        resolution: r,
        occupancy: exterior.into_iter().map(|e| !e).collect(),
    }
}
