//! Signed distance field over a solid voxel grid.
//!
//! Distances are measured voxel center to voxel center: an interior voxel
//! stores the distance to the nearest empty voxel, an exterior voxel the
//! negated distance to the nearest occupied one. Values are divided by the
//! resolution so they live in normalized units (fractions of the unit box).
//!
//! The squared distances are exact integers, computed with three separable
//! lower-envelope passes (one per axis) in integer arithmetic.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::voxel::{lattice_origin, voxel_center, VoxelGrid};

/// Squared distance used for "no feature voxel on this line yet". Large
/// enough to dominate any real squared distance, small enough that sums in
/// the separator never overflow.
pub const EDT_INF: i64 = 1 << 40;

/// Value stored everywhere when the object is empty.
pub const EMPTY_SENTINEL: f64 = -1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    resolution: usize,
    values: Vec<f64>,
    empty_object: bool,
}

impl SdfGrid {
    /// Wraps raw values (normalized units, positive inside).
    pub fn from_values(resolution: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != resolution * resolution * resolution {
            return Err(Error::InvalidParam(format!(
                "{} values for resolution {resolution}",
                values.len()
            )));
        }
        let empty_object = !values.iter().any(|&v| v > 0.0);
        Ok(Self {
            resolution,
            values,
            empty_object,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn voxel_size(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn origin(&self) -> f64 {
        lattice_origin(self.resolution)
    }

    /// True when no voxel is interior.
    pub fn is_empty_object(&self) -> bool {
        self.empty_object
    }

    #[inline]
    pub fn index(&self, v: [usize; 3]) -> usize {
        v[0] + self.resolution * (v[1] + self.resolution * v[2])
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let r = self.resolution;
        [i % r, (i / r) % r, i / (r * r)]
    }

    #[inline]
    pub fn get(&self, v: [usize; 3]) -> f64 {
        self.values[self.index(v)]
    }

    pub fn center(&self, i: usize) -> [f64; 3] {
        voxel_center(self.resolution, self.coords(i))
    }

    /// Voxel containing a point, if it lies inside the grid.
    pub fn voxel_of(&self, p: [f64; 3]) -> Option<[usize; 3]> {
        let r = self.resolution as f64;
        let mut v = [0usize; 3];
        for a in 0..3 {
            let c = ((p[a] + 0.5) * r).floor();
            if !(c >= 0.0 && c < r) {
                return None;
            }
            v[a] = c as usize;
        }
        Some(v)
    }

    /// Nearest-voxel lookup; `None` outside the grid.
    pub fn sample(&self, p: [f64; 3]) -> Option<f64> {
        self.voxel_of(p).map(|v| self.get(v))
    }

    pub fn interior_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }

    /// Writes the `SNF1` dump: magic, u32 resolution, then R^3 f32 values
    /// little-endian in x-fastest order.
    pub fn write_dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::with_capacity(8 + 4 * self.values.len());
        out.extend_from_slice(b"SNF1");
        out.extend_from_slice(&(self.resolution as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads an `SNF1` dump. Values come back at f32 precision.
    pub fn read_dump(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        if data.len() < 8 || &data[..4] != b"SNF1" {
            return Err(Error::Format("bad SNF1 magic".into()));
        }
        let r = u32::from_le_bytes(data[4..8].try_into().unwrap()) as usize;
        let body = &data[8..];
        if body.len() != 4 * r * r * r {
            return Err(Error::Format("truncated SNF1 payload".into()));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        Self::from_values(r, values)
    }
}

/// Exact 1D lower envelope of `g[q] + (u - q)^2` along one line.
/// `site` and `bound` are scratch buffers of at least `g.len()`.
fn envelope_1d(g: &[i64], out: &mut [i64], site: &mut [usize], bound: &mut [usize]) {
    let n = g.len();
    let f = |x: usize, i: usize| {
        let d = x as i64 - i as i64;
        d * d + g[i]
    };
    // first x at which site u is strictly closer than site i (i < u)
    let sep = |i: usize, u: usize| {
        let (ii, uu) = (i as i64, u as i64);
        (uu * uu - ii * ii + g[u] - g[i]).div_euclid(2 * (uu - ii)) + 1
    };

    let mut q = 0usize;
    site[0] = 0;
    bound[0] = 0;
    for u in 1..n {
        loop {
            if f(bound[q], site[q]) > f(bound[q], u) {
                if q == 0 {
                    break;
                }
                q -= 1;
            } else {
                break;
            }
        }
        if q == 0 && f(bound[0], site[0]) > f(bound[0], u) {
            site[0] = u;
            bound[0] = 0;
        } else {
            let w = sep(site[q], u);
            if w < n as i64 {
                q += 1;
                site[q] = u;
                bound[q] = w.max(0) as usize;
            }
        }
    }
    for u in (0..n).rev() {
        out[u] = f(u, site[q]).min(EDT_INF);
        if u == bound[q] && q > 0 {
            q -= 1;
        }
    }
}

/// Squared Euclidean distance (voxel units) from every voxel to the nearest
/// voxel with `feature[i] == true`. Lines with no feature produce `EDT_INF`.
pub fn squared_edt(resolution: usize, feature: &[bool]) -> Vec<i64> {
    let r = resolution;
    assert_eq!(feature.len(), r * r * r);

    // x: contiguous rows, 1D distance by two scans
    let mut a: Vec<i64> = vec![0; r * r * r];
    a.par_chunks_mut(r)
        .zip(feature.par_chunks(r))
        .for_each(|(row, feat)| {
            let mut last: Option<usize> = None;
            for x in 0..r {
                if feat[x] {
                    last = Some(x);
                }
                row[x] = last.map_or(EDT_INF, |l| ((x - l) * (x - l)) as i64);
            }
            let mut next: Option<usize> = None;
            for x in (0..r).rev() {
                if feat[x] {
                    next = Some(x);
                }
                if let Some(nx) = next {
                    row[x] = row[x].min(((nx - x) * (nx - x)) as i64);
                }
            }
        });

    // y: lines of stride r inside each z-slab
    a.par_chunks_mut(r * r).for_each(|slab| {
        let mut line = vec![0i64; r];
        let mut out = vec![0i64; r];
        let mut site = vec![0usize; r];
        let mut bound = vec![0usize; r];
        for x in 0..r {
            for y in 0..r {
                line[y] = slab[x + r * y];
            }
            envelope_1d(&line, &mut out, &mut site, &mut bound);
            for y in 0..r {
                slab[x + r * y] = out[y];
            }
        }
    });

    // z: lines of stride r^2, computed into a (x,y)-major buffer
    let mut t: Vec<i64> = vec![0; r * r * r];
    t.par_chunks_mut(r).enumerate().for_each(|(xy, out)| {
        let mut line = vec![0i64; r];
        let mut site = vec![0usize; r];
        let mut bound = vec![0usize; r];
        for z in 0..r {
            line[z] = a[xy + r * r * z];
        }
        envelope_1d(&line, out, &mut site, &mut bound);
    });
    a.par_chunks_mut(r * r).enumerate().for_each(|(z, slab)| {
        for (xy, v) in slab.iter_mut().enumerate() {
            *v = t[xy * r + z];
        }
    });
    a
}

/// Signed distance field of a solid grid.
///
/// A grid with no empty voxel at all has no in-grid reference; its
/// distances are then taken to the virtual empty layer just outside the
/// lattice. An empty grid yields `EMPTY_SENTINEL` everywhere and reports
/// `is_empty_object()`.
pub fn compute_sdf(g: &VoxelGrid) -> SdfGrid {
    let r = g.resolution();
    let occ = g.occupancy();
    let n = occ.len();
    let n_occ = occ.iter().filter(|&&b| b).count();
    let rf = r as f64;

    if n_occ == 0 {
        return SdfGrid {
            resolution: r,
            values: vec![EMPTY_SENTINEL; n],
            empty_object: true,
        };
    }
    if n_occ == n {
        let values = (0..n)
            .into_par_iter()
            .map(|i| {
                let [x, y, z] = g.coords(i);
                let d = [x, y, z].iter().map(|&c| (c + 1).min(r - c)).min().unwrap();
                d as f64 / rf
            })
            .collect();
        return SdfGrid {
            resolution: r,
            values,
            empty_object: false,
        };
    }

    let empty: Vec<bool> = occ.iter().map(|&b| !b).collect();
    let to_empty = squared_edt(r, &empty);
    let to_occupied = squared_edt(r, occ);
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            if occ[i] {
                (to_empty[i] as f64).sqrt() / rf
            } else {
                -(to_occupied[i] as f64).sqrt() / rf
            }
        })
        .collect();
    SdfGrid {
        resolution: r,
        values,
        empty_object: false,
    }
}
