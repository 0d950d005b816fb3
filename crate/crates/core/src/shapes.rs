//! Closed procedural meshes used as sample inputs. Composite shapes are
//! unions of overlapping closed parts; solid voxelization fills each part.

use std::f64::consts::PI;

use crate::mesh::TriangleMesh;

pub fn box_mesh(center: [f64; 3], half: [f64; 3]) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(8);
    for k in 0..8 {
        vertices.push([
            center[0] + if k & 1 == 0 { -half[0] } else { half[0] },
            center[1] + if k & 2 == 0 { -half[1] } else { half[1] },
            center[2] + if k & 4 == 0 { -half[2] } else { half[2] },
        ]);
    }
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let triangles = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriangleMesh {
        vertices,
        triangles,
    }
}

pub fn uv_sphere(center: [f64; 3], radius: f64, stacks: usize, slices: usize) -> TriangleMesh {
    let mut vertices = vec![[center[0], center[1], center[2] + radius]];
    for i in 1..stacks {
        let phi = PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let theta = 2.0 * PI * j as f64 / slices as f64;
            vertices.push([
                center[0] + radius * phi.sin() * theta.cos(),
                center[1] + radius * phi.sin() * theta.sin(),
                center[2] + radius * phi.cos(),
            ]);
        }
    }
    vertices.push([center[0], center[1], center[2] - radius]);
    let south = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * slices + j % slices;
    let mut triangles = Vec::new();
    for j in 0..slices {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
        triangles.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            triangles.push([a, c, b]);
            triangles.push([b, c, d]);
        }
    }
    TriangleMesh {
        vertices,
        triangles,
    }
}

/// Closed cylinder along `axis` (0 = x, 1 = y, 2 = z).
pub fn cylinder(axis: usize, center: [f64; 3], radius: f64, half_len: f64, slices: usize) -> TriangleMesh {
    let (u, v) = match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let point = |along: f64, theta: f64| {
        let mut p = center;
        p[axis] += along;
        p[u] += radius * theta.cos();
        p[v] += radius * theta.sin();
        p
    };
    let mut vertices = Vec::new();
    for s in [-half_len, half_len] {
        for j in 0..slices {
            vertices.push(point(s, 2.0 * PI * j as f64 / slices as f64));
        }
    }
    let mut c0 = center;
    c0[axis] -= half_len;
    let mut c1 = center;
    c1[axis] += half_len;
    vertices.push(c0);
    vertices.push(c1);
    let (cap0, cap1) = (2 * slices, 2 * slices + 1);
    let mut triangles = Vec::new();
    for j in 0..slices {
        let k = (j + 1) % slices;
        triangles.push([j, k, slices + k]);
        triangles.push([j, slices + k, slices + j]);
        triangles.push([cap0, k, j]);
        triangles.push([cap1, slices + j, slices + k]);
    }
    TriangleMesh {
        vertices,
        triangles,
    }
}

/// Torus around the z axis.
pub fn torus(center: [f64; 3], major: f64, minor: f64, seg_major: usize, seg_minor: usize) -> TriangleMesh {
    let mut vertices = Vec::new();
    for i in 0..seg_major {
        let a = 2.0 * PI * i as f64 / seg_major as f64;
        for j in 0..seg_minor {
            let b = 2.0 * PI * j as f64 / seg_minor as f64;
            let w = major + minor * b.cos();
            vertices.push([
                center[0] + w * a.cos(),
                center[1] + w * a.sin(),
                center[2] + minor * b.sin(),
            ]);
        }
    }
    let idx = |i: usize, j: usize| (i % seg_major) * seg_minor + j % seg_minor;
    let mut triangles = Vec::new();
    for i in 0..seg_major {
        for j in 0..seg_minor {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriangleMesh {
        vertices,
        triangles,
    }
}

fn union(parts: &[TriangleMesh]) -> TriangleMesh {
    let mut m = parts[0].clone();
    for p in &parts[1..] {
        m.merge(p);
    }
    m
}

/// Fuselage, swept-free main wing, tailplane and fin.
pub fn airplane() -> TriangleMesh {
    union(&[
        cylinder(0, [0.0, 0.0, 0.0], 0.07, 0.5, 24),
        uv_sphere([0.5, 0.0, 0.0], 0.07, 12, 24),
        box_mesh([0.05, 0.0, 0.0], [0.1, 0.45, 0.02]),
        box_mesh([-0.42, 0.0, 0.0], [0.05, 0.16, 0.015]),
        box_mesh([-0.42, 0.0, 0.1], [0.05, 0.015, 0.1]),
    ])
}

/// Two balls joined by a thin bar along x.
pub fn dumbbell() -> TriangleMesh {
    union(&[
        uv_sphere([-0.35, 0.0, 0.0], 0.15, 16, 32),
        uv_sphere([0.35, 0.0, 0.0], 0.15, 16, 32),
        cylinder(0, [0.0, 0.0, 0.0], 0.03, 0.3, 16),
    ])
}

pub fn table() -> TriangleMesh {
    let mut parts = vec![box_mesh([0.0, 0.0, 0.2], [0.5, 0.3, 0.03])];
    for (x, y) in [(-0.45, -0.25), (0.45, -0.25), (-0.45, 0.25), (0.45, 0.25)] {
        parts.push(box_mesh([x, y, -0.05], [0.03, 0.03, 0.25]));
    }
    union(&parts)
}

/// Named sample meshes, in model units (not yet normalized).
pub fn catalog() -> Vec<(&'static str, TriangleMesh)> {
    vec![
        ("sphere", uv_sphere([0.0; 3], 1.0, 24, 48)),
        ("box", box_mesh([1.0, 2.0, 3.0], [0.5, 0.3, 0.2])),
        ("torus", torus([0.0; 3], 1.0, 0.35, 48, 24)),
        ("airplane", airplane()),
        ("dumbbell", dumbbell()),
        ("table", table()),
    ]
}
