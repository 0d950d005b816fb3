//! Triangle mesh loading (OFF, OBJ) and normalization into the canonical
//! frame: bounding box centered at the origin, longest side of length 1.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Tolerance under which a mesh is considered already normalized. Keeps
/// `normalize_mesh` bitwise idempotent.
const NORMALIZED_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Builds a mesh, checking that every index is in range.
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::MalformedMesh {
                line: 0,
                msg: format!("triangle {t:?} indexes past {n} vertices"),
            });
        }
        if triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        (lo, hi)
    }

    pub fn triangle(&self, t: usize) -> [[f64; 3]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Appends another mesh, offsetting its indices.
    pub fn merge(&mut self, other: &TriangleMesh) {
        let base = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(
            other
                .triangles
                .iter()
                .map(|t| [t[0] + base, t[1] + base, t[2] + base]),
        );
    }

    pub fn translated(&self, t: [f64; 3]) -> TriangleMesh {
        TriangleMesh {
            vertices: self
                .vertices
                .iter()
                .map(|v| [v[0] + t[0], v[1] + t[1], v[2] + t[2]])
                .collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Applies a 3x3 matrix (row-major) to every vertex.
    pub fn transformed(&self, m: &[[f64; 3]; 3]) -> TriangleMesh {
        TriangleMesh {
            vertices: self
                .vertices
                .iter()
                .map(|v| {
                    let mut out = [0.0; 3];
                    for (r, row) in m.iter().enumerate() {
                        out[r] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
                    }
                    out
                })
                .collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Writes the mesh as an OFF file.
    pub fn write_off(&self, path: impl AsRef<Path>) -> Result<()> {
        use std::fmt::Write as _;
        let path = path.as_ref();
        let mut s = String::new();
        let _ = writeln!(s, "OFF");
        let _ = writeln!(s, "{} {} 0", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

/// Loads an OFF or OBJ file, chosen by extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match ext.as_str() {
        "off" => parse_off(&text),
        "obj" => parse_obj(&text),
        other => Err(Error::UnsupportedFormat(other.to_string())),
    }
}

fn malformed(line: usize, msg: impl Into<String>) -> Error {
    Error::MalformedMesh {
        line,
        msg: msg.into(),
    }
}

/// Non-empty lines with comments stripped, paired with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| malformed(line, format!("cannot parse '{tok}'")))
}

fn fan(poly: &[usize], out: &mut Vec<[usize; 3]>) {
    for k in 1..poly.len().saturating_sub(1) {
        out.push([poly[0], poly[k], poly[k + 1]]);
    }
}

/// Parses OFF text. Accepts the ModelNet quirk where the counts follow the
/// `OFF` keyword on the same line (`OFF1234 5678 0`).
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| malformed(1, "empty file"))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| malformed(hline, "missing OFF header"))?
        .trim();
    let counts_line;
    let counts: Vec<&str> = if rest.is_empty() {
        let (l, c) = lines
            .next()
            .ok_or_else(|| malformed(hline, "missing counts line"))?;
        counts_line = l;
        c.split_whitespace().collect()
    } else {
        counts_line = hline;
        rest.split_whitespace().collect()
    };
    if counts.len() < 2 {
        return Err(malformed(counts_line, "counts line needs V F [E]"));
    }
    let nv: usize = parse_num(counts[0], counts_line)?;
    let nf: usize = parse_num(counts[1], counts_line)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, s) = lines
            .next()
            .ok_or_else(|| malformed(counts_line, "unexpected end of vertex list"))?;
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(malformed(l, "vertex needs 3 coordinates"));
        }
        vertices.push([
            parse_num(toks[0], l)?,
            parse_num(toks[1], l)?,
            parse_num(toks[2], l)?,
        ]);
    }

    let mut triangles = Vec::with_capacity(nf);
    let mut poly = Vec::new();
    for _ in 0..nf {
        let (l, s) = lines
            .next()
            .ok_or_else(|| malformed(counts_line, "unexpected end of face list"))?;
        let mut toks = s.split_whitespace();
        let n: usize = parse_num(toks.next().unwrap_or(""), l)?;
        poly.clear();
        for _ in 0..n {
            let tok = toks
                .next()
                .ok_or_else(|| malformed(l, "face has fewer indices than declared"))?;
            let i: usize = parse_num(tok, l)?;
            if i >= nv {
                return Err(malformed(l, format!("face index {i} out of range ({nv} vertices)")));
            }
            poly.push(i);
        }
        // trailing tokens are per-face colors
        fan(&poly, &mut triangles);
    }
    if triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok(TriangleMesh {
        vertices,
        triangles,
    })
}

/// Parses the `v` and `f` records of OBJ text; everything else is ignored.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces: Vec<(usize, Vec<i64>)> = Vec::new();
    for (l, s) in content_lines(text) {
        let mut toks = s.split_whitespace();
        match toks.next() {
            Some("v") => {
                let c: Vec<&str> = toks.take(3).collect();
                if c.len() < 3 {
                    return Err(malformed(l, "vertex needs 3 coordinates"));
                }
                vertices.push([
                    parse_num(c[0], l)?,
                    parse_num(c[1], l)?,
                    parse_num(c[2], l)?,
                ]);
            }
            Some("f") => {
                let idx = toks
                    .map(|t| parse_num::<i64>(t.split('/').next().unwrap_or(""), l))
                    .collect::<Result<Vec<_>>>()?;
                faces.push((l, idx));
            }
            _ => {}
        }
    }
    let nv = vertices.len();
    let mut triangles = Vec::new();
    let mut poly = Vec::new();
    for (l, idx) in faces {
        poly.clear();
        for i in idx {
            // 1-based; negative indices count back from the end
            let resolved = if i > 0 { i - 1 } else { nv as i64 + i };
            if resolved < 0 || resolved as usize >= nv {
                return Err(malformed(l, format!("face index {i} out of range ({nv} vertices)")));
            }
            poly.push(resolved as usize);
        }
        fan(&poly, &mut triangles);
    }
    if triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok(TriangleMesh {
        vertices,
        triangles,
    })
}

/// Centers the bounding box at the origin and scales uniformly so the
/// longest side is 1.
pub fn normalize_mesh(m: &TriangleMesh) -> Result<TriangleMesh> {
    let (lo, hi) = m.bounds();
    let center = [
        0.5 * (lo[0] + hi[0]),
        0.5 * (lo[1] + hi[1]),
        0.5 * (lo[2] + hi[2]),
    ];
    let longest = (0..3).map(|a| hi[a] - lo[a]).fold(0.0f64, f64::max);
    if !(longest > 0.0) || !longest.is_finite() {
        return Err(Error::DegenerateMesh);
    }
    if center.iter().all(|c| c.abs() <= NORMALIZED_EPS) && (longest - 1.0).abs() <= NORMALIZED_EPS
    {
        return Ok(m.clone());
    }
    let scale = 1.0 / longest;
    let vertices = m
        .vertices
        .iter()
        .map(|v| {
            [
                (v[0] - center[0]) * scale,
                (v[1] - center[1]) * scale,
                (v[2] - center[2]) * scale,
            ]
        })
        .collect();
    Ok(TriangleMesh {
        vertices,
        triangles: m.triangles.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_at(offset: f64, side: [f64; 3]) -> TriangleMesh {
        let mut v = Vec::new();
        for k in 0..8 {
            v.push([
                offset + side[0] * (k & 1) as f64,
                offset + side[1] * ((k >> 1) & 1) as f64,
                offset + side[2] * ((k >> 2) & 1) as f64,
            ]);
        }
        TriangleMesh::new(v, vec![[0, 1, 2], [1, 3, 2], [4, 5, 6], [5, 7, 6]]).unwrap()
    }

    #[test]
    fn minimal_off() {
        let m = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
        assert_eq!(m.vertices.len(), 3);
    }

    #[test]
    fn quad_is_fan_triangulated() {
        let m = parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let err = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 99\n").unwrap_err();
        assert!(matches!(err, Error::MalformedMesh { line: 6, .. }), "{err}");
    }

    #[test]
    fn off_header_glued_to_counts() {
        let m = parse_off("OFF3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(m.triangles.len(), 1);
    }

    #[test]
    fn off_errors() {
        assert!(parse_off("").is_err());
        assert!(parse_off("PLY\n").is_err());
        assert!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n").is_err());
        assert!(matches!(
            parse_off("OFF\n3 0 0\n0 0 0\n1 0 0\n0 1 0\n"),
            Err(Error::EmptyMesh)
        ));
        assert!(parse_off("OFF\n3 1 0\n0 0 0\n1 x 0\n0 1 0\n3 0 1 2\n").is_err());
    }

    #[test]
    fn obj_with_slashes_and_negative_indices() {
        let text = "# comment\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1 4//1\nf -4 -3 -2\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3], [0, 1, 2]]);
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
    }

    #[test]
    fn load_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tri.off");
        fs::write(&p, "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(load_mesh(&p).unwrap().triangles.len(), 1);
        let q = dir.path().join("tri.stl");
        fs::write(&q, "solid").unwrap();
        assert!(matches!(load_mesh(&q), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(load_mesh(dir.path().join("missing.off")), Err(Error::Io { .. })));
    }

    #[test]
    fn write_off_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.off");
        let m = cube_at(0.25, [1.0, 2.0, 3.0]);
        m.write_off(&p).unwrap();
        assert_eq!(load_mesh(&p).unwrap(), m);
    }

    #[test]
    fn normalize_unit_cube() {
        let n = normalize_mesh(&cube_at(10.0, [1.0; 3])).unwrap();
        let (lo, hi) = n.bounds();
        for a in 0..3 {
            assert!((lo[a] + 0.5).abs() < 1e-12 && (hi[a] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_box_uniform_scale() {
        let n = normalize_mesh(&cube_at(3.0, [2.0, 4.0, 1.0])).unwrap();
        let (lo, hi) = n.bounds();
        let ext: Vec<f64> = (0..3).map(|a| hi[a] - lo[a]).collect();
        for (e, want) in ext.iter().zip([0.5, 1.0, 0.25]) {
            assert!((e - want).abs() < 1e-12);
        }
        for a in 0..3 {
            assert!((lo[a] + hi[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_degenerate() {
        let m = TriangleMesh::new(vec![[1.0, 2.0, 3.0]; 3], vec![[0, 1, 2]]).unwrap();
        assert!(matches!(normalize_mesh(&m), Err(Error::DegenerateMesh)));
    }

    #[test]
    fn normalize_idempotent_bitwise() {
        let m = cube_at(-7.3, [0.3, 1.7, 0.9]);
        let a = normalize_mesh(&m).unwrap();
        let b = normalize_mesh(&a).unwrap();
        assert_eq!(a, b);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn mesh_strategy() -> impl Strategy<Value = TriangleMesh> {
            prop::collection::vec(prop::array::uniform3(-50.0f64..50.0), 3..20).prop_map(|v| {
                let n = v.len();
                let tris = (0..n - 2).map(|i| [0, i + 1, i + 2]).collect();
                TriangleMesh {
                    vertices: v,
                    triangles: tris,
                }
            })
        }

        proptest! {
            #[test]
            fn idempotent(m in mesh_strategy()) {
                let a = normalize_mesh(&m).unwrap();
                let b = normalize_mesh(&a).unwrap();
                prop_assert_eq!(&a, &b);
                let (lo, hi) = a.bounds();
                let longest = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
                prop_assert!((longest - 1.0).abs() <= 1e-9);
                for k in 0..3 {
                    prop_assert!((lo[k] + hi[k]).abs() <= 1e-9);
                }
            }

            #[test]
            fn translation_commutes(m in mesh_strategy(), t in prop::array::uniform3(-100.0f64..100.0)) {
                let a = normalize_mesh(&m).unwrap();
                let b = normalize_mesh(&m.translated(t)).unwrap();
                for (p, q) in a.vertices.iter().zip(&b.vertices) {
                    for k in 0..3 {
                        prop_assert!((p[k] - q[k]).abs() <= 1e-9);
                    }
                }
            }
        }
    }
}
