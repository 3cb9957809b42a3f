//! Triangulation of the radial graph `{x(u)·u}` and plain-text exports.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Domain;
use crate::simulate::RadialField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices, counter-clockwise seen from outside.
    pub faces: Vec<[usize; 3]>,
    /// Free-form `key: value` pairs written as OBJ comments.
    pub metadata: Vec<(String, String)>,
}

impl TriangleMesh {
    /// `V − E + F`; 2 for a closed genus-0 surface.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        self.vertices.len() as i64 - edges.len() as i64 + self.faces.len() as i64
    }

    /// Signed enclosed volume; positive for outward orientation.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                    + a[2] * (b[0] * c[1] - b[1] * c[0])
            })
            .sum::<f64>()
            / 6.0
    }

    fn validate(&self) -> Result<()> {
        let v = self.vertices.len();
        if let Some(f) = self.faces.iter().find(|f| f.iter().any(|&i| i >= v)) {
            return Err(Error::Geometry(format!("face {f:?} refers past {v} vertices")));
        }
        Ok(())
    }
}

/// Mesh of a sphere-grid field.
///
/// The ring at colatitude 0 is one direction repeated, so it collapses to a
/// single vertex. The grid stops short of the south pole; the mesh is closed
/// there by a synthetic vertex at `(0, 0, −1)` whose radius is the mean of the
/// last ring. Vertex order: north pole, rings `1..M1` in grid order, south pole.
pub fn triangulate(field: &RadialField) -> Result<TriangleMesh> {
    let grid = &field.grid;
    let (m1, m2) = (grid.m1, grid.m2);
    if grid.domain != Domain::Sphere {
        return Err(Error::Geometry("triangulation needs a sphere field".into()));
    }
    if m1 < 2 || m2 < 3 {
        return Err(Error::Geometry(format!("grid {m1}×{m2} is too coarse; need M1 ≥ 2 and M2 ≥ 3")));
    }
    if field.values.len() != m1 * m2 || grid.directions.len() != m1 * m2 {
        return Err(Error::Geometry("field values do not match the grid".into()));
    }
    let scaled = |m: usize| grid.directions[m].map(|c| c * field.values[m]);

    let mut vertices = Vec::with_capacity(2 + (m1 - 1) * m2);
    vertices.push([0.0, 0.0, field.values[0]]);
    vertices.extend((m2..m1 * m2).map(scaled));
    let last_ring = &field.values[(m1 - 1) * m2..];
    let south_radius = last_ring.iter().sum::<f64>() / m2 as f64;
    vertices.push([0.0, 0.0, -south_radius]);
    let south = vertices.len() - 1;

    // vertex of ring i ≥ 1, longitude slot j (wrapping)
    let ring = |i: usize, j: usize| 1 + (i - 1) * m2 + j % m2;
    let mut faces = Vec::with_capacity(2 * m2 * (m1 - 1));
    for j in 0..m2 {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..m1 - 1 {
        for j in 0..m2 {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
            faces.push([a, c, d]);
            faces.push([a, d, b]);
        }
    }
    for j in 0..m2 {
        faces.push([south, ring(m1 - 1, j + 1), ring(m1 - 1, j)]);
    }

    let metadata = vec![
        ("grid".to_string(), format!("{m1}x{m2}")),
        ("north_pole".to_string(), "ring at colatitude 0 collapsed to one vertex".to_string()),
        ("south_pole".to_string(), "synthetic vertex, radius = mean of last ring".to_string()),
        ("seed".to_string(), field.config.seed.to_string()),
    ];
    Ok(TriangleMesh {
        vertices,
        faces,
        metadata,
    })
}

/// Writes `# key: value` comments, `v` lines with 17 significant digits and
/// 1-based `f` lines.
pub fn export_obj<W: Write>(mesh: &TriangleMesh, mut out: W) -> Result<()> {
    mesh.validate()?;
    let mut buf = String::with_capacity(64 * (mesh.vertices.len() + mesh.faces.len()));
    for (k, v) in &mesh.metadata {
        buf.push_str(&format!("# {k}: {v}\n"));
    }
    for v in &mesh.vertices {
        buf.push_str(&format!("v {:.16e} {:.16e} {:.16e}\n", v[0], v[1], v[2]));
    }
    for f in &mesh.faces {
        buf.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn obj_string(mesh: &TriangleMesh) -> Result<String> {
    let mut bytes = Vec::new();
    export_obj(mesh, &mut bytes)?;
    Ok(String::from_utf8(bytes).expect("OBJ output is ASCII"))
}

/// Reads the subset of OBJ written by [`export_obj`].
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let bad = |n: usize, line: &str| Error::Geometry(format!("line {}: cannot parse {line:?}", n + 1));
    let mut mesh = TriangleMesh {
        vertices: Vec::new(),
        faces: Vec::new(),
        metadata: Vec::new(),
    };
    for (n, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            None => {}
            Some("#") => {
                let rest = line.trim_start()[1..].trim();
                if let Some((k, v)) = rest.split_once(": ") {
                    mesh.metadata.push((k.to_string(), v.to_string()));
                }
            }
            Some("v") => {
                let xs: Vec<f64> = parts.map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad(n, line))?;
                let v: [f64; 3] = xs.try_into().map_err(|_| bad(n, line))?;
                mesh.vertices.push(v);
            }
            Some("f") => {
                let is: Vec<usize> = parts.map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad(n, line))?;
                let f: [usize; 3] = is.try_into().map_err(|_| bad(n, line))?;
                if f.contains(&0) {
                    return Err(bad(n, line));
                }
                mesh.faces.push(f.map(|i| i - 1));
            }
            Some(_) => return Err(bad(n, line)),
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

/// Closed polyline `(x cos φ, x sin φ)` of a circle field; the first point is
/// repeated at the end.
pub fn polygon_outline(field: &RadialField) -> Result<Vec<[f64; 2]>> {
    if field.grid.domain != Domain::Circle {
        return Err(Error::Geometry("outline needs a circle field".into()));
    }
    if field.values.is_empty() || field.values.len() != field.grid.coords.len() {
        return Err(Error::Geometry("field values do not match the grid".into()));
    }
    let mut points: Vec<[f64; 2]> = field
        .grid
        .coords
        .iter()
        .zip(&field.values)
        .map(|(&(_, phi), &x)| {
            let (s, c) = phi.sin_cos();
            [x * c, x * s]
        })
        .collect();
    points.push(points[0]);
    Ok(points)
}

/// CSV with header `x,y`.
pub fn outline_csv(points: &[[f64; 2]]) -> String {
    let mut s = String::from("x,y\n");
    for p in points {
        s.push_str(&format!("{:.16e},{:.16e}\n", p[0], p[1]));
    }
    s
}
