use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};

/// Closed triangulated surface with outward-oriented triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    /// Per-vertex unit normals from the parametrization, when known.
    pub normals: Option<Vec<[f64; 3]>>,
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self {
            vertices,
            triangles,
            normals: None,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    /// Checks closedness, consistent orientation and nondegenerate faces.
    pub fn validate(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::DegenerateMesh("no triangles".into()));
        }
        let n = self.vertices.len();
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::DegenerateMesh(format!("triangle {t} indexes past the vertex list")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateMesh(format!("triangle {t} repeats a vertex")));
            }
            if !(self.triangle_area(t) > 0.0) {
                return Err(Error::DegenerateMesh(format!("triangle {t} has zero area")));
            }
            for k in 0..3 {
                *edges.entry((tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(i, j), &count) in &edges {
            if count != 1 || edges.get(&(j, i)) != Some(&1) {
                return Err(Error::DegenerateMesh(format!(
                    "edge ({i}, {j}) is not shared by exactly two oppositely oriented triangles"
                )));
            }
        }
        if !(self.volume() > 0.0) {
            return Err(Error::DegenerateMesh("enclosed volume is not positive".into()));
        }
        Ok(())
    }

    /// Enclosed volume by the divergence theorem.
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| dot(self.vertices[t[0]], cross(self.vertices[t[1]], self.vertices[t[2]])))
            .sum::<f64>()
            / 6.0
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// `V - E + F` (edges counted once per undirected pair).
    pub fn euler_characteristic(&self) -> i64 {
        let edges = self.triangles.len() * 3 / 2;
        self.vertices.len() as i64 - edges as i64 + self.triangles.len() as i64
    }

    /// Writes the mesh in OFF format.
    pub fn write_off<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "OFF").unwrap();
        writeln!(s, "{} {} 0", self.vertices.len(), self.triangles.len()).unwrap();
        for v in &self.vertices {
            writeln!(s, "{:e} {:e} {:e}", v[0], v[1], v[2]).unwrap();
        }
        for t in &self.triangles {
            writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    /// Reads an OFF file with triangular faces; normals are not stored in OFF.
    pub fn read_off<R: Read>(r: R) -> Result<Self> {
        let bad = |msg: &str| Error::DegenerateMesh(format!("OFF parse error: {msg}"));
        let mut tokens = Vec::new();
        for line in BufReader::new(r).lines() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("");
            tokens.extend(line.split_whitespace().map(str::to_owned));
        }
        let mut it = tokens.into_iter();
        if it.next().as_deref() != Some("OFF") {
            return Err(bad("missing OFF header"));
        }
        let mut num = || -> Result<f64> {
            it.next()
                .ok_or_else(|| bad("unexpected end of file"))?
                .parse::<f64>()
                .map_err(|_| bad("expected a number"))
        };
        let nv = num()? as usize;
        let nf = num()? as usize;
        let _ne = num()?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            vertices.push([num()?, num()?, num()?]);
        }
        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            if num()? as usize != 3 {
                return Err(bad("only triangular faces are supported"));
            }
            triangles.push([num()? as usize, num()? as usize, num()? as usize]);
        }
        Self::new(vertices, triangles)
    }

    pub fn read_off_file(path: &Path) -> Result<Self> {
        Self::read_off(std::fs::File::open(path)?)
    }
}

/// Icosahedron on the unit sphere, outward oriented.
fn icosahedron() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    let tris = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (raw.iter().map(|v| normalize(*v)).collect(), tris)
}

fn icosphere(level: u32) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let (mut verts, mut tris) = icosahedron();
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |i: usize, j: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            *mid.entry((i.min(j), i.max(j))).or_insert_with(|| {
                let (a, b) = (verts[i], verts[j]);
                verts.push(normalize([a[0] + b[0], a[1] + b[1], a[2] + b[2]]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    (verts, tris)
}

/// Triangulates the boundary of a ball, ellipsoid or solid torus.
///
/// Balls and ellipsoids start from an icosahedron (12 vertices at level 0,
/// `10 * 4^k + 2` at level `k`); the torus uses a `16·2^k × 8·2^k` angular
/// grid. Analytic unit normals are attached.
pub fn mesh_domain(spec: &DomainSpec, refinement: u32) -> Result<SurfaceMesh> {
    spec.validate()?;
    if refinement > 8 {
        return Err(Error::InvalidInput(format!(
            "refinement {refinement} is too large (max 8)"
        )));
    }
    match *spec {
        DomainSpec::Ball { .. } | DomainSpec::Ellipsoid { .. } => {
            let e = spec.semi_axes().unwrap();
            let (sphere, triangles) = icosphere(refinement);
            let vertices = sphere
                .iter()
                .map(|p| [e[0] * p[0], e[1] * p[1], e[2] * p[2]])
                .collect();
            let normals = sphere
                .iter()
                .map(|p| normalize([p[0] / e[0], p[1] / e[1], p[2] / e[2]]))
                .collect();
            let mesh = SurfaceMesh {
                vertices,
                triangles,
                normals: Some(normals),
            };
            mesh.validate()?;
            Ok(mesh)
        }
        DomainSpec::SolidTorus { major, minor } => {
            let nu = 16usize << refinement;
            let nv = 8usize << refinement;
            let mut vertices = Vec::with_capacity(nu * nv);
            let mut normals = Vec::with_capacity(nu * nv);
            for i in 0..nu {
                let (su, cu) = (TAU * i as f64 / nu as f64).sin_cos();
                for j in 0..nv {
                    let (sv, cv) = (TAU * j as f64 / nv as f64).sin_cos();
                    let rho = major + minor * cv;
                    vertices.push([rho * cu, rho * su, minor * sv]);
                    normals.push([cv * cu, cv * su, sv]);
                }
            }
            let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
            let mut triangles = Vec::with_capacity(2 * nu * nv);
            for i in 0..nu {
                for j in 0..nv {
                    let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                }
            }
            let mesh = SurfaceMesh {
                vertices,
                triangles,
                normals: Some(normals),
            };
            mesh.validate()?;
            Ok(mesh)
        }
        _ => Err(Error::UnsupportedDomain(format!(
            "cannot mesh the boundary of {}",
            spec.name()
        ))),
    }
}
