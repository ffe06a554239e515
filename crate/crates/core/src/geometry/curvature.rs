use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::mesh::{cross, dot, normalize, sub, SurfaceMesh};
use super::GeometricFunctionals;
use crate::error::{Error, Result};

fn vertex_neighbors(mesh: &SurfaceMesh) -> Vec<BTreeSet<usize>> {
    let mut nb = vec![BTreeSet::new(); mesh.vertices.len()];
    for t in &mesh.triangles {
        for k in 0..3 {
            nb[t[k]].insert(t[(k + 1) % 3]);
            nb[t[k]].insert(t[(k + 2) % 3]);
        }
    }
    nb
}

/// Area-weighted vertex normals, used when the mesh carries none.
fn face_weighted_normals(mesh: &SurfaceMesh) -> Vec<[f64; 3]> {
    let mut acc = vec![[0.0; 3]; mesh.vertices.len()];
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| mesh.vertices[i]);
        let n = cross(sub(b, a), sub(c, a));
        for &i in t {
            for k in 0..3 {
                acc[i][k] += n[k];
            }
        }
    }
    acc.into_iter().map(normalize).collect()
}

/// Mean curvature at every vertex from a least-squares height-function fit
/// `w = a u² + b uv + c v² + d u + e v + (cubic and quartic terms)` over the
/// 2-ring, in a frame whose `w` axis is the outward normal. Smaller rings fall
/// back to the quadric part alone.
pub fn vertex_mean_curvatures(mesh: &SurfaceMesh) -> Result<Vec<f64>> {
    mesh.validate()?;
    let normals = match &mesh.normals {
        Some(n) => n.clone(),
        None => face_weighted_normals(mesh),
    };
    let one_ring = vertex_neighbors(mesh);
    (0..mesh.vertices.len())
        .into_par_iter()
        .map(|i| {
            let mut ring: BTreeSet<usize> = one_ring[i].clone();
            for &j in &one_ring[i] {
                ring.extend(one_ring[j].iter().copied());
            }
            ring.remove(&i);
            fit_mean_curvature(mesh.vertices[i], normals[i], ring.iter().map(|&j| mesh.vertices[j]))
                .ok_or_else(|| Error::DegenerateMesh(format!("curvature fit failed at vertex {i}")))
        })
        .collect()
}

fn fit_mean_curvature(
    p: [f64; 3],
    n: [f64; 3],
    neighbors: impl Iterator<Item = [f64; 3]>,
) -> Option<f64> {
    // tangent frame
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = normalize(cross(n, helper));
    let e2 = cross(n, e1);
    let local: Vec<[f64; 3]> = neighbors
        .map(|q| {
            let d = sub(q, p);
            [dot(d, e1), dot(d, e2), dot(d, n)]
        })
        .collect();
    // Higher-order terms absorb the quartic part of the height function,
    // which otherwise biases the quadratic coefficients by O(h²).
    let cols = match local.len() {
        n if n >= 15 => 14,
        n if n >= 11 => 9,
        n if n >= 7 => 5,
        n if n >= 3 => 3,
        _ => return None,
    };
    // rescale for conditioning
    let scale = local
        .iter()
        .map(|q| (q[0] * q[0] + q[1] * q[1]).sqrt())
        .fold(0.0, f64::max);
    if scale <= 0.0 {
        return None;
    }
    let a = DMatrix::from_fn(local.len(), cols, |r, c| {
        let (u, v) = (local[r][0] / scale, local[r][1] / scale);
        let monomials = [
            u * u,
            u * v,
            v * v,
            u,
            v,
            u * u * u,
            u * u * v,
            u * v * v,
            v * v * v,
            u.powi(4),
            u * u * u * v,
            u * u * v * v,
            u * v * v * v,
            v.powi(4),
        ];
        monomials[c]
    });
    let rhs = DVector::from_iterator(local.len(), local.iter().map(|q| q[2] / scale));
    let sol = a.svd(true, true).solve(&rhs, 1e-12).ok()?;
    let (qa, qb, qc) = (sol[0], sol[1], sol[2]);
    let (qd, qe) = if cols >= 5 { (sol[3], sol[4]) } else { (0.0, 0.0) };
    let g = 1.0 + qd * qd + qe * qe;
    let h = -((1.0 + qe * qe) * 2.0 * qa - 2.0 * qd * qe * qb + (1.0 + qd * qd) * 2.0 * qc)
        / (2.0 * g.powf(1.5));
    Some(h / scale)
}

/// Discrete functionals: divergence-theorem volume, triangle-area sum, and
/// curvature integrals over barycentric vertex areas.
pub fn functionals_mesh(mesh: &SurfaceMesh) -> Result<GeometricFunctionals> {
    let h = vertex_mean_curvatures(mesh)?;
    let mut vertex_area = vec![0.0; mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.triangle_area(t) / 3.0;
        for &i in tri {
            vertex_area[i] += a;
        }
    }
    let mut hi = 0.0;
    let mut w = 0.0;
    for (hv, av) in h.iter().zip(&vertex_area) {
        hi += hv * av;
        w += hv * hv * av;
    }
    Ok(GeometricFunctionals {
        volume: mesh.volume(),
        area: mesh.area(),
        mean_curvature_integral: hi,
        willmore: w,
    })
}
