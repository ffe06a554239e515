//! Boundary functionals of smooth 3D domains.
//!
//! Mean curvature is `H = (k1 + k2) / 2` with respect to the outward normal,
//! so the unit sphere has `H = 1`, `∫H dS = 4π` and Willmore energy `4π`.

mod curvature;
mod mesh;
mod quadrature;
mod steiner;

use serde::{Deserialize, Serialize};

pub use curvature::{functionals_mesh, vertex_mean_curvatures};
pub use mesh::{mesh_domain, SurfaceMesh};
pub use quadrature::{functionals_quadrature, DEFAULT_QUAD_ORDER};
pub use steiner::{intrinsic_volumes, IntrinsicVolumes, DEFAULT_T_GRID};

/// Volume, boundary area, integrated mean curvature and Willmore energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricFunctionals {
    pub volume: f64,
    pub area: f64,
    pub mean_curvature_integral: f64,
    pub willmore: f64,
}

impl GeometricFunctionals {
    /// Functionals of the domain scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            volume: self.volume * s.powi(3),
            area: self.area * s * s,
            mean_curvature_integral: self.mean_curvature_integral * s,
            willmore: self.willmore,
        }
    }

    /// Largest relative difference over the four entries.
    pub fn max_relative_difference(&self, other: &Self) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        rel(self.volume, other.volume)
            .max(rel(self.area, other.area))
            .max(rel(self.mean_curvature_integral, other.mean_curvature_integral))
            .max(rel(self.willmore, other.willmore))
    }
}

/// Volume of the unit ball in `R^k`.
pub fn unit_ball_volume(k: u32) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => std::f64::consts::TAU / k as f64 * unit_ball_volume(k - 2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(0), 1.0);
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(5) - 8.0 * PI * PI / 15.0).abs() < 1e-14);
    }
}
