//! Compact Euclidean domains.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

/// A compact domain in `R^1` or `R^3`.
///
/// JSON form: `{"kind":"ellipsoid","a":0.5}`, `{"kind":"ball","radius":1.0}`,
/// `{"kind":"interval","length":2.0}`, `{"kind":"solid_torus","R0":2.0,"r0":0.5}`,
/// `{"kind":"point_cloud","path":"..."}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// `[0, length] ⊂ R`.
    Interval { length: f64 },
    /// Centered ball in `R^3`.
    Ball { radius: f64 },
    /// `{x^2 + y^2 + z^2/a^2 <= scale^2}`: semi-axes `scale * (1, 1, a)`.
    Ellipsoid {
        a: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
    /// Solid torus around the z axis with tube radius `r0` at distance `R0`.
    SolidTorus {
        #[serde(rename = "R0")]
        major: f64,
        #[serde(rename = "r0")]
        minor: f64,
    },
    /// Points read from a CSV file (`x` or `x,y,z` header).
    PointCloud { path: PathBuf },
}

impl DomainSpec {
    pub fn interval(length: f64) -> Self {
        Self::Interval { length }
    }

    pub fn ball(radius: f64) -> Self {
        Self::Ball { radius }
    }

    /// The unit-scale ellipsoid `X_a` with semi-axes `(1, 1, a)`.
    pub fn ellipsoid(a: f64) -> Self {
        Self::Ellipsoid { a, scale: 1.0 }
    }

    pub fn solid_torus(major: f64, minor: f64) -> Self {
        Self::SolidTorus { major, minor }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be positive, got {x}")))
            }
        };
        match self {
            Self::Interval { length } => positive("length", *length),
            Self::Ball { radius } => positive("radius", *radius),
            Self::Ellipsoid { a, scale } => {
                positive("a", *a)?;
                positive("scale", *scale)
            }
            Self::SolidTorus { major, minor } => {
                positive("R0", *major)?;
                positive("r0", *minor)?;
                if minor >= major {
                    return Err(Error::InvalidInput(format!(
                        "solid torus needs r0 < R0, got r0={minor}, R0={major}"
                    )));
                }
                Ok(())
            }
            Self::PointCloud { .. } => Ok(()),
        }
    }

    /// Ambient dimension; point clouds report 0 until loaded.
    pub fn dimension(&self) -> usize {
        match self {
            Self::Interval { .. } => 1,
            Self::PointCloud { .. } => 0,
            _ => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Interval { .. } => "interval",
            Self::Ball { .. } => "ball",
            Self::Ellipsoid { .. } => "ellipsoid",
            Self::SolidTorus { .. } => "solid_torus",
            Self::PointCloud { .. } => "point_cloud",
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(
            self,
            Self::Interval { .. } | Self::Ball { .. } | Self::Ellipsoid { .. }
        )
    }

    /// The same domain scaled about its centroid by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {s}")));
        }
        Ok(match self {
            Self::Interval { length } => Self::Interval { length: length * s },
            Self::Ball { radius } => Self::Ball { radius: radius * s },
            Self::Ellipsoid { a, scale } => Self::Ellipsoid {
                a: *a,
                scale: scale * s,
            },
            Self::SolidTorus { major, minor } => Self::SolidTorus {
                major: major * s,
                minor: minor * s,
            },
            Self::PointCloud { .. } => {
                return Err(Error::UnsupportedDomain("cannot scale a point cloud file".into()))
            }
        })
    }

    /// Semi-axes of the ellipsoid family; balls are ellipsoids with equal axes.
    pub(crate) fn semi_axes(&self) -> Option<[f64; 3]> {
        match self {
            Self::Ball { radius } => Some([*radius; 3]),
            Self::Ellipsoid { a, scale } => Some([*scale, *scale, scale * a]),
            _ => None,
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        match self {
            Self::Interval { length } => vec![length / 2.0],
            _ => vec![0.0; 3],
        }
    }

    /// Half side lengths of the centered axis-aligned bounding box (3D domains).
    pub fn half_extents(&self) -> Option<[f64; 3]> {
        match self {
            Self::Ball { .. } | Self::Ellipsoid { .. } => self.semi_axes(),
            Self::SolidTorus { major, minor } => Some([major + minor, major + minor, *minor]),
            _ => None,
        }
    }

    /// Closed-domain membership with a relative slack of 1e-12.
    pub fn contains(&self, p: &[f64]) -> bool {
        const SLACK: f64 = 1e-12;
        match self {
            Self::Interval { length } => {
                p.len() == 1 && p[0] >= -SLACK * length && p[0] <= length * (1.0 + SLACK)
            }
            Self::Ball { .. } | Self::Ellipsoid { .. } => {
                let e = self.semi_axes().unwrap();
                p.len() == 3
                    && (0..3).map(|i| (p[i] / e[i]).powi(2)).sum::<f64>() <= 1.0 + SLACK
            }
            Self::SolidTorus { major, minor } => {
                if p.len() != 3 {
                    return false;
                }
                let rho = p[0].hypot(p[1]);
                (rho - major).powi(2) + p[2] * p[2] <= minor * minor * (1.0 + SLACK)
            }
            Self::PointCloud { .. } => false,
        }
    }

    /// Point on the boundary surface for parameters `(u, v) ∈ [0,1)^2`.
    ///
    /// Balls and ellipsoids use the area-uniform sphere map (then stretched),
    /// tori the angular parametrization.
    pub(crate) fn boundary_point(&self, u: f64, v: f64) -> Option<[f64; 3]> {
        use std::f64::consts::TAU;
        match self {
            Self::Ball { .. } | Self::Ellipsoid { .. } => {
                let e = self.semi_axes().unwrap();
                let z = 2.0 * u - 1.0;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = TAU * v;
                Some([e[0] * r * phi.cos(), e[1] * r * phi.sin(), e[2] * z])
            }
            Self::SolidTorus { major, minor } => {
                let (a, b) = (TAU * u, TAU * v);
                let rho = major + minor * b.cos();
                Some([rho * a.cos(), rho * a.sin(), minor * b.sin()])
            }
            _ => None,
        }
    }

    /// Loads the points of a `point_cloud` spec.
    pub fn load_point_cloud(&self) -> Result<FiniteMetricSpace> {
        match self {
            Self::PointCloud { path } => FiniteMetricSpace::read_points_file(path),
            _ => Err(Error::UnsupportedDomain(format!(
                "{} is not a point cloud",
                self.name()
            ))),
        }
    }
}

impl FromStr for DomainSpec {
    type Err = Error;

    /// Parses JSON, or a bare kind name with unit parameters
    /// (`ball`, `interval`, `ellipsoid`, `solid_torus`).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let spec = if t.starts_with('{') {
            serde_json::from_str(t)?
        } else {
            match t {
                "ball" => Self::ball(1.0),
                "interval" => Self::interval(1.0),
                "ellipsoid" => Self::ellipsoid(1.0),
                "solid_torus" | "torus" => Self::solid_torus(2.0, 0.5),
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "domain must be JSON or one of ball/interval/ellipsoid/solid_torus, got `{t}`"
                    )))
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_forms() {
        let cases = [
            (r#"{"kind":"ellipsoid","a":0.5}"#, DomainSpec::ellipsoid(0.5)),
            (r#"{"kind":"ball","radius":1.0}"#, DomainSpec::ball(1.0)),
            (r#"{"kind":"interval","length":2.0}"#, DomainSpec::interval(2.0)),
            (
                r#"{"kind":"solid_torus","R0":2.0,"r0":0.5}"#,
                DomainSpec::solid_torus(2.0, 0.5),
            ),
        ];
        for (text, spec) in cases {
            let parsed: DomainSpec = text.parse().unwrap();
            assert_eq!(parsed, spec);
            let back: serde_json::Value = serde_json::to_value(&spec).unwrap();
            let orig: serde_json::Value = serde_json::from_str(text).unwrap();
            assert_eq!(back, orig);
        }
        let pc: DomainSpec = r#"{"kind":"point_cloud","path":"a.csv"}"#.parse().unwrap();
        assert_eq!(pc.name(), "point_cloud");
    }

    #[test]
    fn validation() {
        assert!("{\"kind\":\"ball\",\"radius\":0}".parse::<DomainSpec>().is_err());
        assert!(r#"{"kind":"solid_torus","R0":1.0,"r0":2.0}"#
            .parse::<DomainSpec>()
            .is_err());
        assert!("cube".parse::<DomainSpec>().is_err());
        assert_eq!("ball".parse::<DomainSpec>().unwrap(), DomainSpec::ball(1.0));
    }

    #[test]
    fn membership() {
        let e = DomainSpec::ellipsoid(0.5);
        assert!(e.contains(&[0.0, 0.0, 0.5]));
        assert!(!e.contains(&[0.0, 0.0, 0.51]));
        let t = DomainSpec::solid_torus(2.0, 0.5);
        assert!(t.contains(&[2.0, 0.0, 0.0]));
        assert!(!t.contains(&[0.0, 0.0, 0.0]));
        for (u, v) in [(0.1, 0.2), (0.7, 0.9), (0.0, 0.0)] {
            let p = e.boundary_point(u, v).unwrap();
            assert!((p[0] * p[0] + p[1] * p[1] + p[2] * p[2] / 0.25 - 1.0).abs() < 1e-12);
            let q = t.boundary_point(u, v).unwrap();
            assert!(t.contains(&q));
        }
    }
}
