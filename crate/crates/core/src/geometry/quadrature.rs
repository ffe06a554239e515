use std::f64::consts::{PI, TAU};

use gauss_quad::legendre::GaussLegendre;

use super::GeometricFunctionals;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};

pub const DEFAULT_QUAD_ORDER: usize = 128;

/// Functionals from the analytic parametrization with exact principal
/// curvatures.
///
/// Balls and ellipsoids (surfaces of revolution) use Gauss–Legendre in the
/// polar angle; the torus integrand is periodic and uses the trapezoid rule
/// in the tube angle with `2 * quad_order` nodes. The azimuth integrates
/// exactly in both cases.
pub fn functionals_quadrature(spec: &DomainSpec, quad_order: usize) -> Result<GeometricFunctionals> {
    spec.validate()?;
    if quad_order < 2 {
        return Err(Error::InvalidInput(format!(
            "quad_order must be at least 2, got {quad_order}"
        )));
    }
    match *spec {
        DomainSpec::Ball { radius } => Ok(spheroid(radius, 1.0, quad_order)),
        DomainSpec::Ellipsoid { a, scale } => Ok(spheroid(scale, a, quad_order)),
        DomainSpec::SolidTorus { major, minor } => Ok(torus(major, minor, 2 * quad_order)),
        _ => Err(Error::UnsupportedDomain(format!(
            "no boundary parametrization for {}",
            spec.name()
        ))),
    }
}

/// Spheroid with semi-axes `s * (1, 1, a)`, profile `(sin t, a cos t)`.
fn spheroid(s: f64, a: f64, order: usize) -> GeometricFunctionals {
    let rule = GaussLegendre::new(order).expect("order >= 2");
    let mut f = [0.0f64; 4];
    for (x, w) in rule.iter() {
        let t = PI / 2.0 * (x + 1.0);
        let w = w * PI / 2.0;
        let (st, ct) = t.sin_cos();
        let speed = (ct * ct + a * a * st * st).sqrt();
        let k1 = a / speed.powi(3);
        let k2 = a / speed;
        let h = 0.5 * (k1 + k2);
        let ds = st * speed * w;
        // support function x·n = a / speed
        f[0] += a / speed * ds / 3.0;
        f[1] += ds;
        f[2] += h * ds;
        f[3] += h * h * ds;
    }
    GeometricFunctionals {
        volume: TAU * f[0] * s.powi(3),
        area: TAU * f[1] * s * s,
        mean_curvature_integral: TAU * f[2] * s,
        willmore: TAU * f[3],
    }
}

/// Torus `((R + r cos v) cos u, (R + r cos v) sin u, r sin v)`.
fn torus(major: f64, minor: f64, nodes: usize) -> GeometricFunctionals {
    let dv = TAU / nodes as f64;
    let mut f = [0.0f64; 4];
    for i in 0..nodes {
        let cv = (i as f64 * dv).cos();
        let rho = major + minor * cv;
        let h = 0.5 * (1.0 / minor + cv / rho);
        let ds = minor * rho * dv;
        f[0] += (major * cv + minor) * ds / 3.0;
        f[1] += ds;
        f[2] += h * ds;
        f[3] += h * h * ds;
    }
    GeometricFunctionals {
        volume: TAU * f[0],
        area: TAU * f[1],
        mean_curvature_integral: TAU * f[2],
        willmore: TAU * f[3],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_sphere_values() {
        let g = functionals_quadrature(&DomainSpec::ball(1.0), DEFAULT_QUAD_ORDER).unwrap();
        assert!((g.volume - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((g.area - 4.0 * PI).abs() < 1e-12);
        assert!((g.mean_curvature_integral - 4.0 * PI).abs() < 1e-12);
        assert!((g.willmore - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn torus_closed_forms() {
        // volume 2π²Rr², area 4π²Rr, ∫H = 2π²R
        let (big, small) = (2.0, 0.5);
        let g = functionals_quadrature(&DomainSpec::solid_torus(big, small), 64).unwrap();
        assert!((g.volume - 2.0 * PI * PI * big * small * small).abs() < 1e-12);
        assert!((g.area - 4.0 * PI * PI * big * small).abs() < 1e-12);
        assert!((g.mean_curvature_integral - 2.0 * PI * PI * big).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_volume_and_oblate_area() {
        let a: f64 = 0.5;
        let g = functionals_quadrature(&DomainSpec::ellipsoid(a), DEFAULT_QUAD_ORDER).unwrap();
        assert!((g.volume - 4.0 * PI * a / 3.0).abs() < 1e-12);
        // oblate spheroid area 2π(1 + a²/e · atanh e), e² = 1 − a²
        let e = (1.0 - a * a).sqrt();
        let area = TAU * (1.0 + a * a / e * e.atanh());
        assert!((g.area - area).abs() < 1e-12);
    }

    #[test]
    fn rejects_interval() {
        assert!(functionals_quadrature(&DomainSpec::interval(1.0), 8).is_err());
    }
}
