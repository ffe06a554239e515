use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::term::Scalar;
use super::PolyhomSymbol;
use crate::error::{Error, Result};

/// Trapezoid nodes per angle; spectrally accurate for smooth periodic data.
pub const QUADRATURE_NODES: usize = 512;

/// Closed manifolds with flat angular coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Manifold {
    /// Circle of the given radius, coordinate `θ ∈ [0, 2π)`.
    Circle { radius: f64 },
    /// Flat torus `S¹(r1) × S¹(r2)`, coordinates `(θ1, θ2)`.
    Torus2 { r1: f64, r2: f64 },
}

impl Manifold {
    pub fn dim(&self) -> usize {
        match self {
            Manifold::Circle { .. } => 1,
            Manifold::Torus2 { .. } => 2,
        }
    }

    /// Riemannian volume.
    pub fn volume(&self) -> f64 {
        match *self {
            Manifold::Circle { radius } => 2.0 * PI * radius,
            Manifold::Torus2 { r1, r2 } => 4.0 * PI * PI * r1 * r2,
        }
    }

    /// Quadrature nodes in angle coordinates, with weights summing to the volume.
    fn nodes(&self, per_axis: usize) -> Vec<(Vec<f64>, f64)> {
        let h = 2.0 * PI / per_axis as f64;
        match *self {
            Manifold::Circle { radius } => (0..per_axis)
                .map(|i| (vec![i as f64 * h], radius * h))
                .collect(),
            Manifold::Torus2 { r1, r2 } => (0..per_axis * per_axis)
                .map(|k| {
                    let (i, j) = (k / per_axis, k % per_axis);
                    (vec![i as f64 * h, j as f64 * h], r1 * r2 * h * h)
                })
                .collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Manifold::Circle { radius } => radius > 0.0 && radius.is_finite(),
            Manifold::Torus2 { r1, r2 } => r1 > 0.0 && r2 > 0.0 && r1.is_finite() && r2.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("radii must be positive: {self:?}")))
        }
    }
}

/// Functions bound to formal scalars, by display name (`f`, `f[1,0]`), taking
/// the angle coordinates.
pub type Bindings<'a> = BTreeMap<String, Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>>;

/// `a_k = ∫_M σ_{s-k}(x, 0, 1) dx` for `k = 0..=k_max`.
pub fn expectation_expansion(
    sym: &PolyhomSymbol,
    manifold: Manifold,
    k_max: u32,
    bindings: &Bindings<'_>,
) -> Result<Vec<Complex64>> {
    manifold.validate()?;
    if !sym.is_scalar() {
        return Err(Error::ShapeMismatch("expectation needs a scalar symbol".into()));
    }
    if sym.dim() != manifold.dim() {
        return Err(Error::ShapeMismatch(format!(
            "symbol dimension {} on a manifold of dimension {}",
            sym.dim(),
            manifold.dim()
        )));
    }
    sym.check_degrees()?;
    if let Some(g) = sym.known_grades() {
        if k_max as i32 > g {
            return Err(Error::CutoffTooLow {
                requested: sym.order() - k_max as i32,
                available: sym.order() - g,
            });
        }
    }
    // at ξ = 0, R = 1 only α = 0 terms survive and R^k ρ^p = 1
    let terms: Vec<(usize, Complex64, Vec<(Scalar, i32)>)> = sym
        .entry(0, 0)
        .into_iter()
        .filter(|t| t.monomial.alpha.iter().all(|&a| a == 0))
        .filter_map(|t| {
            let k = (sym.order() - t.degree) as usize;
            (k <= k_max as usize).then(|| {
                (
                    k,
                    t.coeff.to_complex(),
                    t.monomial.scalars.into_iter().collect(),
                )
            })
        })
        .collect();
    let mut funcs: BTreeMap<Scalar, &(dyn Fn(&[f64]) -> f64 + Sync)> = BTreeMap::new();
    for (_, _, scalars) in &terms {
        for (s, _) in scalars {
            let name = s.to_string();
            let f = bindings.get(&name).ok_or(Error::UnboundScalar(name))?;
            funcs.insert(s.clone(), f.as_ref());
        }
    }
    let mut a = vec![Complex64::new(0.0, 0.0); k_max as usize + 1];
    for (x, w) in manifold.nodes(QUADRATURE_NODES) {
        for (k, c, scalars) in &terms {
            let v: f64 = scalars.iter().map(|(s, e)| funcs[s](&x).powi(*e)).product();
            a[*k] += c * v * w;
        }
    }
    Ok(a)
}

/// `Σ_k a_k R^{s-k}`.
pub fn expansion_value(a: &[Complex64], order: i32, r: f64) -> Complex64 {
    a.iter()
        .enumerate()
        .map(|(k, v)| v * r.powi(order - k as i32))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{GaussRat, Term};

    fn none() -> Bindings<'static> {
        Bindings::new()
    }

    #[test]
    fn rho_squared_on_circle() {
        let s = PolyhomSymbol::scalar(
            2,
            1,
            vec![Term::plain(1, vec![0], 2, 0), Term::plain(1, vec![2], 0, 0)],
            None,
        )
        .unwrap();
        let a = expectation_expansion(&s, Manifold::Circle { radius: 1.0 }, 3, &none()).unwrap();
        assert!((a[0].re - 2.0 * PI).abs() < 1e-12);
        assert!(a[1..].iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn rho_on_circle() {
        let a = expectation_expansion(&PolyhomSymbol::radial(1, 1), Manifold::Circle { radius: 1.0 }, 2, &none())
            .unwrap();
        assert!((a[0].re - 2.0 * PI).abs() < 1e-12);
        assert_eq!(a[1].norm() + a[2].norm(), 0.0);
    }

    #[test]
    fn bound_cos_squared() {
        let s = PolyhomSymbol::scalar(
            3,
            1,
            vec![Term::plain(1, vec![0], 3, 0).times_scalar("f", 1).unwrap()],
            None,
        )
        .unwrap();
        let mut b = Bindings::new();
        b.insert("f".into(), Box::new(|x: &[f64]| x[0].cos().powi(2)));
        let a = expectation_expansion(&s, Manifold::Circle { radius: 1.0 }, 0, &b).unwrap();
        assert!((a[0].re - PI).abs() < 1e-12);
        assert!(matches!(
            expectation_expansion(&s, Manifold::Circle { radius: 1.0 }, 0, &none()),
            Err(Error::UnboundScalar(n)) if n == "f"
        ));
    }

    #[test]
    fn torus_volume_weighting() {
        let s = PolyhomSymbol::scalar(0, 2, vec![Term::plain(GaussRat::i(), vec![0, 0], 0, 0)], None).unwrap();
        let m = Manifold::Torus2 { r1: 2.0, r2: 0.5 };
        let a = expectation_expansion(&s, m, 1, &none()).unwrap();
        assert!((a[0].im - m.volume()).abs() < 1e-10);
    }
}
