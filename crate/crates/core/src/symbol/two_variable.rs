use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;

use super::term::{add_raw, poly_add, poly_d_xi, poly_eval, poly_mul, poly_scale, Monomial, Poly, Scalar};
use super::{GaussRat, PolyhomSymbol};
use crate::error::{Error, Result};

/// Exponents of the two base points, `x^β y^γ`.
type PointPowers = (Vec<u32>, Vec<u32>);

/// Symbol in two base points `x, y ∈ R^d` near a boundary point written as a
/// graph `(x, S(x))`, with `S(0) = 0` and `∇S(0) = 0`.
///
/// `S` is the polynomial `Σ_{2 <= |β| <= J} S[β] x^β / β!` of its stored jet;
/// the Taylor constants `S[β]` are formal scalars. Coefficients are
/// polynomials in `x` and `y` with values in the `(ξ, R)` monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoVariableSymbol {
    dim: usize,
    jet_order: u32,
    jet_name: String,
    parts: BTreeMap<PointPowers, Poly>,
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

impl TwoVariableSymbol {
    fn empty(dim: usize, jet_order: u32) -> Self {
        Self {
            dim,
            jet_order,
            jet_name: "S".into(),
            parts: BTreeMap::new(),
        }
    }

    fn from_poly(dim: usize, jet_order: u32, x: Vec<u32>, y: Vec<u32>, p: Poly) -> Self {
        let mut s = Self::empty(dim, jet_order);
        if !p.is_empty() {
            s.parts.insert((x, y), p);
        }
        s
    }

    fn mono(&self, c: GaussRat, m: Monomial) -> Self {
        let mut p = Poly::new();
        add_raw(&mut p, m, c);
        Self::from_poly(self.dim, self.jet_order, vec![0; self.dim], vec![0; self.dim], p)
    }

    /// The constant `c`, for a graph function with jet order `jet_order >= 2`.
    pub fn constant(dim: usize, jet_order: u32, c: GaussRat) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if jet_order < 2 {
            return Err(Error::InvalidInput("the jet of S starts at order 2".into()));
        }
        let s = Self::empty(dim, jet_order);
        Ok(s.mono(c, Monomial::one(dim)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jet_order(&self) -> u32 {
        self.jet_order
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    fn like(&self) -> Self {
        Self::empty(self.dim, self.jet_order)
    }

    /// `ξ_l` (zero based).
    pub fn xi(&self, l: usize) -> Self {
        let mut m = Monomial::one(self.dim);
        m.alpha[l] = 1;
        self.mono(GaussRat::one(), m)
    }

    /// `ρ^p = (R² + |ξ|²)^{p/2}`.
    pub fn radial(&self, p: i32) -> Self {
        let mut m = Monomial::one(self.dim);
        m.p = p;
        self.mono(GaussRat::one(), m)
    }

    /// A formal constant, such as an unspecified coefficient.
    pub fn formal(&self, name: &str) -> Result<Self> {
        let s: Scalar = name.parse()?;
        if s.name == self.jet_name {
            return Err(Error::InvalidInput(format!(
                "`{}` is reserved for the graph function",
                self.jet_name
            )));
        }
        let mut m = Monomial::one(self.dim);
        m.scalars.insert(s.padded(self.dim)?, 1);
        Ok(self.mono(GaussRat::one(), m))
    }

    pub fn scalar(&self, c: GaussRat) -> Self {
        self.mono(c, Monomial::one(self.dim))
    }

    /// The Taylor constant `S[β] = ∂^β S(0)`; zero for `|β| < 2`.
    pub fn jet_constant(&self, beta: &[u32]) -> Result<Self> {
        if beta.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "multi-index of length {} in dimension {}",
                beta.len(),
                self.dim
            )));
        }
        let order: u32 = beta.iter().sum();
        if order > self.jet_order {
            return Err(Error::JetTooShallow {
                scalar: Scalar::derivative(&self.jet_name, beta.to_vec()).to_string(),
                needed: order,
                stored: self.jet_order,
            });
        }
        if order < 2 {
            return Ok(self.like());
        }
        let mut m = Monomial::one(self.dim);
        m.scalars.insert(Scalar::derivative(&self.jet_name, beta.to_vec()), 1);
        Ok(self.mono(GaussRat::one(), m))
    }

    /// `Σ_{γ} S[γ + shift] z^γ / γ!` over the stored jet, with `z` the x or
    /// y point.
    fn jet_series(&self, shift: &[u32], on_y: bool) -> Self {
        let lo = 2u32.saturating_sub(shift.iter().sum());
        let hi = self.jet_order - shift.iter().sum::<u32>();
        let mut out = self.like();
        for gamma in super::calculus::multi_indices(self.dim, hi) {
            let n: u32 = gamma.iter().sum();
            if n < lo {
                continue;
            }
            let beta: Vec<u32> = gamma.iter().zip(shift).map(|(g, s)| g + s).collect();
            let fact: i64 = gamma.iter().map(|&g| factorial(g)).product();
            let mut m = Monomial::one(self.dim);
            m.scalars.insert(Scalar::derivative(&self.jet_name, beta), 1);
            let mut p = Poly::new();
            add_raw(&mut p, m, GaussRat::ratio(1, fact));
            let zero = vec![0; self.dim];
            let key = if on_y { (zero, gamma) } else { (gamma, zero) };
            out = out.add(&Self {
                parts: BTreeMap::from([(key, p)]),
                ..self.like()
            });
        }
        out
    }

    /// `S(x)`.
    pub fn s_at_x(&self) -> Self {
        self.jet_series(&vec![0; self.dim], false)
    }

    /// `S(y)`.
    pub fn s_at_y(&self) -> Self {
        self.jet_series(&vec![0; self.dim], true)
    }

    /// `S(x) - S(y)`.
    pub fn s_difference(&self) -> Self {
        self.s_at_x().sub(&self.s_at_y())
    }

    /// `∂_l S(x)`.
    pub fn grad_s_x(&self, l: usize) -> Self {
        let mut e = vec![0; self.dim];
        e[l] = 1;
        self.jet_series(&e, false)
    }

    /// `∂_l S(y)`.
    pub fn grad_s_y(&self, l: usize) -> Self {
        let mut e = vec![0; self.dim];
        e[l] = 1;
        self.jet_series(&e, true)
    }

    /// `ξ · ∇S(x)` or `ξ · ∇S(y)`.
    pub fn xi_dot_grad_s(&self, on_y: bool) -> Self {
        (0..self.dim).fold(self.like(), |acc, l| {
            let g = if on_y { self.grad_s_y(l) } else { self.grad_s_x(l) };
            acc.add(&self.xi(l).mul(&g))
        })
    }

    /// `(-i∂_z)^r Σ_q c_q z^q ρ^{d0+q}` at `z = S(x) - S(y)`: a truncated
    /// model of a radial kernel in `(R² + |ξ|², z)`.
    pub fn z_series(&self, coeffs: &[GaussRat], d0: i32, r: u32) -> Self {
        let z = self.s_difference();
        let mut out = self.like();
        let phase = GaussRat::i_pow(3 * r); // (-i)^r
        for (q, c) in coeffs.iter().enumerate() {
            let q = q as u32;
            if q < r || c.is_zero() {
                continue;
            }
            let falling = factorial(q) / factorial(q - r);
            let coef = &(c * &phase) * &GaussRat::int(falling);
            let term = z.pow(q - r).mul(&self.radial(d0 + q as i32)).scale(&coef);
            out = out.add(&term);
        }
        out
    }

    /// The four boundary-layer shapes: `b0`, `b1 + (ξ·∇S(x)) b0`,
    /// `b1 + (ξ·∇S(y)) b0` and
    /// `b2 + (ξ·∇S(y) + ξ·∇S(x)) b1 + (ξ·∇S(x))(ξ·∇S(y)) b0`, with
    /// `b_r = z_series(coeffs, d0, r)`.
    pub fn layer_symbol(&self, coeffs: &[GaussRat], d0: i32, x_side: bool, y_side: bool) -> Self {
        let b = |r| self.z_series(coeffs, d0, r);
        let gx = self.xi_dot_grad_s(false);
        let gy = self.xi_dot_grad_s(true);
        match (x_side, y_side) {
            (false, false) => b(0),
            (true, false) => b(1).add(&gx.mul(&b(0))),
            (false, true) => b(1).add(&gy.mul(&b(0))),
            (true, true) => b(2).add(&gy.add(&gx).mul(&b(1))).add(&gx.mul(&gy).mul(&b(0))),
        }
    }

    fn check_compatible(&self, o: &Self) {
        assert_eq!(
            (self.dim, self.jet_order),
            (o.dim, o.jet_order),
            "two-variable symbols over different jets"
        );
    }

    /// # Panics
    /// If the operands were built over different dimensions or jet orders.
    pub fn add(&self, o: &Self) -> Self {
        self.check_compatible(o);
        let mut out = self.clone();
        for (k, p) in &o.parts {
            let sum = match out.parts.get(k) {
                Some(q) => poly_add(q, p),
                None => p.clone(),
            };
            if sum.is_empty() {
                out.parts.remove(k);
            } else {
                out.parts.insert(k.clone(), sum);
            }
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&GaussRat::int(-1)))
    }

    pub fn scale(&self, c: &GaussRat) -> Self {
        let mut out = self.like();
        for (k, p) in &self.parts {
            let q = poly_scale(p, c);
            if !q.is_empty() {
                out.parts.insert(k.clone(), q);
            }
        }
        out
    }

    /// # Panics
    /// As for [`TwoVariableSymbol::add`].
    pub fn mul(&self, o: &Self) -> Self {
        self.check_compatible(o);
        let mut out = self.like();
        for ((ax, ay), p) in &self.parts {
            for ((bx, by), q) in &o.parts {
                let x: Vec<u32> = ax.iter().zip(bx).map(|(a, b)| a + b).collect();
                let y: Vec<u32> = ay.iter().zip(by).map(|(a, b)| a + b).collect();
                let prod = Self::from_poly(self.dim, self.jet_order, x, y, poly_mul(p, q));
                out = out.add(&prod);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(self.scalar(GaussRat::one()), |acc, _| acc.mul(self))
    }

    /// `∂/∂ξ_l`.
    pub fn d_xi(&self, l: usize) -> Self {
        let mut out = self.like();
        for (k, p) in &self.parts {
            let q = poly_d_xi(p, l);
            if !q.is_empty() {
                out.parts.insert(k.clone(), q);
            }
        }
        out
    }

    /// `∂/∂y_l`.
    pub fn d_y(&self, l: usize) -> Self {
        let mut out = self.like();
        for ((x, y), p) in &self.parts {
            if y[l] == 0 {
                continue;
            }
            let mut y2 = y.clone();
            y2[l] -= 1;
            let q = poly_scale(p, &GaussRat::int(y[l] as i64));
            out = out.add(&Self::from_poly(self.dim, self.jet_order, x.clone(), y2, q));
        }
        out
    }

    /// Value at `x = y = 0`, a one-variable polynomial.
    pub fn at_base_point(&self) -> Poly {
        let zero = (vec![0; self.dim], vec![0; self.dim]);
        self.parts.get(&zero).cloned().unwrap_or_default()
    }

    /// Numerical value at `(x, y, ξ, R)`.
    pub fn eval(
        &self,
        x: &[f64],
        y: &[f64],
        xi: &[f64],
        r: f64,
        scalar: &dyn Fn(&Scalar) -> Option<f64>,
    ) -> Result<Complex64> {
        let mut v = Complex64::new(0.0, 0.0);
        for ((bx, by), p) in &self.parts {
            let mut w = 1.0;
            for i in 0..self.dim {
                w *= x[i].powi(bx[i] as i32) * y[i].powi(by[i] as i32);
            }
            v += poly_eval(p, xi, r, scalar)? * w;
        }
        Ok(v)
    }

    /// Fails if a stored term references `S[β]` with `|β|` beyond the jet.
    pub fn check_jet(&self) -> Result<()> {
        for p in self.parts.values() {
            for m in p.keys() {
                for s in m.scalars.keys() {
                    if s.name == self.jet_name && s.order() > self.jet_order {
                        return Err(Error::JetTooShallow {
                            scalar: s.to_string(),
                            needed: s.order(),
                            stored: self.jet_order,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Adds `c · x^β y^γ · m` directly.
    pub fn add_raw_term(&mut self, x: Vec<u32>, y: Vec<u32>, m: Monomial, c: GaussRat) -> Result<()> {
        if x.len() != self.dim || y.len() != self.dim || m.alpha.len() != self.dim {
            return Err(Error::ShapeMismatch("term dimension disagrees with the symbol".into()));
        }
        let mut p = Poly::new();
        super::term::add_term(&mut p, m, c);
        *self = self.add(&Self::from_poly(self.dim, self.jet_order, x, y, p));
        Ok(())
    }
}

/// One-variable symbol at the base point,
/// `a(0,0,ξ,R) - i Σ_l ∂²a/∂ξ_l∂y_l - ½ Σ_{l,s} ∂⁴a/∂ξ_l∂ξ_s∂y_l∂y_s`,
/// keeping terms of degree `>= target_degree`.
pub fn reduce_two_variable(sym: &TwoVariableSymbol, target_degree: i32) -> Result<PolyhomSymbol> {
    sym.check_jet()?;
    let d = sym.dim();
    let mut total = sym.at_base_point();
    let minus_i = -GaussRat::i();
    let minus_half = GaussRat::real(BigRational::new((-1).into(), 2.into()));
    for l in 0..d {
        let dy = sym.d_y(l);
        let first = poly_d_xi(&dy.at_base_point(), l);
        total = poly_add(&total, &poly_scale(&first, &minus_i));
        for s in 0..d {
            let second = poly_d_xi(&poly_d_xi(&dy.d_y(s).at_base_point(), l), s);
            total = poly_add(&total, &poly_scale(&second, &minus_half));
        }
    }
    total.retain(|m, _| m.degree() >= target_degree);
    let order = total.keys().map(Monomial::degree).max().unwrap_or(target_degree);
    Ok(PolyhomSymbol::from_polys(
        order,
        d,
        vec![0],
        vec![0],
        vec![total],
        Some(target_degree),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(dim: usize) -> TwoVariableSymbol {
        TwoVariableSymbol::constant(dim, 2, GaussRat::one()).unwrap()
    }

    #[test]
    fn y_independent_symbol_is_unchanged() {
        let b = base(2);
        let a = b.xi(0).mul(&b.radial(-3)).add(&b.formal("c").unwrap().mul(&b.radial(-2)));
        let red = reduce_two_variable(&a, -10).unwrap();
        assert_eq!(red.poly(0, 0), a.at_base_point());
    }

    #[test]
    fn gradient_at_y_gives_trace_correction() {
        // (ξ·∇S(y)) ρ^p reduces to -i Σ_{l,m} S_ml ∂_{ξ_l}[ξ_m ρ^p]
        let b = base(2);
        let p = -3;
        let a = b.xi_dot_grad_s(true).mul(&b.radial(p));
        let red = reduce_two_variable(&a, -20).unwrap();
        let mut want = Poly::new();
        for l in 0..2 {
            for m in 0..2 {
                let mut beta = vec![0, 0];
                beta[l] += 1;
                beta[m] += 1;
                let sml = b.jet_constant(&beta).unwrap();
                let inner = b.xi(m).mul(&b.radial(p)).d_xi(l).mul(&sml).scale(&-GaussRat::i());
                want = poly_add(&want, &inner.at_base_point());
            }
        }
        assert_eq!(red.poly(0, 0), want);
        // at ξ = 0 only the trace survives: -i (S_11 + S_22) R^p
        let rep = crate::symbol::parity_vanishing_check(&red);
        assert!(rep.odd_terms_vanish);
        let mut survivors: Vec<&str> = rep.terms.iter().filter(|t| t.survives).map(|t| t.value_at_zero.as_str()).collect();
        survivors.sort();
        assert_eq!(survivors, ["-1i·R^-3·S[0,2]", "-1i·R^-3·S[2,0]"]);
    }

    #[test]
    fn gradient_at_x_vanishes_at_base_point() {
        let b = base(1);
        let a = b.xi_dot_grad_s(false).mul(&b.radial(-1));
        assert_eq!(reduce_two_variable(&a, -10).unwrap().n_terms(), 0);
    }

    #[test]
    fn jet_limits() {
        let b = base(2);
        assert!(matches!(b.jet_constant(&[2, 1]), Err(Error::JetTooShallow { needed: 3, .. })));
        assert!(b.jet_constant(&[1, 0]).unwrap().is_zero());
        let mut a = b.clone();
        let mut m = Monomial::one(2);
        m.scalars.insert(Scalar::derivative("S", vec![3, 0]), 1);
        a.add_raw_term(vec![0, 0], vec![0, 0], m, GaussRat::one()).unwrap();
        assert!(matches!(reduce_two_variable(&a, 0), Err(Error::JetTooShallow { .. })));
    }

    #[test]
    fn s_difference_matches_numeric_jet() {
        let b = TwoVariableSymbol::constant(2, 3, GaussRat::one()).unwrap();
        let jet = |s: &Scalar| -> Option<f64> {
            Some(match s.deriv.as_slice() {
                [2, 0] => 1.5,
                [1, 1] => -0.5,
                [0, 2] => 2.0,
                [3, 0] => 0.25,
                [2, 1] => 0.0,
                [1, 2] => -1.0,
                [0, 3] => 0.5,
                _ => return None,
            })
        };
        let s = |x: f64, y: f64| {
            0.75 * x * x - 0.5 * x * y + y * y + 0.25 * x.powi(3) / 6.0 - 0.5 * x * y * y + 0.5 * y.powi(3) / 6.0
        };
        let (x, y) = ([0.3, -0.2], [0.1, 0.4]);
        let v = b.s_difference().eval(&x, &y, &[0.0, 0.0], 1.0, &jet).unwrap();
        assert!((v.re - (s(x[0], x[1]) - s(y[0], y[1]))).abs() < 1e-14);
    }
}
