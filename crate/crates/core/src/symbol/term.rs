use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GaussRat;
use crate::error::{Error, Result};

/// A formal function of `x`, optionally differentiated: `f`, `f[1,0]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scalar {
    pub name: String,
    /// x-derivative multi-index: empty for the function itself, otherwise
    /// one entry per coordinate.
    pub deriv: Vec<u32>,
}

impl Scalar {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            deriv: Vec::new(),
        }
    }

    pub fn derivative(name: &str, deriv: Vec<u32>) -> Self {
        let deriv = if deriv.iter().all(|&d| d == 0) { Vec::new() } else { deriv };
        Self {
            name: name.to_string(),
            deriv,
        }
    }

    /// Pads the multi-index to `dim` entries.
    pub(crate) fn padded(&self, dim: usize) -> Result<Self> {
        if self.deriv.len() > dim {
            return Err(Error::InvalidInput(format!("scalar `{self}` has more than {dim} indices")));
        }
        let mut s = self.clone();
        if !s.deriv.is_empty() {
            s.deriv.resize(dim, 0);
        }
        Ok(s)
    }

    pub fn order(&self) -> u32 {
        self.deriv.iter().sum()
    }

    /// `∂_{x_j}` of this scalar in `dim` coordinates.
    pub fn differentiated(&self, j: usize, dim: usize) -> Self {
        let mut d = self.deriv.clone();
        d.resize(dim.max(j + 1), 0);
        d[j] += 1;
        Self {
            name: self.name.clone(),
            deriv: d,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.deriv.is_empty() {
            return f.write_str(&self.name);
        }
        let idx: Vec<String> = self.deriv.iter().map(u32::to_string).collect();
        write!(f, "{}[{}]", self.name, idx.join(","))
    }
}

impl FromStr for Scalar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad scalar name `{s}`"));
        let (name, deriv) = match s.split_once('[') {
            None => (s, Vec::new()),
            Some((name, rest)) => {
                let inner = rest.strip_suffix(']').ok_or_else(bad)?;
                let d = inner
                    .split(',')
                    .map(|t| t.trim().parse::<u32>().map_err(|_| bad()))
                    .collect::<Result<Vec<u32>>>()?;
                (name, d)
            }
        };
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(bad());
        }
        Ok(Scalar::derivative(name, deriv))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// `ξ^α R^k ρ^p Π s^e` with `ρ = (R² + |ξ|²)^{1/2}`.
///
/// In normal form `k ∈ {0, 1}`: higher powers are rewritten through
/// `R² = ρ² - |ξ|²`, which makes the representation unique.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial {
    pub alpha: Vec<u32>,
    pub k: u32,
    pub p: i32,
    pub scalars: BTreeMap<Scalar, i32>,
}

impl Monomial {
    pub fn one(dim: usize) -> Self {
        Self {
            alpha: vec![0; dim],
            ..Default::default()
        }
    }

    /// Homogeneity degree in `(ξ, R)`.
    pub fn degree(&self) -> i32 {
        self.alpha.iter().sum::<u32>() as i32 + self.k as i32 + self.p
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn has_scalars(&self) -> bool {
        !self.scalars.is_empty()
    }

    /// Product without normalization.
    pub(crate) fn times(&self, o: &Monomial) -> Monomial {
        let mut m = self.clone();
        for (a, b) in m.alpha.iter_mut().zip(&o.alpha) {
            *a += b;
        }
        m.k += o.k;
        m.p += o.p;
        for (s, e) in &o.scalars {
            mul_scalar(&mut m.scalars, s, *e);
        }
        m
    }

    /// Value at `(ξ, R)` with the given scalar values.
    pub fn eval(&self, xi: &[f64], r: f64, scalar: &dyn Fn(&Scalar) -> Option<f64>) -> Result<f64> {
        let rho = (r * r + xi.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let mut v = r.powi(self.k as i32) * rho.powi(self.p);
        for (x, a) in xi.iter().zip(&self.alpha) {
            v *= x.powi(*a as i32);
        }
        for (s, e) in &self.scalars {
            let sv = scalar(s).ok_or_else(|| Error::UnboundScalar(s.to_string()))?;
            v *= sv.powi(*e);
        }
        Ok(v)
    }
}

pub(crate) fn mul_scalar(map: &mut BTreeMap<Scalar, i32>, s: &Scalar, e: i32) {
    let slot = map.entry(s.clone()).or_insert(0);
    *slot += e;
    if *slot == 0 {
        map.remove(s);
    }
}

/// Exact sum of monomials.
pub type Poly = BTreeMap<Monomial, GaussRat>;

pub(crate) fn add_raw(out: &mut Poly, m: Monomial, c: GaussRat) {
    if c.is_zero() {
        return;
    }
    match out.get_mut(&m) {
        Some(slot) => {
            *slot += &c;
            if slot.is_zero() {
                out.remove(&m);
            }
        }
        None => {
            out.insert(m, c);
        }
    }
}

/// Adds `c·m` after rewriting `R^k`, `k >= 2`, as `(ρ² - |ξ|²) R^{k-2}`.
pub fn add_term(out: &mut Poly, m: Monomial, c: GaussRat) {
    if m.k < 2 {
        add_raw(out, m, c);
        return;
    }
    let mut lower = m;
    lower.k -= 2;
    let mut with_rho = lower.clone();
    with_rho.p += 2;
    add_term(out, with_rho, c.clone());
    for i in 0..lower.alpha.len() {
        let mut t = lower.clone();
        t.alpha[i] += 2;
        add_term(out, t, -&c);
    }
}

pub fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = a.clone();
    for (m, c) in b {
        add_raw(&mut out, m.clone(), c.clone());
    }
    out
}

pub fn poly_scale(a: &Poly, c: &GaussRat) -> Poly {
    let mut out = Poly::new();
    for (m, v) in a {
        add_raw(&mut out, m.clone(), v * c);
    }
    out
}

pub fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    poly_mul_acc(&mut out, a, b, &GaussRat::one());
    out
}

/// `out += c · a · b` in place.
pub(crate) fn poly_mul_acc(out: &mut Poly, a: &Poly, b: &Poly, c: &GaussRat) {
    for (ma, ca) in a {
        let cac = if c.is_one() { ca.clone() } else { ca * c };
        for (mb, cb) in b {
            add_term(out, ma.times(mb), &cac * cb);
        }
    }
}

/// `∂/∂ξ_i`, using `∂ρ/∂ξ_i = ξ_i/ρ`.
pub fn poly_d_xi(a: &Poly, i: usize) -> Poly {
    let mut out = Poly::new();
    for (m, c) in a {
        if m.alpha[i] > 0 {
            let mut t = m.clone();
            t.alpha[i] -= 1;
            add_raw(&mut out, t, c * &GaussRat::int(m.alpha[i] as i64));
        }
        if m.p != 0 {
            let mut t = m.clone();
            t.alpha[i] += 1;
            t.p -= 2;
            add_raw(&mut out, t, c * &GaussRat::int(m.p as i64));
        }
    }
    out
}

/// `∂/∂x_j`, acting on the formal scalars only.
pub fn poly_d_x(a: &Poly, j: usize) -> Poly {
    let mut out = Poly::new();
    for (m, c) in a {
        for (s, &e) in &m.scalars {
            let mut t = m.clone();
            mul_scalar(&mut t.scalars, s, -1);
            mul_scalar(&mut t.scalars, &s.differentiated(j, m.dim()), 1);
            add_raw(&mut out, t, c * &GaussRat::int(e as i64));
        }
    }
    out
}

pub fn poly_eval(
    a: &Poly,
    xi: &[f64],
    r: f64,
    scalar: &dyn Fn(&Scalar) -> Option<f64>,
) -> Result<Complex64> {
    let mut v = Complex64::new(0.0, 0.0);
    for (m, c) in a {
        v += c.to_complex() * m.eval(xi, r, scalar)?;
    }
    Ok(v)
}

/// Symbolic rendering such as `3/2·xi1^2·R·rho^-1·f[1]`.
pub fn format_monomial(m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (i, a) in m.alpha.iter().enumerate() {
        match a {
            0 => {}
            1 => parts.push(format!("xi{}", i + 1)),
            _ => parts.push(format!("xi{}^{a}", i + 1)),
        }
    }
    match m.k {
        0 => {}
        1 => parts.push("R".into()),
        k => parts.push(format!("R^{k}")),
    }
    match m.p {
        0 => {}
        1 => parts.push("rho".into()),
        p => parts.push(format!("rho^{p}")),
    }
    for (s, e) in &m.scalars {
        if *e == 1 {
            parts.push(s.to_string());
        } else {
            parts.push(format!("{s}^{e}"));
        }
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("·")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(alpha: Vec<u32>, k: u32, p: i32) -> Monomial {
        Monomial {
            alpha,
            k,
            p,
            scalars: BTreeMap::new(),
        }
    }

    fn single(m: Monomial) -> Poly {
        let mut p = Poly::new();
        add_term(&mut p, m, GaussRat::one());
        p
    }

    #[test]
    fn r_squared_plus_xi_squared_is_rho_squared() {
        let mut p = single(mono(vec![0, 0], 2, 0));
        add_term(&mut p, mono(vec![2, 0], 0, 0), GaussRat::one());
        add_term(&mut p, mono(vec![0, 2], 0, 0), GaussRat::one());
        assert_eq!(p, single(mono(vec![0, 0], 0, 2)));
    }

    #[test]
    fn normal_form_preserves_values() {
        let p = single(mono(vec![1, 0], 5, -3));
        let none = |_: &Scalar| None;
        let v = poly_eval(&p, &[0.3, -0.7], 1.3, &none).unwrap();
        let direct = 0.3 * 1.3f64.powi(5) * (1.69f64 + 0.09 + 0.49).powf(-1.5);
        assert!((v.re - direct).abs() < 1e-12 * direct.abs());
        assert!(p.keys().all(|m| m.k < 2 && m.degree() == 3));
    }

    #[test]
    fn xi_derivative_of_rho() {
        // ∂ρ^p/∂ξ_1 = p ξ_1 ρ^{p-2}
        let d = poly_d_xi(&single(mono(vec![0], 0, 3)), 0);
        assert_eq!(d.len(), 1);
        let (m, c) = d.iter().next().unwrap();
        assert_eq!((m.alpha[0], m.p), (1, 1));
        assert_eq!(c, &GaussRat::int(3));
    }

    #[test]
    fn x_derivative_follows_chain_rule() {
        let mut m = Monomial::one(1);
        m.scalars.insert(Scalar::new("f"), -2);
        let d = poly_d_x(&single(m), 0);
        let (m, c) = d.iter().next().unwrap();
        assert_eq!(c, &GaussRat::int(-2));
        assert_eq!(m.scalars[&Scalar::new("f")], -3);
        assert_eq!(m.scalars[&"f[1]".parse::<Scalar>().unwrap()], 1);
    }

    #[test]
    fn scalar_names_round_trip() {
        for s in ["f", "S[2,0]", "kappa_1[0,3]"] {
            assert_eq!(s.parse::<Scalar>().unwrap().to_string(), s);
        }
        assert_eq!("g[0,0]".parse::<Scalar>().unwrap(), Scalar::new("g"));
        assert!("f[x]".parse::<Scalar>().is_err());
    }
}
