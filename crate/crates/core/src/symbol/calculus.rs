use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;

use super::term::{add_raw, poly_add, poly_d_x, poly_d_xi, poly_mul, poly_mul_acc, poly_scale, Monomial, Poly, Scalar};
use super::{GaussRat, PolyhomSymbol};
use crate::error::{Error, Result};

/// Multi-indices of `dim` entries with `|α| <= max`, by increasing `|α|`.
pub(crate) fn multi_indices(dim: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0; dim]];
    let mut frontier = out.clone();
    for _ in 0..max {
        let mut next = Vec::new();
        for a in &frontier {
            // extend only at or after the last nonzero slot to avoid repeats
            let start = a.iter().rposition(|&v| v > 0).unwrap_or(0);
            for i in start..dim {
                let mut b = a.clone();
                b[i] += 1;
                next.push(b);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// `i^{|α|} / α!`.
fn alpha_coeff(alpha: &[u32]) -> GaussRat {
    let order: u32 = alpha.iter().sum();
    let fact: i64 = alpha.iter().map(|&a| (1..=a as i64).product::<i64>()).product();
    GaussRat::i_pow(order).scale(&BigRational::new(1.into(), fact.into()))
}

/// Caches `∂^α` of a matrix of polynomials, built one index at a time.
struct DerivativeCache<'a> {
    d: &'a dyn Fn(&Poly, usize) -> Poly,
    memo: BTreeMap<Vec<u32>, Vec<Poly>>,
}

impl<'a> DerivativeCache<'a> {
    fn new(base: Vec<Poly>, dim: usize, d: &'a dyn Fn(&Poly, usize) -> Poly) -> Self {
        Self {
            d,
            memo: BTreeMap::from([(vec![0; dim], base)]),
        }
    }

    /// Whether the underlying matrix is zero, so every derivative is too.
    fn is_empty(&self) -> bool {
        self.memo.values().next().is_some_and(|m| m.iter().all(Poly::is_empty))
    }

    fn get(&mut self, alpha: &[u32]) -> &Vec<Poly> {
        if !self.memo.contains_key(alpha) {
            let i = alpha.iter().position(|&v| v > 0).unwrap();
            let mut parent = alpha.to_vec();
            parent[i] -= 1;
            let d = self.d;
            let p: Vec<Poly> = self.get(&parent).iter().map(|q| d(q, i)).collect();
            self.memo.insert(alpha.to_vec(), p);
        }
        &self.memo[alpha]
    }
}

fn mat_mul(a: &[Poly], b: &[Poly], n: usize, m: usize, p: usize) -> Vec<Poly> {
    let mut out = vec![Poly::new(); n * p];
    for i in 0..n {
        for l in 0..p {
            for j in 0..m {
                let (x, y) = (&a[i * m + j], &b[j * p + l]);
                if x.is_empty() || y.is_empty() {
                    continue;
                }
                out[i * p + l] = poly_add(&out[i * p + l], &poly_mul(x, y));
            }
        }
    }
    out
}

/// `acc += c · a b` for row-major `n×m` and `m×p` matrices.
fn mat_mul_acc(acc: &mut [Poly], a: &[Poly], b: &[Poly], (n, m, p): (usize, usize, usize), c: &GaussRat) {
    for i in 0..n {
        for l in 0..p {
            for j in 0..m {
                let (x, y) = (&a[i * m + j], &b[j * p + l]);
                if !x.is_empty() && !y.is_empty() {
                    poly_mul_acc(&mut acc[i * p + l], x, y, c);
                }
            }
        }
    }
}

fn mat_add_scaled(acc: &mut [Poly], x: &[Poly], c: &GaussRat) {
    for (a, b) in acc.iter_mut().zip(x) {
        if !b.is_empty() {
            *a = poly_add(a, &poly_scale(b, c));
        }
    }
}

fn shift_offset(a: &PolyhomSymbol, b: &PolyhomSymbol) -> Result<i32> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "dimensions {} and {} differ",
            a.dim(),
            b.dim()
        )));
    }
    if a.shape().1 != b.shape().0 {
        return Err(Error::ShapeMismatch(format!(
            "cannot compose {:?} with {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let d: Vec<i32> = a.col_shift().iter().zip(b.row_shift()).map(|(x, y)| x - y).collect();
    if d.iter().any(|v| *v != d[0]) {
        return Err(Error::ShapeMismatch(
            "column shifts of the left factor must match row shifts of the right factor up to a constant".into(),
        ));
    }
    Ok(d[0])
}

/// Symbol of the composition, `Σ_α (i^{|α|}/α!) ∂_ξ^α a · ∂_x^α b`, kept down
/// to degree `cutoff` (shifted per entry for matrix symbols).
pub fn symbol_product(a: &PolyhomSymbol, b: &PolyhomSymbol, cutoff: i32) -> Result<PolyhomSymbol> {
    let delta = shift_offset(a, b)?;
    a.check_degrees()?;
    b.check_degrees()?;
    let order = a.order() + b.order() - delta;
    let grades = order - cutoff;
    if grades < 0 {
        return Err(Error::InvalidInput(format!(
            "cutoff {cutoff} lies above the product order {order}"
        )));
    }
    let known = match (a.known_grades(), b.known_grades()) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    };
    if let Some(g) = known {
        if grades > g {
            return Err(Error::CutoffTooLow {
                requested: cutoff,
                available: order - g,
            });
        }
    }
    // grade k of a and grade l of b meet under ∂^α only when k + l + |α| <= grades
    let dim = a.dim();
    let (n, m) = a.shape();
    let p = b.shape().1;
    let dxi = |q: &Poly, i: usize| poly_d_xi(q, i);
    let dx = |q: &Poly, i: usize| poly_d_x(q, i);
    let mut a_parts: Vec<DerivativeCache> = (0..=grades)
        .map(|k| DerivativeCache::new(a.grade(k), dim, &dxi))
        .collect();
    let mut b_parts: Vec<DerivativeCache> = (0..=grades)
        .map(|l| DerivativeCache::new(b.grade(l), dim, &dx))
        .collect();
    let mut acc = vec![Poly::new(); n * p];
    for alpha in multi_indices(dim, grades as u32) {
        let rest = grades - alpha.iter().sum::<u32>() as i32;
        let c = alpha_coeff(&alpha);
        for l in 0..=rest {
            if b_parts[l as usize].is_empty() {
                continue;
            }
            let bx = b_parts[l as usize].get(&alpha).clone();
            if bx.iter().all(Poly::is_empty) {
                continue;
            }
            for k in 0..=rest - l {
                let ax = a_parts[k as usize].get(&alpha);
                if !ax.iter().all(Poly::is_empty) {
                    mat_mul_acc(&mut acc, ax, &bx, (n, m, p), &c);
                }
            }
        }
    }
    Ok(PolyhomSymbol::from_polys(
        order,
        dim,
        a.row_shift().to_vec(),
        b.col_shift().to_vec(),
        acc,
        Some(cutoff),
    ))
}

/// Probe points `(ξ, R)` with `R > 0` for the ellipticity test.
fn probes(dim: usize) -> Vec<(Vec<f64>, f64)> {
    let generic: Vec<f64> = (0..dim).map(|i| 0.7 - 0.45 * i as f64).collect();
    let mut out = vec![(vec![0.0; dim], 1.0)];
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 3.0;
        out.push((e, 0.5));
    }
    out.push((generic.clone(), 1.0));
    out.push((generic.iter().map(|x| -x).collect(), 0.2));
    out.push((generic.iter().map(|x| 10.0 * x).collect(), 0.01));
    out
}

fn complex_det(mut m: Vec<Complex64>, n: usize) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x * n + col].norm().total_cmp(&m[y * n + col].norm()))
            .unwrap();
        if m[piv * n + col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        let d = m[col * n + col];
        det *= d;
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            for k in col..n {
                let v = m[col * n + k];
                m[r * n + k] -= f * v;
            }
        }
    }
    det
}

/// Exact inverse by Gauss–Jordan elimination.
fn invert_exact(c: &[GaussRat], n: usize) -> Option<Vec<GaussRat>> {
    let mut a = c.to_vec();
    let mut inv: Vec<GaussRat> = (0..n * n)
        .map(|k| if k / n == k % n { GaussRat::one() } else { GaussRat::zero() })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r * n + col].is_zero())?;
        for k in 0..n {
            a.swap(piv * n + k, col * n + k);
            inv.swap(piv * n + k, col * n + k);
        }
        let d = a[col * n + col].inv()?;
        for k in 0..n {
            a[col * n + k] = &a[col * n + k] * &d;
            inv[col * n + k] = &inv[col * n + k] * &d;
        }
        for r in 0..n {
            if r == col || a[r * n + col].is_zero() {
                continue;
            }
            let f = a[r * n + col].clone();
            for k in 0..n {
                a[r * n + k] = &a[r * n + k] - &(&f * &a[col * n + k]);
                inv[r * n + k] = &inv[r * n + k] - &(&f * &inv[col * n + k]);
            }
        }
    }
    Some(inv)
}

/// Inverse of the principal part, which must factor as
/// `diag(ρ^{r_i}) · C · diag(ρ^{-c_j}) · u` with a constant matrix `C` and a
/// monomial `u` in `ρ` and the formal scalars.
fn principal_inverse(a: &PolyhomSymbol) -> Result<Vec<Poly>> {
    let n = a.shape().0;
    let dim = a.dim();
    let principal = a.grade(0);
    let ones = |_: &Scalar| Some(1.0);
    for (xi, r) in probes(dim) {
        let vals: Vec<Complex64> = principal
            .iter()
            .map(|q| super::term::poly_eval(q, &xi, r, &ones))
            .collect::<Result<_>>()?;
        let scale: f64 = (0..n)
            .map(|i| (0..n).map(|j| vals[i * n + j].norm()).fold(0.0, f64::max))
            .product();
        let det = complex_det(vals, n);
        if !(det.norm() > 1e-10 * scale) {
            return Err(Error::NotElliptic(format!(
                "principal symbol is singular at ξ = {xi:?}, R = {r}"
            )));
        }
    }
    let (rs, cs) = (a.row_shift(), a.col_shift());
    let mut unit: Option<Monomial> = None;
    let mut c = vec![GaussRat::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let q = &principal[i * n + j];
            if q.is_empty() {
                continue;
            }
            let unsupported = || {
                Error::UnsupportedSymbol(
                    "principal symbol must be a constant matrix conjugated by powers of ρ, times one monomial in ρ and the scalars"
                        .into(),
                )
            };
            if q.len() != 1 {
                return Err(unsupported());
            }
            let (m, v) = q.iter().next().unwrap();
            if m.alpha.iter().any(|&x| x > 0) || m.k > 0 {
                return Err(unsupported());
            }
            let mut u = m.clone();
            u.p -= rs[i] - cs[j];
            match &unit {
                None => unit = Some(u),
                Some(prev) if *prev == u => {}
                Some(_) => return Err(unsupported()),
            }
            c[i * n + j] = v.clone();
        }
    }
    let unit = unit.ok_or_else(|| Error::NotElliptic("principal symbol is zero".into()))?;
    let cinv = invert_exact(&c, n)
        .ok_or_else(|| Error::NotElliptic("principal coefficient matrix is singular".into()))?;
    // b0[j][i] = ρ^{c_j - r_i} (C⁻¹)_{ji} / u
    let mut out = vec![Poly::new(); n * n];
    for j in 0..n {
        for i in 0..n {
            let mut m = Monomial::one(dim);
            m.p = cs[j] - rs[i] - unit.p;
            m.scalars = unit.scalars.iter().map(|(s, e)| (s.clone(), -e)).collect();
            add_raw(&mut out[j * n + i], m, cinv[j * n + i].clone());
        }
    }
    Ok(out)
}

/// Right parametrix `b` with `a ∘ b = 1` down to degree `cutoff`.
///
/// `b_{-s} = a_s^{-1}` and, for `j > 0`,
/// `b_{-s-j} = -a_s^{-1} Σ_{k+l+|α|=j, l<j} (i^{|α|}/α!) ∂_ξ^α a_{s-k} ∂_x^α b_{-s-l}`.
pub fn parametrix(a: &PolyhomSymbol, cutoff: i32) -> Result<PolyhomSymbol> {
    let (n, m) = a.shape();
    if n != m {
        return Err(Error::ShapeMismatch(format!("parametrix of a {n}x{m} symbol")));
    }
    a.check_degrees()?;
    let order = -a.order();
    let grades = order - cutoff;
    if grades < 0 {
        return Err(Error::InvalidInput(format!(
            "cutoff {cutoff} lies above the parametrix order {order}"
        )));
    }
    if let Some(g) = a.known_grades() {
        if grades > g {
            return Err(Error::CutoffTooLow {
                requested: cutoff,
                available: order - g,
            });
        }
    }
    let dim = a.dim();
    let b0 = principal_inverse(a)?;
    let dxi = |q: &Poly, i: usize| poly_d_xi(q, i);
    let mut a_parts: Vec<DerivativeCache> = (0..=grades)
        .map(|k| DerivativeCache::new(a.grade(k), dim, &dxi))
        .collect();
    let dx = |q: &Poly, i: usize| poly_d_x(q, i);
    let mut b_parts: Vec<DerivativeCache> = vec![DerivativeCache::new(b0.clone(), dim, &dx)];
    let alphas = multi_indices(dim, grades as u32);
    let minus_one = GaussRat::int(-1);
    for j in 1..=grades {
        let mut sum = vec![Poly::new(); n * n];
        for l in 0..j {
            for alpha in alphas.iter().filter(|al| al.iter().sum::<u32>() as i32 <= j - l) {
                let k = j - l - alpha.iter().sum::<u32>() as i32;
                let bx = b_parts[l as usize].get(alpha).clone();
                if bx.iter().all(Poly::is_empty) {
                    continue;
                }
                let ax = a_parts[k as usize].get(alpha);
                if ax.iter().all(Poly::is_empty) {
                    continue;
                }
                mat_mul_acc(&mut sum, ax, &bx, (n, n, n), &alpha_coeff(alpha));
            }
        }
        let mut bj = mat_mul(&b0, &sum, n, n, n);
        for q in &mut bj {
            *q = poly_scale(q, &minus_one);
        }
        b_parts.push(DerivativeCache::new(bj, dim, &dx));
    }
    let mut total = vec![Poly::new(); n * n];
    for part in &mut b_parts {
        let base = part.get(&vec![0; dim]).clone();
        mat_add_scaled(&mut total, &base, &GaussRat::one());
    }
    Ok(PolyhomSymbol::from_polys(
        order,
        dim,
        a.col_shift().to_vec(),
        a.row_shift().to_vec(),
        total,
        Some(cutoff),
    ))
}

/// True when every retained term of `s` matches the identity matrix.
pub fn is_identity(s: &PolyhomSymbol) -> bool {
    let (n, m) = s.shape();
    if n != m {
        return false;
    }
    let one = Monomial::one(s.dim());
    (0..n).all(|i| {
        (0..n).all(|j| {
            let e = s.entry(i, j);
            if i == j {
                e.len() == 1 && e[0].monomial == one && e[0].coeff.is_one() && e[0].degree == 0
            } else {
                e.is_empty()
            }
        })
    })
}
