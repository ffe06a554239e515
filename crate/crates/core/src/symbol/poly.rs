use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::term::{add_raw, add_term, format_monomial, Monomial, Poly, Scalar};
use super::GaussRat;
use crate::error::{Error, Result};

/// One homogeneous term: `coeff · ξ^α R^k ρ^p Π s^e` with a declared degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TermJson", into = "TermJson")]
pub struct Term {
    pub degree: i32,
    pub monomial: Monomial,
    pub coeff: GaussRat,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    degree: i32,
    alpha: Vec<u32>,
    #[serde(default)]
    k: u32,
    #[serde(default)]
    p: i32,
    coeff: GaussRat,
    #[serde(default)]
    scalars: BTreeMap<Scalar, i32>,
}

impl TryFrom<TermJson> for Term {
    type Error = Error;
    fn try_from(j: TermJson) -> Result<Self> {
        Ok(Term {
            degree: j.degree,
            monomial: Monomial {
                alpha: j.alpha,
                k: j.k,
                p: j.p,
                scalars: j.scalars.into_iter().filter(|(_, e)| *e != 0).collect(),
            },
            coeff: j.coeff,
        })
    }
}

impl From<Term> for TermJson {
    fn from(t: Term) -> Self {
        TermJson {
            degree: t.degree,
            alpha: t.monomial.alpha,
            k: t.monomial.k,
            p: t.monomial.p,
            coeff: t.coeff,
            scalars: t.monomial.scalars,
        }
    }
}

impl Term {
    /// Term whose declared degree is the true one.
    pub fn new(coeff: GaussRat, monomial: Monomial) -> Self {
        Self {
            degree: monomial.degree(),
            monomial,
            coeff,
        }
    }

    pub fn with_degree(degree: i32, coeff: GaussRat, monomial: Monomial) -> Self {
        Self {
            degree,
            monomial,
            coeff,
        }
    }

    /// `c · ξ^α R^k ρ^p` without scalars.
    pub fn plain(coeff: impl Into<GaussRat>, alpha: Vec<u32>, k: u32, p: i32) -> Self {
        Self::new(
            coeff.into(),
            Monomial {
                alpha,
                k,
                p,
                scalars: BTreeMap::new(),
            },
        )
    }

    /// Multiplies the term by `s^e`.
    pub fn times_scalar(mut self, s: &str, e: i32) -> Result<Self> {
        let s: Scalar = s.parse()?;
        super::term::mul_scalar(&mut self.monomial.scalars, &s, e);
        Ok(self)
    }

    pub fn display(&self) -> String {
        format!("{}·{}", self.coeff, format_monomial(&self.monomial))
    }
}

type TermMap = BTreeMap<(i32, Monomial), GaussRat>;

/// Finite truncation of a polyhomogeneous symbol in `(ξ, R)`, scalar or
/// matrix valued.
///
/// Entry `(i, j)` has order `order + row_shift[i] - col_shift[j]`. A cutoff of
/// `c` means entry `(i, j)` is known down to degree `c + row_shift[i] -
/// col_shift[j]`; `None` means the listed terms are the whole symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymbolJson", into = "SymbolJson")]
pub struct PolyhomSymbol {
    order: i32,
    dim: usize,
    cutoff: Option<i32>,
    rows: usize,
    cols: usize,
    row_shift: Vec<i32>,
    col_shift: Vec<i32>,
    entries: Vec<TermMap>,
}

#[derive(Serialize, Deserialize)]
struct SymbolJson {
    order: i32,
    dim: usize,
    #[serde(default)]
    cutoff: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    row_shift: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    col_shift: Option<Vec<i32>>,
    /// Scalar symbols only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    terms: Option<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<Vec<Vec<Term>>>>,
}

impl TryFrom<SymbolJson> for PolyhomSymbol {
    type Error = Error;
    fn try_from(j: SymbolJson) -> Result<Self> {
        match (j.terms, j.entries) {
            (Some(terms), None) => {
                if j.shape.is_some_and(|s| s != [1, 1]) {
                    return Err(Error::ShapeMismatch("`terms` is for scalar symbols".into()));
                }
                PolyhomSymbol::scalar(j.order, j.dim, terms, j.cutoff)
            }
            (None, Some(rows)) => {
                let nr = rows.len();
                let nc = rows.first().map_or(0, Vec::len);
                if j.shape.is_some_and(|s| s != [nr, nc]) {
                    return Err(Error::ShapeMismatch("`shape` disagrees with `entries`".into()));
                }
                let row_shift = j.row_shift.unwrap_or_else(|| vec![0; nr]);
                let col_shift = j.col_shift.unwrap_or_else(|| vec![0; nc]);
                PolyhomSymbol::matrix(j.order, j.dim, row_shift, col_shift, rows, j.cutoff)
            }
            _ => Err(Error::InvalidInput("symbol needs exactly one of `terms` or `entries`".into())),
        }
    }
}

impl From<PolyhomSymbol> for SymbolJson {
    fn from(s: PolyhomSymbol) -> Self {
        let scalar = s.is_scalar() && s.row_shift == [0] && s.col_shift == [0];
        let entries: Vec<Vec<Vec<Term>>> = (0..s.rows)
            .map(|i| (0..s.cols).map(|j| s.entry(i, j)).collect())
            .collect();
        SymbolJson {
            order: s.order,
            dim: s.dim,
            cutoff: s.cutoff,
            shape: (!scalar).then_some([s.rows, s.cols]),
            row_shift: (!scalar).then(|| s.row_shift.clone()),
            col_shift: (!scalar).then(|| s.col_shift.clone()),
            terms: scalar.then(|| s.entry(0, 0)),
            entries: (!scalar).then_some(entries),
        }
    }
}

impl PolyhomSymbol {
    pub fn scalar(order: i32, dim: usize, terms: Vec<Term>, cutoff: Option<i32>) -> Result<Self> {
        Self::matrix(order, dim, vec![0], vec![0], vec![vec![terms]], cutoff)
    }

    /// Matrix symbol from row-major entries.
    pub fn matrix(
        order: i32,
        dim: usize,
        row_shift: Vec<i32>,
        col_shift: Vec<i32>,
        entries: Vec<Vec<Vec<Term>>>,
        cutoff: Option<i32>,
    ) -> Result<Self> {
        let rows = row_shift.len();
        let cols = col_shift.len();
        if rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch("empty matrix symbol".into()));
        }
        if entries.len() != rows || entries.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch(format!(
                "entries do not form a {rows}x{cols} matrix"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if let Some(c) = cutoff {
            if c > order {
                return Err(Error::InvalidInput(format!("cutoff {c} above order {order}")));
            }
        }
        let mut s = Self {
            order,
            dim,
            cutoff,
            rows,
            cols,
            row_shift,
            col_shift,
            entries: vec![TermMap::new(); rows * cols],
        };
        for (i, row) in entries.into_iter().enumerate() {
            for (j, terms) in row.into_iter().enumerate() {
                let hi = s.entry_order(i, j);
                for t in terms {
                    if t.monomial.alpha.len() != dim {
                        return Err(Error::ShapeMismatch(format!(
                            "term `{}` has {} ξ indices, expected {dim}",
                            t.display(),
                            t.monomial.alpha.len()
                        )));
                    }
                    if t.degree > hi {
                        return Err(Error::InvalidInput(format!(
                            "term `{}` of degree {} exceeds entry order {hi}",
                            t.display(),
                            t.degree
                        )));
                    }
                    if let Some(c) = cutoff {
                        let lo = c + s.row_shift[i] - s.col_shift[j];
                        if t.degree < lo {
                            return Err(Error::InvalidInput(format!(
                                "term `{}` of degree {} lies below the cutoff",
                                t.display(),
                                t.degree
                            )));
                        }
                    }
                    let mut m = t.monomial;
                    m.scalars = m
                        .scalars
                        .iter()
                        .map(|(k, e)| Ok((k.padded(dim)?, *e)))
                        .collect::<Result<_>>()?;
                    let mut norm = Poly::new();
                    add_term(&mut norm, m, t.coeff);
                    let slot = &mut s.entries[i * cols + j];
                    for (m, c) in norm {
                        add_keyed(slot, (t.degree, m), c);
                    }
                }
            }
        }
        Ok(s)
    }

    /// Builds a symbol whose entries are polynomials of true degree; terms
    /// outside `[cutoff, order]` (shifted per entry) are dropped.
    pub(crate) fn from_polys(
        order: i32,
        dim: usize,
        row_shift: Vec<i32>,
        col_shift: Vec<i32>,
        polys: Vec<Poly>,
        cutoff: Option<i32>,
    ) -> Self {
        let rows = row_shift.len();
        let cols = col_shift.len();
        let mut entries = vec![TermMap::new(); rows * cols];
        for (idx, poly) in polys.into_iter().enumerate() {
            let shift = row_shift[idx / cols] - col_shift[idx % cols];
            for (m, c) in poly {
                let d = m.degree();
                if d > order + shift || cutoff.is_some_and(|lo| d < lo + shift) {
                    continue;
                }
                add_keyed(&mut entries[idx], (d, m), c);
            }
        }
        Self {
            order,
            dim,
            cutoff,
            rows,
            cols,
            row_shift,
            col_shift,
            entries,
        }
    }

    pub fn identity(n: usize, dim: usize) -> Self {
        let polys = (0..n * n)
            .map(|idx| {
                let mut p = Poly::new();
                if idx / n == idx % n {
                    add_raw(&mut p, Monomial::one(dim), GaussRat::one());
                }
                p
            })
            .collect();
        Self::from_polys(0, dim, vec![0; n], vec![0; n], polys, None)
    }

    /// `ρ^p`.
    pub fn radial(dim: usize, p: i32) -> Self {
        let mut m = Monomial::one(dim);
        m.p = p;
        let mut poly = Poly::new();
        add_raw(&mut poly, m, GaussRat::one());
        Self::from_polys(p, dim, vec![0], vec![0], vec![poly], None)
    }

    /// `diag(ρ^{sign·j})_{j < size}`, order 0 with the degrees carried by the
    /// shifts.
    fn radial_diag(dim: usize, size: usize, sign: i32) -> Self {
        let polys = (0..size * size)
            .map(|idx| {
                let mut p = Poly::new();
                let (i, j) = (idx / size, idx % size);
                if i == j {
                    let mut m = Monomial::one(dim);
                    m.p = sign * i as i32;
                    add_raw(&mut p, m, GaussRat::one());
                }
                p
            })
            .collect();
        let shifts: Vec<i32> = (0..size as i32).collect();
        let (r, c) = if sign > 0 {
            (shifts, vec![0; size])
        } else {
            (vec![0; size], shifts)
        };
        Self::from_polys(0, dim, r, c, polys, None)
    }

    /// The diagonal matrix `diag(ρ^j)_{j < size}`.
    pub fn radial_diagonal(dim: usize, size: usize) -> Self {
        Self::radial_diag(dim, size, 1)
    }

    /// `diag(ρ^{-j})_{j < size}`.
    pub fn radial_diagonal_inverse(dim: usize, size: usize) -> Self {
        Self::radial_diag(dim, size, -1)
    }

    /// Constant matrix of order 0.
    pub fn constant(dim: usize, c: &[Vec<GaussRat>]) -> Result<Self> {
        let rows = c.len();
        let cols = c.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || c.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("constant matrix is not rectangular".into()));
        }
        let polys = c
            .iter()
            .flatten()
            .map(|v| {
                let mut p = Poly::new();
                add_raw(&mut p, Monomial::one(dim), v.clone());
                p
            })
            .collect();
        Ok(Self::from_polys(0, dim, vec![0; rows], vec![0; cols], polys, None))
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> Option<i32> {
        self.cutoff
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    pub fn row_shift(&self) -> &[i32] {
        &self.row_shift
    }

    pub fn col_shift(&self) -> &[i32] {
        &self.col_shift
    }

    pub fn entry_order(&self, i: usize, j: usize) -> i32 {
        self.order + self.row_shift[i] - self.col_shift[j]
    }

    /// Highest grade (`order - degree`, shift adjusted) the symbol determines.
    pub fn known_grades(&self) -> Option<i32> {
        self.cutoff.map(|c| self.order - c)
    }

    /// Terms of entry `(i, j)` in canonical order.
    pub fn entry(&self, i: usize, j: usize) -> Vec<Term> {
        self.entries[i * self.cols + j]
            .iter()
            .map(|((d, m), c)| Term::with_degree(*d, c.clone(), m.clone()))
            .collect()
    }

    /// All terms with their entry positions.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, Term)> + '_ {
        (0..self.rows * self.cols).flat_map(move |idx| {
            self.entries[idx]
                .iter()
                .map(move |((d, m), c)| (idx / self.cols, idx % self.cols, Term::with_degree(*d, c.clone(), m.clone())))
        })
    }

    pub fn n_terms(&self) -> usize {
        self.entries.iter().map(BTreeMap::len).sum()
    }

    /// Fails on the first term whose declared degree is not its true degree.
    pub fn check_degrees(&self) -> Result<()> {
        for (i, j, t) in self.terms() {
            if t.degree != t.monomial.degree() {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}): term `{}` declared degree {} but has degree {}",
                    t.display(),
                    t.degree,
                    t.monomial.degree()
                )));
            }
        }
        Ok(())
    }

    /// Entry `(i, j)` as a polynomial.
    #[cfg(test)]
    pub(crate) fn poly(&self, i: usize, j: usize) -> Poly {
        let mut p = Poly::new();
        for ((_, m), c) in &self.entries[i * self.cols + j] {
            add_raw(&mut p, m.clone(), c.clone());
        }
        p
    }

    /// Entries of grade `g`: degree `entry_order(i, j) - g`.
    pub(crate) fn grade(&self, g: i32) -> Vec<Poly> {
        (0..self.rows * self.cols)
            .map(|idx| {
                let target = self.entry_order(idx / self.cols, idx % self.cols) - g;
                self.entries[idx]
                    .iter()
                    .filter(|((d, _), _)| *d == target)
                    .map(|((_, m), c)| (m.clone(), c.clone()))
                    .collect()
            })
            .collect()
    }

    /// Drops terms below a new, higher cutoff.
    pub fn truncate(&self, cutoff: i32) -> Result<Self> {
        if let Some(c) = self.cutoff {
            if cutoff < c {
                return Err(Error::CutoffTooLow {
                    requested: cutoff,
                    available: c,
                });
            }
        }
        let mut s = self.clone();
        s.cutoff = Some(cutoff);
        for idx in 0..s.rows * s.cols {
            let lo = cutoff + s.row_shift[idx / s.cols] - s.col_shift[idx % s.cols];
            s.entries[idx].retain(|(d, _), _| *d >= lo);
        }
        Ok(s)
    }

    /// Entrywise sum; the result is known down to the higher of the cutoffs.
    pub fn add(&self, o: &Self) -> Result<Self> {
        if (self.order, self.dim, &self.row_shift, &self.col_shift)
            != (o.order, o.dim, &o.row_shift, &o.col_shift)
        {
            return Err(Error::ShapeMismatch(
                "sum needs equal order, dimension and shifts".into(),
            ));
        }
        let cutoff = match (self.cutoff, o.cutoff) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let mut s = self.clone();
        for (slot, other) in s.entries.iter_mut().zip(&o.entries) {
            for (k, c) in other {
                add_keyed(slot, k.clone(), c.clone());
            }
        }
        Ok(match cutoff {
            Some(c) => {
                s.cutoff = None;
                s.truncate(c)?
            }
            None => s,
        })
    }

    pub fn neg(&self) -> Self {
        let mut s = self.clone();
        for e in &mut s.entries {
            for c in e.values_mut() {
                *c = -&*c;
            }
        }
        s
    }

    /// Numerical value at `(ξ, R)` as a row-major matrix.
    pub fn eval(
        &self,
        xi: &[f64],
        r: f64,
        scalar: &dyn Fn(&Scalar) -> Option<f64>,
    ) -> Result<Vec<Complex64>> {
        if xi.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "ξ has {} components, symbol dimension is {}",
                xi.len(),
                self.dim
            )));
        }
        let mut out = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let mut v = Complex64::new(0.0, 0.0);
            for ((_, m), c) in e {
                v += c.to_complex() * m.eval(xi, r, scalar)?;
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Every formal scalar the symbol references.
    pub fn scalars(&self) -> Vec<Scalar> {
        let mut all: Vec<Scalar> = self
            .entries
            .iter()
            .flat_map(|e| e.keys().flat_map(|(_, m)| m.scalars.keys().cloned()))
            .collect();
        all.sort();
        all.dedup();
        all
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn add_keyed(map: &mut TermMap, k: (i32, Monomial), c: GaussRat) {
    if c.is_zero() {
        return;
    }
    match map.get_mut(&k) {
        Some(slot) => {
            *slot += &c;
            if slot.is_zero() {
                map.remove(&k);
            }
        }
        None => {
            map.insert(k, c);
        }
    }
}

/// Scaling diagnostic for one term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityDiagnostic {
    pub row: usize,
    pub col: usize,
    pub term: String,
    pub declared: i32,
    /// `log2 |a(2ξ, 2R) / a(ξ, R)|`.
    pub measured: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub terms: Vec<HomogeneityDiagnostic>,
    pub all_pass: bool,
}

/// Relative tolerance on `a(tξ, tR) = t^d a(ξ, R)`.
const HOMOGENEITY_TOL: f64 = 1e-12;

/// Per-term scaling test at a generic probe point with `t = 2`.
pub fn homogeneity_check(sym: &PolyhomSymbol) -> HomogeneityReport {
    let xi: Vec<f64> = (0..sym.dim).map(|i| 0.37 + 0.21 * i as f64).collect();
    let r = 0.83;
    let t = 2.0f64;
    let txi: Vec<f64> = xi.iter().map(|x| t * x).collect();
    // scalars do not depend on (ξ, R); any nonzero value works
    let one = |_: &Scalar| Some(1.0);
    let terms: Vec<HomogeneityDiagnostic> = sym
        .terms()
        .map(|(row, col, term)| {
            let v1 = term.monomial.eval(&xi, r, &one).unwrap_or(f64::NAN);
            let v2 = term.monomial.eval(&txi, t * r, &one).unwrap_or(f64::NAN);
            let measured = (v2 / v1).abs().log2();
            let expect = t.powi(term.degree) * v1;
            let pass = (v2 - expect).abs() <= HOMOGENEITY_TOL * v2.abs();
            HomogeneityDiagnostic {
                row,
                col,
                term: term.display(),
                declared: term.degree,
                measured,
                pass,
            }
        })
        .collect();
    let all_pass = terms.iter().all(|d| d.pass);
    HomogeneityReport { terms, all_pass }
}
