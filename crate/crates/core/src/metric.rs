//! Magnitude of finite metric spaces.
//!
//! A weighting of a finite space at scale `R` is a vector `w` with
//! `Σ_y exp(-R d(x,y)) w(y) = 1` for every point `x`; the magnitude is `Σ w`.
//! For Euclidean point sets the similarity matrix is positive definite, so
//! the weighting is obtained from a Cholesky factorization of the exact
//! kernel. Nothing is regularized: a factorization that fails, or a matrix
//! whose condition estimate exceeds [`CONDITION_LIMIT`], is reported as an
//! error.

use std::io::{Read, Write};
use std::path::Path;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt;
use faer::{MatMut, MatRef};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Solves with a larger condition estimate are refused.
pub const CONDITION_LIMIT: f64 = 1e14;
/// Largest accepted `max_i |(Z w)_i - 1|`.
pub const RESIDUAL_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone)]
enum Storage {
    /// Row-major symmetric matrix.
    Matrix(Vec<f64>),
    /// Euclidean points, `dim` coordinates each, distances computed on demand.
    Points { dim: usize, coords: Vec<f64> },
}

/// A finite metric space: labelled points and a symmetric distance matrix.
///
/// Point clouds are stored by coordinates so that large samples do not
/// materialize an `N x N` distance matrix next to the similarity matrix.
#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    storage: Storage,
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

impl FiniteMetricSpace {
    /// Builds a space from an explicit distance matrix.
    ///
    /// The matrix must be square, symmetric (to 1e-12 relative), with zero
    /// diagonal and strictly positive off-diagonal entries. The triangle
    /// inequality is not checked here; see [`Self::check_triangle_inequality`].
    pub fn from_distance_matrix(labels: Option<Vec<String>>, dist: &[Vec<f64>]) -> Result<Self> {
        let n = dist.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty distance matrix".into()));
        }
        let labels = labels.unwrap_or_else(|| default_labels(n));
        if labels.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} labels for a {n}x{n} matrix",
                labels.len()
            )));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if !a.is_finite() || !b.is_finite() || a < 0.0 || b < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "distance ({i},{j}) must be finite and nonnegative"
                    )));
                }
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
                    return Err(Error::InvalidInput(format!("asymmetric entry ({i},{j})")));
                }
                if a == 0.0 {
                    return Err(Error::DuplicatePoints(i, j));
                }
                // store the exact mirror so the kernel is exactly symmetric
                data[j * n + i] = a;
            }
        }
        Ok(Self {
            labels,
            storage: Storage::Matrix(data),
        })
    }

    /// Builds a Euclidean space from points given as rows of equal length.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let dim = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.as_ref().len() != dim {
                return Err(Error::InvalidInput(format!("point {i} has wrong dimension")));
            }
            coords.extend_from_slice(p.as_ref());
        }
        Self::from_coords(dim, coords)
    }

    /// Builds a Euclidean space from flat row-major coordinates.
    pub fn from_coords(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidInput(
                "point coordinates must be a nonempty multiple of the dimension".into(),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        let n = coords.len() / dim;
        let space = Self {
            labels: default_labels(n),
            storage: Storage::Points { dim, coords },
        };
        // O(N^2) duplicate scan, cheap next to the O(N^3) solve
        let dup = (0..n).into_par_iter().find_map_any(|i| {
            ((i + 1)..n)
                .find(|&j| space.dist(i, j) == 0.0)
                .map(|j| (i, j))
        });
        if let Some((i, j)) = dup {
            return Err(Error::DuplicatePoints(i, j));
        }
        Ok(space)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::InvalidInput("label count mismatch".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Point coordinates when the space is a Euclidean point cloud.
    pub fn points(&self) -> Option<(usize, &[f64])> {
        match &self.storage {
            Storage::Points { dim, coords } => Some((*dim, coords)),
            Storage::Matrix(_) => None,
        }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Matrix(d) => d[i * self.len() + j],
            Storage::Points { dim, coords } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    /// The same points with every distance multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {s}")));
        }
        let storage = match &self.storage {
            Storage::Matrix(d) => Storage::Matrix(d.iter().map(|x| x * s).collect()),
            Storage::Points { dim, coords } => Storage::Points {
                dim: *dim,
                coords: coords.iter().map(|x| x * s).collect(),
            },
        };
        Ok(Self {
            labels: self.labels.clone(),
            storage,
        })
    }

    /// The subspace on the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() || indices.iter().any(|&i| i >= self.len()) {
            return Err(Error::InvalidInput("subset indices out of range".into()));
        }
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        let storage = match &self.storage {
            Storage::Matrix(_) => {
                let m = indices.len();
                let mut d = vec![0.0; m * m];
                for (a, &i) in indices.iter().enumerate() {
                    for (b, &j) in indices.iter().enumerate() {
                        d[a * m + b] = self.dist(i, j);
                    }
                }
                Storage::Matrix(d)
            }
            Storage::Points { dim, coords } => Storage::Points {
                dim: *dim,
                coords: indices
                    .iter()
                    .flat_map(|&i| coords[i * dim..(i + 1) * dim].iter().copied())
                    .collect(),
            },
        };
        let mut seen = std::collections::HashSet::new();
        if !indices.iter().all(|i| seen.insert(*i)) {
            return Err(Error::InvalidInput("subset indices repeat".into()));
        }
        Ok(Self { labels, storage })
    }

    /// Opt-in O(N^3) check of the triangle inequality, with relative slack `tol`.
    pub fn check_triangle_inequality(&self, tol: f64) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (ij, jk, ik) = (self.dist(i, j), self.dist(j, k), self.dist(i, k));
                    if ik > (ij + jk) * (1.0 + tol) {
                        return Err(Error::InvalidInput(format!(
                            "triangle inequality fails for ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Reads a point cloud from CSV with header `x,y,z` (or `x` for 1D).
    pub fn read_points_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        let dim = match names.as_slice() {
            ["x"] => 1,
            ["x", "y"] => 2,
            ["x", "y", "z"] => 3,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "point CSV header must be `x`, `x,y` or `x,y,z`, got `{}`",
                    names.join(",")
                )))
            }
        };
        let mut coords = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            for field in rec.iter() {
                coords.push(parse_f64(field)?);
            }
        }
        Self::from_coords(dim, coords)
    }

    pub fn read_points_file(path: &Path) -> Result<Self> {
        Self::read_points_csv(std::fs::File::open(path)?)
    }

    /// Reads a headerless square CSV distance matrix.
    pub fn read_distance_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.push(rec.iter().map(parse_f64).collect::<Result<Vec<_>>>()?);
        }
        Self::from_distance_matrix(None, &rows)
    }

    pub fn read_distance_file(path: &Path) -> Result<Self> {
        Self::read_distance_csv(std::fs::File::open(path)?)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("not a number: `{s}`")))
}

fn check_scale(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("scale R must be positive, got {r}")))
    }
}

/// Column-major `Z[i][j] = exp(-R d(i,j))`, filled column by column.
fn kernel_column_major(space: &FiniteMetricSpace, r: f64) -> Vec<f64> {
    let n = space.len();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
        for (i, z) in col.iter_mut().enumerate() {
            *z = if i == j { 1.0 } else { (-r * space.dist(i, j)).exp() };
        }
    });
    data
}

/// The similarity matrix `Z[i][j] = exp(-R d(i,j))` as nested rows.
pub fn similarity_matrix(space: &FiniteMetricSpace, r: f64) -> Result<Vec<Vec<f64>>> {
    check_scale(r)?;
    let n = space.len();
    let data = kernel_column_major(space, r);
    Ok((0..n)
        .map(|i| (0..n).map(|j| data[j * n + i]).collect())
        .collect())
}

/// A weighting together with the diagnostics of the solve that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightVector {
    pub w: Vec<f64>,
    /// `max_i |(Z w)_i - 1|`.
    pub residual: f64,
    /// `(max L_ii / min L_ii)^2` from the Cholesky factor; a lower bound on cond(Z).
    pub condition_estimate: f64,
}

impl WeightVector {
    pub fn magnitude(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// `1 - Z w`, recomputing kernel entries from the distances.
fn residual_vector(space: &FiniteMetricSpace, r: f64, w: &[f64]) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = w[i];
            for (j, wj) in w.iter().enumerate() {
                if j != i {
                    acc += (-r * space.dist(i, j)).exp() * wj;
                }
            }
            1.0 - acc
        })
        .collect()
}

fn solve_with_factor(factor: MatRef<'_, f64>, rhs: &mut [f64], par: faer::Par) {
    let n = rhs.len();
    let mut buf = MemBuffer::new(llt::solve::solve_in_place_scratch::<f64>(n, 1, par));
    let rhs_mat = MatMut::from_column_major_slice_mut(rhs, n, 1);
    llt::solve::solve_in_place(factor, rhs_mat, par, MemStack::new(&mut buf));
}

/// Solves `Z w = 1` for the weighting at scale `r`.
pub fn weighting(space: &FiniteMetricSpace, r: f64) -> Result<WeightVector> {
    check_scale(r)?;
    let n = space.len();
    let mut data = kernel_column_major(space, r);
    let par = faer::get_global_parallelism();

    let info = {
        let mat = MatMut::from_column_major_slice_mut(&mut data, n, n);
        let mut buf = MemBuffer::new(llt::factor::cholesky_in_place_scratch::<f64>(
            n,
            par,
            Default::default(),
        ));
        llt::factor::cholesky_in_place(
            mat,
            Default::default(),
            par,
            MemStack::new(&mut buf),
            Default::default(),
        )
    };
    if let Err(llt::factor::LltError::NonPositivePivot { index }) = info {
        return Err(Error::NotPositiveDefinite {
            pivot: index,
            condition: f64::INFINITY,
        });
    }

    let (lo, hi) = (0..n).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
        let d = data[i * n + i];
        (lo.min(d), hi.max(d))
    });
    let condition = (hi / lo).powi(2);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::IllConditioned {
            condition,
            limit: CONDITION_LIMIT,
        });
    }

    let factor = MatRef::from_column_major_slice(&data, n, n);
    let mut w = vec![1.0; n];
    solve_with_factor(factor, &mut w, par);
    let mut res = residual_vector(space, r, &w);
    let mut residual = res.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    // one step of iterative refinement on the exact kernel
    if residual > 1e-13 {
        solve_with_factor(factor, &mut res, par);
        let refined: Vec<f64> = w.iter().zip(&res).map(|(a, b)| a + b).collect();
        let res2 = residual_vector(space, r, &refined);
        let residual2 = res2.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if residual2 < residual {
            w = refined;
            residual = residual2;
        }
    }
    if !(residual <= RESIDUAL_LIMIT) {
        return Err(Error::ResidualTooLarge {
            residual,
            limit: RESIDUAL_LIMIT,
        });
    }
    Ok(WeightVector {
        w,
        residual,
        condition_estimate: condition,
    })
}

/// Magnitude of `space` at scale `r`: the sum of the weighting.
pub fn magnitude(space: &FiniteMetricSpace, r: f64) -> Result<f64> {
    weighting(space, r).map(|w| w.magnitude())
}

/// One point of a sampled magnitude function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeSample {
    #[serde(rename = "R")]
    pub r: f64,
    pub value: f64,
    pub n_points: usize,
    pub condition_estimate: f64,
    /// Set when the solve at this scale failed; `value` is NaN then.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

impl MagnitudeSample {
    pub fn failed(r: f64, n_points: usize, err: &Error) -> Self {
        Self {
            r,
            value: f64::NAN,
            n_points,
            condition_estimate: f64::NAN,
            failure: Some(err.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Sampled magnitude function `R -> Mag(X, R d)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeCurve {
    pub samples: Vec<MagnitudeSample>,
}

impl MagnitudeCurve {
    pub fn scales(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.r).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    /// Samples that did not fail.
    pub fn successful(&self) -> impl Iterator<Item = &MagnitudeSample> {
        self.samples.iter().filter(|s| s.is_ok())
    }

    /// Writes the curve as CSV with header `R,value,n_points,condition_estimate`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["R", "value", "n_points", "condition_estimate"])?;
        for s in &self.samples {
            w.write_record([
                format_float(s.r),
                format_float(s.value),
                s.n_points.to_string(),
                format_float(s.condition_estimate),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let value = parse_f64(field(1))?;
            samples.push(MagnitudeSample {
                r: parse_f64(field(0))?,
                value,
                n_points: field(2)
                    .parse()
                    .map_err(|_| Error::InvalidInput("bad n_points".into()))?,
                condition_estimate: parse_f64(field(3))?,
                failure: value.is_nan().then(|| "failed".to_string()),
            });
        }
        Ok(Self { samples })
    }
}

/// Shortest decimal that round-trips.
pub(crate) fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:?}")
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty R grid".into()));
    }
    for &r in grid {
        check_scale(r)?;
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("R grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Magnitude over a strictly increasing grid of scales. Failed solves are
/// recorded in their sample instead of aborting the batch.
pub fn magnitude_curve(space: &FiniteMetricSpace, grid: &[f64]) -> Result<MagnitudeCurve> {
    check_grid(grid)?;
    let samples = grid
        .iter()
        .map(|&r| match weighting(space, r) {
            Ok(w) => MagnitudeSample {
                r,
                value: w.magnitude(),
                n_points: space.len(),
                condition_estimate: w.condition_estimate,
                failure: None,
            },
            Err(e) => MagnitudeSample::failed(r, space.len(), &e),
        })
        .collect();
    Ok(MagnitudeCurve { samples })
}
