//! Lower-bound magnitude estimates for compact domains.
//!
//! The magnitude of a compact positive-definite space is the supremum of the
//! magnitudes of its finite subsets. Estimates here walk a ladder of nested
//! finite samples, so the sequence of values is nondecreasing and every value
//! is a certified lower bound. A Richardson extrapolation of the last two
//! levels is attached as advisory metadata only.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::metric::{self, FiniteMetricSpace, MagnitudeCurve, MagnitudeSample};

/// Final grid levels must satisfy `spacing * R <= MAX_GRID_SPACING_TIMES_R`.
pub const MAX_GRID_SPACING_TIMES_R: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Nested uniform lattices (interval: dyadic grids including endpoints).
    Grid,
    /// Greedy farthest-point order over a seeded candidate pool.
    FarthestPoint,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Self::Grid),
            "farthest_point" | "farthest-point" | "fps" => Ok(Self::FarthestPoint),
            _ => Err(Error::InvalidInput(format!("unknown strategy `{s}`"))),
        }
    }
}

/// Exact magnitude of a segment of the given length: `1 + length * R / 2`.
///
/// On the line the exterior problem has the explicit solution
/// `h = exp(-R dist(x, X))`, whose normal derivative is `-R` at both
/// endpoints; the boundary integral then contributes exactly `1`.
pub fn interval_magnitude_exact(length: f64, r: f64) -> f64 {
    1.0 + length * r / 2.0
}

/// A nested sample: points in insertion order plus the prefix sizes that
/// form the refinement levels.
#[derive(Debug, Clone)]
pub struct SampleLadder {
    dim: usize,
    coords: Vec<f64>,
    levels: Vec<usize>,
    /// Lattice spacing per level (grid strategy only).
    spacings: Vec<Option<f64>>,
}

impl SampleLadder {
    /// Builds the refinement ladder for `spec` with at most `n_max` points.
    pub fn new(spec: &DomainSpec, n_max: usize, strategy: Strategy, seed: u64) -> Result<Self> {
        spec.validate()?;
        if n_max == 0 {
            return Err(Error::InvalidInput("N_max must be at least 1".into()));
        }
        match (strategy, spec) {
            (Strategy::Grid, DomainSpec::Interval { length }) => Ok(interval_grid(*length, n_max)),
            (Strategy::Grid, DomainSpec::PointCloud { .. }) => Err(Error::UnsupportedDomain(
                "grid sampling of a point cloud".into(),
            )),
            (Strategy::Grid, _) => lattice_grid(spec, n_max),
            (Strategy::FarthestPoint, _) => farthest_point(spec, n_max, seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// The first `n` points as a metric space.
    pub fn prefix(&self, n: usize) -> Result<FiniteMetricSpace> {
        let n = n.min(self.len());
        FiniteMetricSpace::from_coords(self.dim, self.coords[..n * self.dim].to_vec())
    }
}

/// Doubling ladder `start, 2 start, 4 start, ...` capped at `n_max`.
fn doubling_levels(start: usize, n_max: usize, available: usize) -> Vec<usize> {
    let cap = n_max.min(available);
    let mut levels = Vec::new();
    let mut n = start.min(cap).max(1);
    while n <= cap {
        levels.push(n);
        if n == cap {
            break;
        }
        n *= 2;
    }
    if levels.is_empty() {
        levels.push(cap);
    }
    levels
}

fn interval_grid(length: f64, n_max: usize) -> SampleLadder {
    if n_max == 1 {
        return SampleLadder {
            dim: 1,
            coords: vec![length / 2.0],
            levels: vec![1],
            spacings: vec![None],
        };
    }
    // largest K with 2^K + 1 <= n_max
    let mut k_max = 0u32;
    while (1usize << (k_max + 1)) < n_max {
        k_max += 1;
    }
    let finest = 1usize << k_max;
    let mut order: Vec<usize> = (0..=finest).collect();
    let level_of = |i: usize| -> u32 {
        if i == 0 || i == finest {
            return 0;
        }
        k_max - i.trailing_zeros()
    };
    order.sort_by_key(|&i| (level_of(i), i));
    let coords = order
        .iter()
        .map(|&i| length * i as f64 / finest as f64)
        .collect();
    let levels: Vec<usize> = (0..=k_max).map(|k| (1usize << k) + 1).collect();
    let spacings = (0..=k_max)
        .map(|k| Some(length / (1u64 << k) as f64))
        .collect();
    SampleLadder {
        dim: 1,
        coords,
        levels,
        spacings,
    }
}

/// Exactly `n` uniformly spaced points on `[0, length]` (endpoints included).
fn interval_linspace(length: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![length / 2.0];
    }
    (0..n)
        .map(|i| length * i as f64 / (n - 1) as f64)
        .collect()
}

/// Lattice points `h Z^3` inside a 3D domain, integer coordinates returned.
fn lattice_points(spec: &DomainSpec, h: f64) -> Vec<[i64; 3]> {
    let ext = spec.half_extents().expect("3D domain");
    let m: Vec<i64> = ext.iter().map(|e| (e / h).floor() as i64 + 1).collect();
    let mut pts = Vec::new();
    for i in -m[0]..=m[0] {
        for j in -m[1]..=m[1] {
            for k in -m[2]..=m[2] {
                let p = [i as f64 * h, j as f64 * h, k as f64 * h];
                if spec.contains(&p) {
                    pts.push([i, j, k]);
                }
            }
        }
    }
    pts
}

fn lattice_grid(spec: &DomainSpec, n_max: usize) -> Result<SampleLadder> {
    let ext = spec
        .half_extents()
        .ok_or_else(|| Error::UnsupportedDomain(format!("grid sampling of {}", spec.name())))?;
    let h0 = ext.iter().cloned().fold(0.0, f64::max);
    // walk lattice levels until the next one would exceed the budget
    let mut k_max: i32 = -1;
    let mut counts = Vec::new();
    loop {
        let h = h0 / (1u64 << (k_max + 1)) as f64;
        let c = lattice_points(spec, h).len();
        if c > n_max || k_max >= 20 {
            break;
        }
        counts.push(c);
        k_max += 1;
    }
    let centroid_fallback = |spacing: Option<f64>| -> Result<SampleLadder> {
        // coarsest lattice exceeds the budget: the single point nearest the centroid
        let pts = lattice_points(spec, h0);
        let p = pts
            .iter()
            .min_by(|a, b| {
                let na: i64 = a.iter().map(|x| x * x).sum();
                let nb: i64 = b.iter().map(|x| x * x).sum();
                na.cmp(&nb)
            })
            .ok_or_else(|| Error::UnsupportedDomain("domain contains no lattice point".into()))?;
        Ok(SampleLadder {
            dim: 3,
            coords: p.iter().map(|&x| x as f64 * h0).collect(),
            levels: vec![1],
            spacings: vec![spacing],
        })
    };
    if k_max < 0 {
        return centroid_fallback(None);
    }
    let k_max = k_max as u32;
    let h = h0 / (1u64 << k_max) as f64;
    let finest = lattice_points(spec, h);
    let level_of = |p: &[i64; 3]| -> u32 {
        (0..=k_max)
            .find(|&k| {
                let step = 1i64 << (k_max - k);
                p.iter().all(|c| c % step == 0)
            })
            .unwrap_or(k_max)
    };
    let mut keyed: Vec<(u32, [i64; 3])> = finest.iter().map(|p| (level_of(p), *p)).collect();
    keyed.sort();
    let coords = keyed
        .iter()
        .flat_map(|(_, p)| p.iter().map(move |&x| x as f64 * h))
        .collect();
    let mut levels = Vec::new();
    let mut spacings = Vec::new();
    for (k, &c) in counts.iter().enumerate() {
        if c > 0 {
            levels.push(c);
            spacings.push(Some(h0 / (1u64 << k) as f64));
        }
    }
    if levels.is_empty() {
        return centroid_fallback(None);
    }
    Ok(SampleLadder {
        dim: 3,
        coords,
        levels,
        spacings,
    })
}

/// Seeded candidate pool: the centroid first, then boundary and interior points.
fn candidate_pool(spec: &DomainSpec, size: usize, seed: u64) -> Result<(usize, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec {
        DomainSpec::Interval { length } => {
            let mut pool = vec![length / 2.0, 0.0, *length];
            while pool.len() < size.max(3) {
                pool.push(rng.random::<f64>() * length);
            }
            Ok((1, pool))
        }
        DomainSpec::PointCloud { .. } => {
            let space = spec.load_point_cloud()?;
            let (dim, coords) = space
                .points()
                .ok_or_else(|| Error::InvalidInput("point cloud without coordinates".into()))?;
            Ok((dim, coords.to_vec()))
        }
        _ => {
            let ext = spec.half_extents().unwrap();
            let mut pool: Vec<f64> = spec.centroid();
            if !spec.contains(&pool) {
                pool.clear();
            }
            let n_boundary = size / 4;
            for _ in 0..n_boundary {
                let p = spec
                    .boundary_point(rng.random(), rng.random())
                    .expect("smooth 3D domain");
                pool.extend_from_slice(&p);
            }
            while pool.len() < 3 * size {
                let p = [
                    ext[0] * (2.0 * rng.random::<f64>() - 1.0),
                    ext[1] * (2.0 * rng.random::<f64>() - 1.0),
                    ext[2] * (2.0 * rng.random::<f64>() - 1.0),
                ];
                if spec.contains(&p) {
                    pool.extend_from_slice(&p);
                }
            }
            Ok((3, pool))
        }
    }
}

fn farthest_point(spec: &DomainSpec, n_max: usize, seed: u64) -> Result<SampleLadder> {
    let pool_size = (8 * n_max).max(1024);
    let (dim, pool) = candidate_pool(spec, pool_size, seed)?;
    let m = pool.len() / dim;
    let n = n_max.min(m);
    let centroid: Vec<f64> = match spec {
        DomainSpec::PointCloud { .. } => {
            let mut c = vec![0.0; dim];
            for p in pool.chunks(dim) {
                for (ci, pi) in c.iter_mut().zip(p) {
                    *ci += pi / m as f64;
                }
            }
            c
        }
        _ => spec.centroid(),
    };
    let d2 = |p: &[f64], q: &[f64]| -> f64 { p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum() };

    // first point: nearest to the centroid, lowest index on ties
    let first = (0..m)
        .map(|i| (d2(&pool[i * dim..(i + 1) * dim], &centroid), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .unwrap()
        .1;
    let mut chosen = vec![first];
    let mut min_d: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| d2(&pool[i * dim..(i + 1) * dim], &pool[first * dim..(first + 1) * dim]))
        .collect();
    while chosen.len() < n {
        // farthest candidate, lowest index on ties
        let (best_d, best) = min_d
            .par_iter()
            .enumerate()
            .map(|(i, &d)| (d, i))
            .reduce(
                || (f64::NEG_INFINITY, usize::MAX),
                |a, b| {
                    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                        b
                    } else {
                        a
                    }
                },
            );
        if best_d <= 0.0 {
            // pool exhausted (only duplicates left)
            break;
        }
        chosen.push(best);
        let q = pool[best * dim..(best + 1) * dim].to_vec();
        min_d.par_iter_mut().enumerate().for_each(|(i, md)| {
            let d = d2(&pool[i * dim..(i + 1) * dim], &q);
            if d < *md {
                *md = d;
            }
        });
    }
    let coords: Vec<f64> = chosen
        .iter()
        .flat_map(|&i| pool[i * dim..(i + 1) * dim].iter().copied())
        .collect();
    let start = if dim == 1 { 4 } else { 8 };
    let levels = doubling_levels(start, n_max, chosen.len());
    let spacings = vec![None; levels.len()];
    Ok(SampleLadder {
        dim,
        coords,
        levels,
        spacings,
    })
}

/// A finite sample of `n` points of the domain, deterministic given `seed`.
///
/// The interval grid returns exactly `n` evenly spaced points including both
/// endpoints. The 3D grid returns the finest nested lattice with at most `n`
/// points (at least the lattice point nearest the centroid).
pub fn sample_domain(
    spec: &DomainSpec,
    n: usize,
    strategy: Strategy,
    seed: u64,
) -> Result<FiniteMetricSpace> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    match (strategy, spec) {
        (Strategy::Grid, DomainSpec::Interval { length }) => {
            FiniteMetricSpace::from_coords(1, interval_linspace(*length, n))
        }
        _ => {
            let ladder = SampleLadder::new(spec, n, strategy, seed)?;
            let count = match strategy {
                Strategy::Grid => *ladder.levels().last().unwrap(),
                Strategy::FarthestPoint => n.min(ladder.len()),
            };
            ladder.prefix(count)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Converged,
    /// `N_max` reached before successive levels agreed within `tol`.
    BudgetExceeded,
    /// Levels agreed, but the grid spacing rule was not met.
    SpacingTooCoarse,
}

/// Refinement history of one magnitude estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    #[serde(rename = "R")]
    pub r: f64,
    /// `(n_points, magnitude lower bound)` per refinement level.
    pub estimates: Vec<(usize, f64)>,
    pub converged: bool,
    pub status: EstimateStatus,
    /// Best lower bound: the value at the last level.
    #[serde(rename = "final")]
    pub final_value: f64,
    /// Difference between the last two levels (NaN with a single level).
    pub delta_last: f64,
    pub condition_estimate: f64,
    /// Grid spacing of the last level, when sampling on a lattice.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spacing: Option<f64>,
    /// Advisory Richardson extrapolation of the last two levels, assuming
    /// the deficit decays like `N^-extrapolation_rate`. Not a bound.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub extrapolated: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub extrapolation_rate: Option<f64>,
    /// Change of the extrapolation when the last level is dropped.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub extrapolation_spread: Option<f64>,
}

/// Observed decay of the sampling deficit: first order in the spacing in
/// 3D (`N^-1/3`), second order on the line, where both endpoints are
/// sampled (`N^-2`).
fn deficit_rate(dim: usize) -> f64 {
    if dim == 1 {
        2.0
    } else {
        1.0 / dim as f64
    }
}

fn richardson(a: (usize, f64), b: (usize, f64), rate: f64) -> Option<f64> {
    let growth = (b.0 as f64 / a.0 as f64).powf(rate) - 1.0;
    (growth > 0.0).then(|| b.1 + (b.1 - a.1) / growth)
}

/// Reusable refinement ladder for one domain, strategy and seed.
pub struct Estimator {
    ladder: SampleLadder,
    strategy: Strategy,
}

impl Estimator {
    pub fn new(spec: &DomainSpec, n_max: usize, strategy: Strategy, seed: u64) -> Result<Self> {
        Ok(Self {
            ladder: SampleLadder::new(spec, n_max, strategy, seed)?,
            strategy,
        })
    }

    pub fn ladder(&self) -> &SampleLadder {
        &self.ladder
    }

    /// Walks the ladder at scale `r` until two successive levels differ by
    /// less than `tol` (absolute) or the ladder is exhausted.
    pub fn estimate(&self, r: f64, tol: f64) -> Result<EstimateReport> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidInput(format!("R must be positive, got {r}")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {tol}")));
        }
        let mut estimates: Vec<(usize, f64)> = Vec::new();
        let mut condition = f64::NAN;
        let mut spacing = None;
        let mut agreed = false;
        for (level, &n) in self.ladder.levels.iter().enumerate() {
            let space = self.ladder.prefix(n)?;
            let w = metric::weighting(&space, r)?;
            estimates.push((n, w.magnitude()));
            condition = w.condition_estimate;
            spacing = self.ladder.spacings[level];
            if let [.., (_, prev), (_, cur)] = estimates.as_slice() {
                if (cur - prev).abs() < tol {
                    agreed = true;
                    break;
                }
            }
        }
        let values: Vec<f64> = estimates.iter().map(|e| e.1).collect();
        let final_value = *values.last().unwrap();
        let delta_last = match values.as_slice() {
            [.., a, b] => b - a,
            _ => f64::NAN,
        };
        let spacing_ok = match (self.strategy, spacing) {
            (Strategy::Grid, Some(h)) => h * r <= MAX_GRID_SPACING_TIMES_R,
            (Strategy::Grid, None) => false,
            _ => true,
        };
        let status = match (agreed, spacing_ok) {
            (true, true) => EstimateStatus::Converged,
            (true, false) => EstimateStatus::SpacingTooCoarse,
            (false, _) => EstimateStatus::BudgetExceeded,
        };
        let k = estimates.len();
        let rate = deficit_rate(self.ladder.dim);
        let extrapolated = (k >= 2)
            .then(|| richardson(estimates[k - 2], estimates[k - 1], rate))
            .flatten();
        let previous = (k >= 3)
            .then(|| richardson(estimates[k - 3], estimates[k - 2], rate))
            .flatten();
        let extrapolation_spread = extrapolated.zip(previous).map(|(a, b)| (a - b).abs());
        Ok(EstimateReport {
            r,
            estimates,
            converged: status == EstimateStatus::Converged,
            status,
            final_value,
            delta_last,
            condition_estimate: condition,
            spacing,
            extrapolated,
            extrapolation_rate: extrapolated.map(|_| rate),
            extrapolation_spread,
        })
    }
}

/// Lower-bound estimate of the magnitude of `spec` at scale `r`.
pub fn estimate_magnitude(
    spec: &DomainSpec,
    r: f64,
    tol: f64,
    n_max: usize,
    strategy: Strategy,
    seed: u64,
) -> Result<EstimateReport> {
    Estimator::new(spec, n_max, strategy, seed)?.estimate(r, tol)
}

/// A sampled magnitude curve with the per-scale refinement reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveEstimate {
    pub curve: MagnitudeCurve,
    /// One entry per grid scale; `None` where the estimate failed.
    pub reports: Vec<Option<EstimateReport>>,
}

/// Estimates over a grid of scales. The sample ladder is built once and
/// reused; failures at individual scales are recorded, not fatal.
pub fn estimate_curve(
    spec: &DomainSpec,
    grid: &[f64],
    tol: f64,
    n_max: usize,
    strategy: Strategy,
    seed: u64,
) -> Result<CurveEstimate> {
    metric::check_grid(grid)?;
    let est = Estimator::new(spec, n_max, strategy, seed)?;
    let mut samples = Vec::with_capacity(grid.len());
    let mut reports = Vec::with_capacity(grid.len());
    for &r in grid {
        match est.estimate(r, tol) {
            Ok(rep) => {
                samples.push(MagnitudeSample {
                    r,
                    value: rep.final_value,
                    n_points: rep.estimates.last().unwrap().0,
                    condition_estimate: rep.condition_estimate,
                    failure: None,
                });
                reports.push(Some(rep));
            }
            Err(e) => {
                samples.push(MagnitudeSample::failed(r, 0, &e));
                reports.push(None);
            }
        }
    }
    Ok(CurveEstimate {
        curve: MagnitudeCurve { samples },
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_grid_of_three() {
        let s = sample_domain(&DomainSpec::interval(2.0), 3, Strategy::Grid, 0).unwrap();
        let (_, c) = s.points().unwrap();
        assert_eq!(c, &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn single_point_ball_sample_is_origin() {
        for strategy in [Strategy::Grid, Strategy::FarthestPoint] {
            let s = sample_domain(&DomainSpec::ball(1.0), 1, strategy, 7).unwrap();
            let (_, c) = s.points().unwrap();
            assert_eq!(c, &[0.0, 0.0, 0.0], "{strategy:?}");
        }
    }

    #[test]
    fn ellipsoid_samples_stay_inside() {
        let s = sample_domain(&DomainSpec::ellipsoid(0.5), 1000, Strategy::FarthestPoint, 3)
            .unwrap();
        let (dim, c) = s.points().unwrap();
        assert_eq!(s.len(), 1000);
        for p in c.chunks(dim) {
            assert!(p[0] * p[0] + p[1] * p[1] + p[2] * p[2] / 0.25 <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn ladders_are_nested_prefixes() {
        let l = SampleLadder::new(&DomainSpec::interval(1.0), 33, Strategy::Grid, 0).unwrap();
        assert_eq!(l.levels(), &[2, 3, 5, 9, 17, 33]);
        let pts: Vec<f64> = (0..l.len()).map(|i| l.point(i)[0]).collect();
        // every level is the uniform grid with its own spacing
        for &n in l.levels() {
            let mut lvl = pts[..n].to_vec();
            lvl.sort_by(f64::total_cmp);
            for (i, x) in lvl.iter().enumerate() {
                assert!((x - i as f64 / (n - 1) as f64).abs() < 1e-15);
            }
        }
        let g = SampleLadder::new(&DomainSpec::ball(1.0), 5000, Strategy::Grid, 0).unwrap();
        assert_eq!(g.levels()[0], 7);
        assert!(g.levels().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn farthest_point_is_deterministic() {
        let spec = DomainSpec::solid_torus(2.0, 0.5);
        let a = SampleLadder::new(&spec, 64, Strategy::FarthestPoint, 11).unwrap();
        let b = SampleLadder::new(&spec, 64, Strategy::FarthestPoint, 11).unwrap();
        assert_eq!(a.coords, b.coords);
        let c = SampleLadder::new(&spec, 64, Strategy::FarthestPoint, 12).unwrap();
        assert_ne!(a.coords, c.coords);
        for i in 0..a.len() {
            assert!(spec.contains(a.point(i)));
        }
    }

    #[test]
    fn interval_exact_values() {
        assert_eq!(interval_magnitude_exact(0.0, 3.0), 1.0);
        assert_eq!(interval_magnitude_exact(2.0, 1.0), 2.0);
        assert_eq!(interval_magnitude_exact(2.0, 10.0), 11.0);
    }

    #[test]
    fn interval_estimate_within_one_percent_from_below() {
        let rep = estimate_magnitude(&DomainSpec::interval(2.0), 1.0, 1e-3, 4096, Strategy::Grid, 0)
            .unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(rep.final_value <= 2.0 + 1e-9);
        assert!((rep.final_value - 2.0).abs() / 2.0 < 0.01);
        let fps = estimate_magnitude(
            &DomainSpec::interval(2.0),
            1.0,
            1e-3,
            4096,
            Strategy::FarthestPoint,
            5,
        )
        .unwrap();
        assert!(fps.final_value <= 2.0 + 1e-9);
        assert!((fps.final_value - 2.0).abs() / 2.0 < 0.01);
    }

    #[test]
    fn ball_at_small_scale_is_bounded() {
        let rep = estimate_magnitude(&DomainSpec::ball(1.0), 0.1, 1e-4, 512, Strategy::FarthestPoint, 1)
            .unwrap();
        assert!(rep.final_value >= 1.0);
        // the magnitude of any compact set is at most that of a larger ball;
        // the 3-ball at R = 0.1 has magnitude 1 + 2R + R^2 + R^3/6 (closed form)
        assert!(rep.final_value <= 1.0 + 0.2 + 0.01 + 0.001 / 6.0 + 1e-9);
    }

    #[test]
    fn grid_spacing_rule_flags_coarse_levels() {
        // 3D grid with few points cannot meet h R <= 0.25 at R = 4
        let rep = estimate_magnitude(&DomainSpec::ball(1.0), 4.0, 10.0, 300, Strategy::Grid, 0).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.status, EstimateStatus::SpacingTooCoarse);
    }

    #[test]
    fn report_json_has_named_fields() {
        let rep = estimate_magnitude(&DomainSpec::interval(1.0), 1.0, 1e-2, 64, Strategy::Grid, 0)
            .unwrap();
        let v = serde_json::to_value(&rep).unwrap();
        for key in ["R", "estimates", "converged", "final", "delta_last"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
